import pytest

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record sub-checks of one acceptance criterion: ``criterion(n, ok, detail)``."""
    results = request.config.stash.setdefault(_RESULTS, {})

    def record(n: int, ok: bool, detail: str):
        results.setdefault(n, []).append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        checks = results[n]
        status = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        detail = "; ".join(f"{d}{'' if ok else ' [red]'}" for ok, d in checks)
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
