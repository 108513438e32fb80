"""Grid orchestration: sweeps, engines, trace files, reports and convergence gates."""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import groupby
from pathlib import Path

import numpy as np

from .config import CONVERGENCE_AXES, ConfigError, RunConfig
from .dynamics import (
    IntegratorSettings,
    ScaledTables,
    evolve_direct_reference,
    evolve_direct_tfim,
    evolve_eigenbasis,
    evolve_scaled,
)
from .dynamics.core import DIRECT_SETTINGS
from .models import ModelKind, ModelSpec
from .observables import ObservableTrace, emit_trace
from .scaling import apt_window, collapse_metric, fit_power_law, kzm_window
from .schedule import AnnealingSchedule, scaled_velocity, velocity_for_scaled
from .spectral import SpectralSweep, snapshot_grid, spectral_sweep

log = logging.getLogger(__name__)

M_CAP = 64
LEVELS_CAP = 160
PHOTON_CAP = 480


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


@dataclass(frozen=True)
class GridPoint:
    model: str
    N: int
    velocity: float
    kappa: float
    Lambda: float

    @property
    def dirname(self) -> str:
        return f"N{self.N}_v{_fmt(self.velocity)}_k{_fmt(self.kappa)}"

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def resolve_grid(config: RunConfig) -> list:
    """Grid points in deterministic order: size, then kappa, then velocity axis."""
    config.validate()
    kind = config.kind
    points = []
    for N in config.sizes:
        spec = ModelSpec(kind, N, config.M)
        for kappa in config.kappa:
            exps = spec.exponents(kappa)
            if config.lambdas:
                pairs = [(velocity_for_scaled(L, N, exps), L) for L in config.lambdas]
            else:
                pairs = []
                for v in config.velocities:
                    sched = AnnealingSchedule(v, kappa, config.lambda_start, config.lambda_end)
                    pairs.append((v, scaled_velocity(N, sched, exps)))
            points.extend(GridPoint(kind.value, N, float(v), float(kappa), float(L)) for v, L in pairs)
    return points


# --------------------------------------------------------------------------
# single point


@lru_cache(maxsize=8)
def _cached_sweep(kind: str, N: int, M: int, levels, lam_start, lam_end, x_window, n_window, outer_step):
    spec = ModelSpec(ModelKind(kind), N, M)
    grid = snapshot_grid(N, spec.exponents().nu, lam_start, lam_end, x_window, n_window, outer_step)
    return spectral_sweep(spec, grid, n_levels=levels)


def sweep_for(config: RunConfig, N: int, M: int | None = None, levels=None) -> SpectralSweep:
    return _cached_sweep(
        config.kind.value,
        N,
        config.M if M is None else M,
        config.levels if levels is None else levels,
        config.lambda_start,
        config.lambda_end,
        config.x_window,
        config.n_window,
        config.outer_step,
    )


def evolve_point(config: RunConfig, point: GridPoint, M=None, levels=None, photon_cap=None):
    """Run one engine at one grid point; returns ``(trace, spec, schedule)``."""
    spec = ModelSpec(config.kind, point.N, config.M if M is None else M)
    schedule = AnnealingSchedule(point.velocity, point.kappa, config.lambda_start, config.lambda_end)
    settings = IntegratorSettings(n_output=config.n_output)
    if config.engine == "direct":
        direct = dataclasses.replace(DIRECT_SETTINGS, n_output=config.n_output)
        if spec.kind is ModelKind.TFIM:
            trace = evolve_direct_tfim(spec.N, schedule, direct)
        else:
            trace = evolve_direct_reference(
                spec,
                schedule,
                direct,
                n_levels=levels or config.levels or 20,
                photon_cap=photon_cap or config.photon_cap,
            )
        return trace, spec, schedule
    sw = sweep_for(config, spec.N, spec.M, levels)
    if config.engine == "scaled":
        tables = ScaledTables.from_sweep(sw)
        scale = tables.x_scale
        trace = evolve_scaled(
            tables,
            point.Lambda,
            spec.exponents(),
            kappa=point.kappa,
            x_start=scale * config.lambda_start,
            x_end=scale * config.lambda_end,
            settings=settings,
        )
    else:
        trace = evolve_eigenbasis(sw, schedule, settings=settings)
    return trace, spec, schedule


def run_point(config: RunConfig, point: GridPoint, out_dir: Path) -> dict:
    """Evolve one point and write its trace; failures are returned, not raised."""
    record = {"point": point.as_dict(), "dir": f"{point.model}/{point.dirname}"}
    try:
        trace, spec, schedule = evolve_point(config, point)
        obs = emit_trace(trace, spec, schedule, n_report=config.n_report, Lambda=point.Lambda)
        obs.check_invariants()
        target = out_dir / point.model / point.dirname
        target.mkdir(parents=True, exist_ok=True)
        tmp = target / "trace.csv.tmp"
        obs.to_csv(tmp)
        os.replace(tmp, target / "trace.csv")
    except Exception as exc:  # noqa: BLE001 - every failure is recorded per point
        log.error("grid point %s failed: %s", point.dirname, exc)
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return record
    record.update(
        status="ok",
        Q_final=float(obs.Q[-1]),
        Q_scaled_final=float(obs.Q_scaled[-1]),
        p0_final=float(obs.p0[-1]),
        p_excited=float(1.0 - obs.p0[-1]),
        norm_drift=float(obs.metadata["norm_drift"]),
    )
    return record


def _run_point_task(args):
    config, point, out_dir = args
    return run_point(config, point, Path(out_dir))


# --------------------------------------------------------------------------
# whole run


def _collapse_reports(config: RunConfig, records: list, out_dir: Path) -> list:
    if not config.collapse or not config.lambdas or len(config.sizes) < 2:
        return []
    ok = {(r["point"]["N"], r["point"]["kappa"], r["point"]["Lambda"]): r for r in records if r["status"] == "ok"}
    sizes = sorted(config.sizes)
    reports = []
    for kappa in config.kappa:
        for L in config.lambdas:
            for Na, Nb in zip(sizes, sizes[1:]):
                entry = {"N": [Na, Nb], "kappa": kappa, "Lambda": L}
                ra, rb = ok.get((Na, kappa, L)), ok.get((Nb, kappa, L))
                if ra is None or rb is None:
                    entry.update(status="skipped", error="missing trace")
                    reports.append(entry)
                    continue
                try:
                    ta = ObservableTrace.from_csv(out_dir / ra["dir"] / "trace.csv")
                    tb = ObservableTrace.from_csv(out_dir / rb["dir"] / "trace.csv")
                    rep = collapse_metric(ta, tb, tuple(config.collapse_window))
                    entry.update(rep.as_dict())
                    entry["status"] = "pass" if rep.passed(config.collapse_q_tol, config.collapse_p0_tol) else "fail"
                except Exception as exc:  # noqa: BLE001
                    entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
                reports.append(entry)
    return reports


def _fit_reports(config: RunConfig, records: list) -> list:
    if not config.fit:
        return []
    reports = []
    ok = [r for r in records if r["status"] == "ok"]
    key = lambda r: (r["point"]["N"], r["point"]["kappa"])  # noqa: E731
    for (N, kappa), group in groupby(sorted(ok, key=key), key=key):
        group = list(group)
        if len(group) < 5:
            continue
        entry = {"N": N, "kappa": kappa, "abscissa": config.axis_kind}
        try:
            Qf = np.array([r["Q_final"] for r in group])
            if config.lambdas:
                a = np.array([r["point"]["Lambda"] for r in group])
                window = kzm_window(a, np.array([r["p_excited"] for r in group]))
            else:
                a = np.array([r["point"]["velocity"] for r in group])
                window = apt_window(a, np.array([r["Q_scaled_final"] for r in group]))
            entry.update(fit_power_law(a, Qf, window, kind=config.axis_kind).as_dict())
            entry["status"] = "ok"
        except Exception as exc:  # noqa: BLE001
            entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        reports.append(entry)
    return reports


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def run(config: RunConfig) -> tuple:
    """Run every grid point and the requested analyses; returns ``(out_dir, report)``."""
    points = resolve_grid(config)
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(config, p, str(out_dir)) for p in points]
    if config.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_point_task, tasks))
    else:
        records = [_run_point_task(t) for t in tasks]
    report = {
        "config": {k: v for k, v in config.as_dict().items() if k not in ("out", "workers")},
        "points": records,
        "collapse": _collapse_reports(config, records, out_dir),
        "fits": _fit_reports(config, records),
        "failures": sum(r["status"] != "ok" for r in records),
    }
    write_json(out_dir / config.kind.value / "report.json", report)
    return out_dir, report


# --------------------------------------------------------------------------
# convergence gates


@dataclass
class ConvergenceTable:
    axis: str
    values: list
    Q_final: list
    p0_final: list
    Q_change: list
    p0_change: list
    E0_change: list
    gate: float
    converged_value: int | None
    residual: float | None

    @property
    def converged(self) -> bool:
        return self.converged_value is not None

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["status"] = "converged" if self.converged else "failed"
        return d


def _doubling(start: int, cap: int) -> list:
    out = [start]
    while out[-1] * 2 <= cap:
        out.append(out[-1] * 2)
    return out


def _rel(a, b) -> float:
    return float(abs(a - b) / abs(b)) if b != 0 else float(abs(a - b))


def convergence_sweep(config: RunConfig, axis: str, values=None, gate: float | None = None) -> ConvergenceTable:
    """Repeat the first grid point while stepping ``axis`` until final ``Q`` settles.

    ``values`` defaults to doubling from the configured value up to a cap.
    For ``M`` the maximum relative ground-energy change over the snapshot grid
    is reported as well.
    """
    if axis not in CONVERGENCE_AXES:
        raise ConfigError(f"unknown convergence axis {axis!r}; expected one of {', '.join(CONVERGENCE_AXES)}")
    kind = config.validate().kind
    if axis in ("M", "photon_cap") and kind is not ModelKind.DICKE:
        raise ConfigError(f"axis {axis!r} only applies to DICKE")
    if axis == "n_levels" and kind is ModelKind.TFIM:
        raise ConfigError("TFIM blocks are exact with two levels; axis 'n_levels' does not apply")
    gate = config.gate if gate is None else gate
    point = resolve_grid(config)[0]
    if values is None:
        if axis == "M":
            values = _doubling(config.M, M_CAP)
        elif axis == "n_levels":
            spec = ModelSpec(kind, point.N, config.M)
            start = config.levels or 20
            values = [v for v in _doubling(start, LEVELS_CAP) if v <= spec.dimension]
        else:
            values = _doubling(config.photon_cap, PHOTON_CAP)
    values = [int(v) for v in values]
    if len(values) < 2:
        raise ConfigError(f"convergence along {axis!r} needs at least two values, got {values}")
    base = config
    if axis == "photon_cap":
        base = config.updated(engine="direct")
    elif config.engine == "direct":
        base = config.updated(engine="eigenbasis")
    Qs, p0s = [], []
    dQ, dp, dE = [], [], []
    converged, residual = None, None
    for i, v in enumerate(values):
        kw = {"M": v} if axis == "M" else {"levels": v} if axis == "n_levels" else {"photon_cap": v}
        trace, spec, schedule = evolve_point(base, point, **kw)
        obs = emit_trace(trace, spec, schedule, Lambda=point.Lambda)
        Qs.append(float(obs.Q[-1]))
        p0s.append(float(obs.p0[-1]))
        if i == 0:
            continue
        dQ.append(_rel(Qs[-1], Qs[-2]))
        dp.append(abs(p0s[-1] - p0s[-2]))
        if axis == "M":
            # different M refine the sweep grid differently; compare on the shared lambdas
            prev, cur = sweep_for(base, point.N, M=values[i - 1]), sweep_for(base, point.N, M=v)
            common, ia, ib = np.intersect1d(prev.lam, cur.lam, return_indices=True)
            a, b = prev.energies[ia, 0, 0], cur.energies[ib, 0, 0]
            dE.append(float(np.max(np.abs(a - b) / np.abs(b))))
        residual = dQ[-1]
        if residual < gate and converged is None:
            converged = values[i - 1]
            values = values[: i + 1]
            break
    return ConvergenceTable(axis, values, Qs, p0s, dQ, dp, dE, gate, converged, residual)
