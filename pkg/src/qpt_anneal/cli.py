"""Command-line entry point: ``qpt-anneal {run,converge,collapse,fit,critfunc}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import CONVERGENCE_AXES, ENGINES, ConfigError, RunConfig, load_config
from .models import ModelSpec
from .observables import ObservableTrace
from .runner import convergence_sweep, resolve_grid, run, sweep_for, write_json
from .scaling import (
    COLLAPSE_P0_TOL,
    COLLAPSE_Q_TOL,
    apt_window,
    collapse_metric,
    extract_critical_functions,
    fit_power_law,
    kzm_window,
    plateau_window,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
MIN_FIT_POINTS = 5

log = logging.getLogger("qpt_anneal")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _split(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.replace(",", " ").split()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a list of {kind.__name__}, got {text!r}") from None

    return parse


def _join(values):
    return [v for chunk in values for v in chunk] if values is not None else None


def _add_config_flags(p):
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--model", choices=["TFIM", "LMGM", "DICKE"])
    p.add_argument("--sizes", type=_split(int), nargs="+", help="qubit counts (even)")
    p.add_argument("--velocities", type=_split(float), nargs="+", help="sweep velocities")
    p.add_argument("--lambdas", type=_split(float), nargs="+", help="scaled velocities Lambda")
    p.add_argument("--kappa", type=_split(float), nargs="+", help="schedule exponents")
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--levels", type=int, help="tracked levels")
    p.add_argument("--M", type=int, dest="M", help="Dicke displaced-Fock truncation")
    p.add_argument("--out", help="output directory (default $QPT_ANNEAL_OUT or ./results)")
    p.add_argument("--workers", type=int, help="worker processes")


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    config = config.updated(
        model=args.model,
        sizes=_join(args.sizes),
        velocities=_join(args.velocities),
        lambdas=_join(args.lambdas),
        kappa=_join(args.kappa),
        engine=args.engine,
        levels=args.levels,
        M=args.M,
        out=args.out,
        workers=args.workers,
    )
    if args.lambdas is not None and args.velocities is None:
        config = config.updated(velocities=[])
    if args.velocities is not None and args.lambdas is None:
        config = config.updated(lambdas=[])
    return config.validate()


def _print_json(payload):
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_run(args) -> int:
    config = _resolve_config(args)
    if args.dry_run:
        points = resolve_grid(config)
        for p in points:
            print(f"{p.model} N={p.N} velocity={p.velocity!r} kappa={p.kappa!r} Lambda={p.Lambda!r} -> {p.model}/{p.dirname}")
        print(f"{len(points)} grid points, output {config.output_dir}")
        return EXIT_OK
    out_dir, report = run(config)
    for r in report["points"]:
        tail = f"Q_f={r['Q_final']!r} p0_f={r['p0_final']!r}" if r["status"] == "ok" else r["error"]
        print(f"{r['status']:6s} {r['dir']}  {tail}")
    for c in report["collapse"]:
        print(f"collapse N={c['N']} Lambda={c['Lambda']!r}: {c['status']}")
    for f in report["fits"]:
        slope = f"slope={f['slope']:.4f}" if f["status"] == "ok" else f["error"]
        print(f"fit N={f['N']} kappa={f['kappa']!r}: {slope}")
    print(f"report: {out_dir / config.kind.value / 'report.json'}")
    return EXIT_PARTIAL if report["failures"] else EXIT_OK


def cmd_converge(args) -> int:
    config = _resolve_config(args)
    values = _join(args.values)
    table = convergence_sweep(config, args.axis, values=values, gate=args.gate)
    payload = table.as_dict()
    write_json(config.output_dir / config.kind.value / f"converge_{args.axis}.json", payload)
    _print_json(payload)
    return EXIT_OK if table.converged else EXIT_PARTIAL


def cmd_collapse(args) -> int:
    a, b = ObservableTrace.from_csv(args.trace_a), ObservableTrace.from_csv(args.trace_b)
    rep = collapse_metric(a, b, tuple(args.window))
    payload = rep.as_dict()
    payload["passed"] = rep.passed(args.q_tol, args.p0_tol)
    _print_json(payload)
    return EXIT_OK if payload["passed"] else EXIT_PARTIAL


def _final_values(paths):
    rows = []
    for path in paths:
        tr = ObservableTrace.from_csv(path)
        m = tr.metadata
        rows.append((float(m["velocity"]), float(m["Lambda"]), float(tr.Q[-1]), float(tr.Q_scaled[-1]), float(1 - tr.p0[-1])))
    return np.array(rows)


def cmd_fit(args) -> int:
    if len(args.traces) < MIN_FIT_POINTS:
        raise ValueError(f"{len(args.traces)} traces given, need {MIN_FIT_POINTS}")
    data = _final_values(args.traces)
    v, L, Q, Qs, pex = data.T
    a = L if args.abscissa == "Lambda" else v
    if args.window:
        window = tuple(args.window)
    elif args.rule == "population":
        window = kzm_window(L, pex)
    elif args.rule == "plateau":
        window = plateau_window(a, Q)
    else:
        window = apt_window(v, Qs)
    fit = fit_power_law(a, Q, window, kind=args.abscissa, min_points=MIN_FIT_POINTS)
    payload = fit.as_dict()
    payload["rule"] = "explicit" if args.window else args.rule
    _print_json(payload)
    return EXIT_OK


def cmd_critfunc(args) -> int:
    config = _resolve_config(args)
    sweeps = [sweep_for(config, N) for N in config.sizes]
    table = extract_critical_functions(sweeps, pair=tuple(args.pair), x_window=tuple(args.x_window) if args.x_window else None)
    path = args.csv or config.output_dir / config.kind.value / f"critfunc_{args.pair[0]}{args.pair[1]}.csv"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path)
    print(f"{table.x.size} rows for N={table.sizes} -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpt-anneal", description="Quenches across quantum phase transitions in TFIM, LMGM and Dicke models.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="evolve every grid point and write traces and report.json")
    _add_config_flags(p)
    p.add_argument("--dry-run", action="store_true", help="print the resolved grid and exit")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="convergence gate along M, n_levels or photon_cap")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, choices=CONVERGENCE_AXES)
    p.add_argument("--values", type=_split(int), nargs="+", help="explicit axis values (default: doubling)")
    p.add_argument("--gate", type=float, help="relative final-Q change that counts as converged")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("collapse", help="collapse metric between two traces at equal Lambda")
    p.add_argument("trace_a", type=Path)
    p.add_argument("trace_b", type=Path)
    p.add_argument("--window", type=float, nargs=2, default=[-10.0, 10.0], metavar=("LO", "HI"))
    p.add_argument("--q-tol", type=float, default=COLLAPSE_Q_TOL)
    p.add_argument("--p0-tol", type=float, default=COLLAPSE_P0_TOL)
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("fit", help="power-law fit of final heating over several traces")
    p.add_argument("traces", type=Path, nargs="+")
    p.add_argument("--abscissa", choices=["velocity", "Lambda"], default="Lambda")
    p.add_argument("--rule", choices=["population", "plateau", "apt"], default="population")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("critfunc", help="critical-function table C, D on the x axis")
    _add_config_flags(p)
    p.add_argument("--pair", type=int, nargs=2, default=[1, 0], metavar=("N", "M"))
    p.add_argument("--x-window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_critfunc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "critfunc" and not (args.velocities or args.lambdas or args.config):
        # critical functions need no velocity axis
        args.velocities = [[1.0]]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
