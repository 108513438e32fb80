"""Critical functions, collapse metrics and power-law fits."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import trapezoid
from scipy.stats import linregress

from .observables import ObservableTrace
from .schedule import ScalingExponents
from .spectral import SpectralSweep

log = logging.getLogger(__name__)

COLLAPSE_Q_TOL = 0.03
COLLAPSE_P0_TOL = 0.02


# --------------------------------------------------------------------------
# critical functions


@dataclass
class CriticalFunctionTable:
    """``C = N**(-1/nu) chi_nm`` and ``D = N**z Delta_nm`` on the ``x`` axis.

    Rows from several sizes are stacked; ``N_source`` names the size of each row.
    """

    model: str
    pair: tuple
    x: np.ndarray
    C: np.ndarray
    D: np.ndarray
    N_source: np.ndarray
    exps: ScalingExponents

    @property
    def sizes(self) -> list:
        return sorted(set(int(n) for n in self.N_source))

    def for_size(self, N: int):
        sel = self.N_source == N
        if not np.any(sel):
            raise KeyError(f"no rows for N={N}")
        return self.x[sel], self.C[sel], self.D[sel]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "C", "D", "N_source"])
            for x, c, d, n in zip(self.x, self.C, self.D, self.N_source):
                w.writerow([repr(float(x)), repr(float(c)), repr(float(d)), int(n)])


def extract_critical_functions(
    sweeps: Sequence[SpectralSweep],
    pair=(1, 0),
    exps: ScalingExponents | None = None,
    x_window: tuple | None = None,
) -> CriticalFunctionTable:
    """Rescale ``chi`` and ``Delta`` of one level pair onto ``x`` and merge across sizes.

    TFIM uses the critical momentum block.
    """
    if not sweeps:
        raise ValueError("no sweeps given")
    kinds = {sw.spec.kind for sw in sweeps}
    if len(kinds) != 1:
        raise ValueError(f"sweeps mix models {sorted(k.value for k in kinds)}")
    kind = kinds.pop()
    if exps is None:
        exps = sweeps[0].spec.exponents()
    for sw in sweeps:
        own = sw.spec.exponents()
        if (own.nu, own.z) != (exps.nu, exps.z):
            raise ValueError(f"exponents (nu={exps.nu}, z={exps.z}) inconsistent with {sw.spec.label}")
    n, m = pair
    xs, Cs, Ds, Ns = [], [], [], []
    for sw in sweeps:
        N = sw.spec.N
        b = sw.default_sector()
        x = sw.x(exps.nu)
        C = sw.chi[:, b, n, m] * float(N) ** (-1.0 / float(exps.nu))
        D = (sw.energies[:, b, n] - sw.energies[:, b, m]) * float(N) ** float(exps.z)
        sel = np.ones(x.size, bool) if x_window is None else (x >= x_window[0]) & (x <= x_window[1])
        xs.append(x[sel])
        Cs.append(C[sel])
        Ds.append(D[sel])
        Ns.append(np.full(int(sel.sum()), N))
    return CriticalFunctionTable(
        kind.value, tuple(pair), np.concatenate(xs), np.concatenate(Cs), np.concatenate(Ds), np.concatenate(Ns), exps
    )


def loglog_slope(x, y, window):
    """Least-squares slope of ``log|y|`` against ``log|x|`` for ``x`` in ``window``."""
    x = np.asarray(x)
    y = np.asarray(y)
    sel = (x >= window[0]) & (x <= window[1]) & (y != 0)
    if np.count_nonzero(sel) < 2:
        raise ValueError(f"fewer than two points in window {window}")
    return float(np.polyfit(np.log(np.abs(x[sel])), np.log(np.abs(y[sel])), 1)[0])


def size_mismatch(table: CriticalFunctionTable, N_a: int, N_b: int, window, which: str = "C") -> float:
    """Relative sup-norm gap between the curves of two sizes on their shared ``x`` window."""
    xa, Ca, Da = table.for_size(N_a)
    xb, Cb, Db = table.for_size(N_b)
    ya, yb = (Ca, Cb) if which == "C" else (Da, Db)
    lo = max(window[0], xa.min(), xb.min())
    hi = min(window[1], xa.max(), xb.max())
    if not lo < hi:
        raise ValueError("no shared x support")
    grid = np.linspace(lo, hi, 1001)
    fa = CubicSpline(xa, ya)(grid)
    fb = CubicSpline(xb, yb)(grid)
    return float(np.max(np.abs(fa - fb)) / max(np.max(np.abs(fa)), np.max(np.abs(fb))))


# --------------------------------------------------------------------------
# collapse


@dataclass
class CollapseReport:
    pair: tuple
    window: tuple
    Lambda: float
    q_deviation: float
    p0_deviation: float
    p0_mean_deviation: float

    def passed(self, q_tol: float = COLLAPSE_Q_TOL, p0_mean_tol: float = COLLAPSE_P0_TOL) -> bool:
        return self.q_deviation <= q_tol and self.p0_mean_deviation <= p0_mean_tol

    def as_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "window": list(self.window),
            "Lambda": self.Lambda,
            "q_deviation": self.q_deviation,
            "p0_deviation": self.p0_deviation,
            "p0_mean_deviation": self.p0_mean_deviation,
        }


def _trace_id(tr: ObservableTrace) -> str:
    m = tr.metadata
    return f"{m.get('model')}:N={m.get('N')}"


def collapse_metric(
    trace_a: ObservableTrace,
    trace_b: ObservableTrace,
    window=(-10.0, 10.0),
    n_grid: int = 2001,
    Lambda_rtol: float = 1e-12,
) -> CollapseReport:
    """Compare two traces of one model at equal ``Lambda`` on a common ``x`` grid.

    ``q_deviation`` is ``max|Qa - Qb| / max(max|Qa|, max|Qb|)`` of ``Q * N**z``;
    ``p0_deviation`` is the sup-norm of ``p0a - p0b``; ``p0_mean_deviation``
    compares the window averages of ``p0``, which is insensitive to the
    desynchronized oscillations.
    """
    ma, mb = trace_a.metadata, trace_b.metadata
    if ma.get("model") != mb.get("model"):
        raise ValueError("traces come from different models")
    La, Lb = float(ma["Lambda"]), float(mb["Lambda"])
    if abs(La - Lb) > Lambda_rtol * max(abs(La), abs(Lb)):
        raise ValueError(f"Lambda mismatch: {La!r} vs {Lb!r}")
    lo, hi = window
    for tr in (trace_a, trace_b):
        if lo < tr.x.min() or hi > tr.x.max():
            raise ValueError(f"window {window} outside trace {_trace_id(tr)} x-range [{tr.x.min()}, {tr.x.max()}]")
    grid = np.linspace(lo, hi, n_grid)
    qa = CubicSpline(trace_a.x, trace_a.Q_scaled)(grid)
    qb = CubicSpline(trace_b.x, trace_b.Q_scaled)(grid)
    pa = CubicSpline(trace_a.x, trace_a.p0)(grid)
    pb = CubicSpline(trace_b.x, trace_b.p0)(grid)
    scale = max(np.max(np.abs(qa)), np.max(np.abs(qb)))
    q_dev = float(np.max(np.abs(qa - qb)) / scale) if scale > 0 else 0.0
    p_dev = float(np.max(np.abs(pa - pb)))
    mean_dev = float(abs(trapezoid(pa - pb, grid)) / (hi - lo))
    return CollapseReport((_trace_id(trace_a), _trace_id(trace_b)), (lo, hi), La, q_dev, p_dev, mean_dev)


# --------------------------------------------------------------------------
# power laws


@dataclass
class PowerLawFit:
    abscissa: str
    window: tuple
    slope: float
    intercept: float
    stderr: float
    r2: float
    n_points: int
    dropped: int = 0

    def as_dict(self) -> dict:
        return {
            "abscissa": self.abscissa,
            "window": list(self.window),
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r2": self.r2,
            "n_points": self.n_points,
            "dropped": self.dropped,
        }


def fit_power_law(abscissa, Q_final, window=None, kind: str = "velocity", min_points: int = 5) -> PowerLawFit:
    """Least-squares line through ``(log abscissa, log Q_f)`` inside ``window``."""
    a = np.asarray(abscissa, dtype=float)
    q = np.asarray(Q_final, dtype=float)
    if window is None:
        window = (a.min(), a.max())
    lo, hi = window
    if not lo <= hi:
        raise ValueError(f"empty fit window {window}")
    inside = (a >= lo) & (a <= hi)
    good = inside & (q > 0)
    dropped = int(np.count_nonzero(inside & ~good))
    if dropped:
        log.warning("dropped %d non-positive heating samples from the fit", dropped)
    if np.count_nonzero(good) < min_points:
        raise ValueError(f"only {np.count_nonzero(good)} usable samples in window {window}, need {min_points}")
    res = linregress(np.log(a[good]), np.log(q[good]))
    if not np.isfinite(res.slope):
        raise ValueError("non-finite slope")
    return PowerLawFit(kind, (float(lo), float(hi)), float(res.slope), float(res.intercept), float(res.stderr), float(res.rvalue**2), int(good.sum()), dropped)


def kzm_window(Lambdas, p_excited, p_lo: float = 0.05, p_hi: float = 0.5):
    """One decade of Lambda centred (in log) on the samples with ``p_lo <= p_excited <= p_hi``."""
    L = np.asarray(Lambdas, dtype=float)
    p = np.asarray(p_excited, dtype=float)
    sel = (p >= p_lo) & (p <= p_hi)
    if not np.any(sel):
        raise ValueError(f"no sample with {p_lo} <= p_excited <= {p_hi}")
    centre = 0.5 * (np.log10(L[sel].min()) + np.log10(L[sel].max()))
    return 10 ** (centre - 0.5), 10 ** (centre + 0.5)


def plateau_window(abscissa, Q_final, decades: float = 1.0, min_points: int = 5):
    """The ``decades``-wide window where the log-log curve is straightest.

    Each sample opens a candidate window; the quadratic coefficient of a
    log-log fit measures its curvature and the flattest candidate wins.
    """
    a = np.asarray(abscissa, dtype=float)
    q = np.asarray(Q_final, dtype=float)
    good = q > 0
    a, q = a[good], q[good]
    order = np.argsort(a)
    a, q = a[order], q[order]
    best = None
    for lo in a:
        hi = lo * 10**decades
        if hi > a[-1] * (1 + 1e-12):
            break
        sel = (a >= lo) & (a <= hi * (1 + 1e-12))
        if np.count_nonzero(sel) < min_points:
            continue
        curvature = abs(np.polyfit(np.log(a[sel]), np.log(q[sel]), 2)[0])
        if best is None or curvature < best[0]:
            best = (curvature, lo, hi)
    if best is None:
        raise ValueError(f"no {decades}-decade window with {min_points} positive samples")
    return best[1], best[2]


def apt_window(velocities, Q_scaled_final, threshold: float = 1e-2):
    """The lowest sampled velocity decade, cut where ``Q_f * N**z`` exceeds ``threshold``."""
    v = np.asarray(velocities, dtype=float)
    q = np.asarray(Q_scaled_final, dtype=float)
    lo = v.min()
    if q[np.argmin(v)] > threshold:
        raise ValueError(f"slowest sample already has Q_f N^z > {threshold}")
    above = v[q > threshold]
    hi = min(10 * lo, above.min()) if above.size else 10 * lo
    ok = v[(v >= lo) & (v <= hi) & (q <= threshold)]
    return lo, float(ok.max())


# --------------------------------------------------------------------------
# DM / LMGM shape comparison


@dataclass
class RescaleReport:
    alphas: np.ndarray
    residuals: np.ndarray
    best_alpha: float
    best_residual: float

    def as_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "residuals": [float(r) for r in self.residuals],
            "best_alpha": self.best_alpha,
            "best_residual": self.best_residual,
        }


def universality_rescale_check(table_dm, table_lmgm, alphas=None, n_grid: int = 801) -> RescaleReport:
    """Relative sup-norm of ``alpha |C_DM(alpha x)| - |C_LMGM(x)|`` over a grid of ``alpha``.

    Each table is used at its largest size.  The sign of ``C`` follows the
    eigenvector phase convention of each model, so only magnitudes are compared.
    """
    xd, Cd, _ = table_dm.for_size(table_dm.sizes[-1])
    xl, Cl, _ = table_lmgm.for_size(table_lmgm.sizes[-1])
    Cd, Cl = np.abs(Cd), np.abs(Cl)
    if alphas is None:
        alphas = np.logspace(-1, 1, 201)
    alphas = np.asarray(alphas, dtype=float)
    f_dm = CubicSpline(xd, Cd)
    f_lm = CubicSpline(xl, Cl)
    residuals = np.full(alphas.size, np.inf)
    for i, a in enumerate(alphas):
        lo = max(xl.min(), xd.min() / a)
        hi = min(xl.max(), xd.max() / a)
        if not lo < hi:
            continue
        grid = np.linspace(lo, hi, n_grid)
        ref = f_lm(grid)
        residuals[i] = np.max(np.abs(a * f_dm(a * grid) - ref)) / np.max(np.abs(ref))
    if not np.any(np.isfinite(residuals)):
        raise ValueError("tables have no overlapping x support for any alpha")
    k = int(np.argmin(residuals))
    log.info("alpha sweep: best alpha %.6g residual %.6g", alphas[k], residuals[k])
    return RescaleReport(alphas, residuals, float(alphas[k]), float(residuals[k]))
