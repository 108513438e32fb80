"""Instantaneous eigen-decomposition along a lambda sweep.

Eigenvectors are sign-aligned between neighbouring grid points and tracked by
maximum overlap, so that level ``n`` labels one continuously deformed state.
Transition amplitudes ``chi[n, m] = -<n|d/dlambda|m>`` come from
``V[n, m] / (E_n - E_m)`` and, for (near-)degenerate pairs, from a central
finite difference of tracked eigenvectors written in a common basis.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .models import ModelKind, ModelSpec, build_system, momenta
from .models._linalg import EigensolverError, apply
from .models.tfim import block_stack, critical_momentum, interaction_stack

log = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-10
MATCH_THRESHOLD = 0.5
TIE_TOL = 1e-3


@dataclass
class SpectralSnapshot:
    """Tracked spectrum at one lambda.

    ``chi`` and ``V`` are indexed ``[n, m]``; ``vectors`` holds columns in the
    model's reduced basis and may be ``None`` when not kept.
    """

    lam: float
    energies: np.ndarray
    chi: np.ndarray
    V: np.ndarray | None = None
    vectors: np.ndarray | None = None

    @property
    def n_levels(self) -> int:
        return self.energies.size

    @property
    def gaps(self) -> np.ndarray:
        """``Delta[n, m] = E_n - E_m``."""
        return self.energies[:, None] - self.energies[None, :]


def degeneracy_threshold(energies, rtol: float = DEGENERACY_RTOL) -> float:
    """Gap below which two levels count as degenerate (relative to the spectral span)."""
    energies = np.asarray(energies)
    span = float(energies.max() - energies.min()) if energies.size > 1 else 0.0
    return rtol * max(span, 1.0)


def _as_system(model, k=None):
    if isinstance(model, ModelSpec):
        return build_system(model, k)
    return model


def diagonalize(model, lam: float, n_levels: int, k: float | None = None):
    """Lowest ``n_levels`` eigenpairs of a model's reduced Hamiltonian at ``lam``.

    ``model`` is a :class:`ModelSpec` or an already built system; TFIM specs
    need the block momentum ``k``.
    """
    system = _as_system(model, k)
    if n_levels > system.dimension:
        raise ValueError(f"n_levels={n_levels} exceeds the effective dimension {system.dimension}")
    try:
        energies, vectors = system.eigh(lam, n_levels)
    except EigensolverError as exc:
        raise EigensolverError(f"diagonalization failed at lambda={lam!r}: {exc}") from exc
    return np.asarray(energies), np.asarray(vectors)


def fix_initial_signs(vectors: np.ndarray) -> np.ndarray:
    """First-snapshot convention: the largest-magnitude component of each column is positive."""
    vectors = np.array(vectors, copy=True)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def align_phases(previous, current, overlap=None, threshold: float = MATCH_THRESHOLD):
    """Flip column signs of ``current`` so each overlaps positively with ``previous``.

    ``overlap`` is the basis overlap ``<B(prev)|B(cur)>`` when the basis moves.
    Columns whose overlap magnitude falls below ``threshold`` are logged as
    possible level crossings.
    """
    previous = np.asarray(previous)
    current = np.asarray(current)
    right = current if overlap is None else overlap @ current
    d = np.einsum("ij,ij->j", previous, right)
    weak = np.flatnonzero(np.abs(d) < threshold)
    if weak.size:
        log.warning("weak overlap for columns %s (possible level crossing)", weak.tolist())
    signs = np.where(d < 0, -1.0, 1.0)
    return current * signs


@dataclass
class TrackResult:
    """Outcome of matching one raw eigen-decomposition onto the tracked levels."""

    permutation: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    weak: list = field(default_factory=list)
    ties: list = field(default_factory=list)

    def snapshot(self, lam, chi=None, V=None) -> SpectralSnapshot:
        if chi is None:
            chi = np.zeros((self.energies.size,) * 2)
        return SpectralSnapshot(lam, self.energies, chi, V, self.vectors)


def track_levels(
    previous,
    energies,
    vectors,
    overlap=None,
    match_threshold: float = MATCH_THRESHOLD,
    tie_tol: float = TIE_TOL,
) -> TrackResult:
    """Assign raw eigenpairs to the tracked levels of ``previous`` by maximum overlap.

    ``previous`` is a :class:`SpectralSnapshot` (with vectors) or an
    ``(energies, vectors)`` pair.  ``energies``/``vectors`` may hold more
    candidates than tracked levels.  ``permutation[n]`` is the raw column that
    continues tracked level ``n``.  When two candidates overlap a tracked level
    within ``tie_tol`` of each other, the one with the smaller energy change wins.
    """
    if isinstance(previous, SpectralSnapshot):
        prev_e, prev_v = previous.energies, previous.vectors
        if prev_v is None:
            raise ValueError("previous snapshot carries no eigenvectors")
    else:
        prev_e, prev_v = previous
    prev_e = np.asarray(prev_e)
    energies = np.asarray(energies)
    vectors = np.asarray(vectors)
    L = prev_v.shape[1]
    if vectors.shape[1] < L:
        raise ValueError(f"need at least {L} candidate levels, got {vectors.shape[1]}")

    right = vectors if overlap is None else overlap @ vectors
    W = np.abs(prev_v.T @ right)
    rows, cols = linear_sum_assignment(-W)
    perm = cols[np.argsort(rows)]

    ties = []
    cost = -W.copy()
    scale = max(float(np.ptp(energies)), 1.0)
    for n in range(L):
        best = W[n, perm[n]]
        close = np.flatnonzero(W[n] >= best - tie_tol)
        if close.size > 1:
            de = np.abs(energies[close] - prev_e[n]) / scale
            cost[n, close] = -best - 1.0 + de
            ties.append(n)
    if ties:
        rows, cols = linear_sum_assignment(cost)
        perm = cols[np.argsort(rows)]
        log.info("ambiguous overlap for tracked levels %s; resolved by energy change", ties)

    picked = W[np.arange(L), perm]
    weak = np.flatnonzero(picked < match_threshold).tolist()
    if weak:
        log.warning("tracked levels %s matched with overlap below %.2f", weak, match_threshold)

    new_v = vectors[:, perm]
    d = np.einsum("ij,ij->j", prev_v, right[:, perm])
    new_v = new_v * np.where(d < 0, -1.0, 1.0)
    return TrackResult(perm, energies[perm], new_v, weak, ties)


def _derivatives(system, lam):
    """``(dH, A, V)``: matrix derivative, basis generator (or None), operator dH/dlambda."""
    V = system.interaction(lam)
    dH = system.hamiltonian_derivative(lam) if hasattr(system, "hamiltonian_derivative") else V
    A = system.basis_generator(lam) if hasattr(system, "basis_generator") else None
    return dH, A, V


def resolve_degeneracies(energies, vectors, dH, threshold=None):
    """Rotate each degenerate cluster onto eigenvectors of ``dH`` restricted to it.

    These are the combinations that continue smoothly away from the
    degeneracy (first-order degenerate perturbation theory).  The result is
    ordered by energy and, inside a cluster, by first-order slope, i.e. by
    energy just above ``lam``.
    """
    energies = np.asarray(energies)
    vectors = np.array(vectors, copy=True)
    if threshold is None:
        threshold = degeneracy_threshold(energies)
    order = np.argsort(energies, kind="stable")
    energies, vectors = energies[order], vectors[:, order]
    breaks = np.flatnonzero(np.diff(energies) > threshold) + 1
    start = 0
    for stop in list(breaks) + [energies.size]:
        if stop - start > 1:
            U = vectors[:, start:stop]
            w, R = np.linalg.eigh(U.T @ apply(dH, U))
            if np.any(np.diff(w) < threshold):
                log.warning("degeneracy at levels %d..%d not lifted at first order", start, stop - 1)
            vectors[:, start:stop] = U @ R
        start = stop
    return energies, vectors


def _cut_cluster(energies) -> bool:
    """True when the highest computed level is degenerate with the one below it."""
    e = np.sort(np.asarray(energies))
    return e.size > 1 and e[-1] - e[-2] <= degeneracy_threshold(e)


def _candidates(system, lam, n_cand):
    """Eigenpairs at ``lam``, widened until no degenerate cluster is cut at the top."""
    d = system.dimension
    e, v = system.eigh(lam, n_cand)
    while n_cand < d and _cut_cluster(e):
        n_cand = min(d, 2 * n_cand)
        e, v = system.eigh(lam, n_cand)
    return e, v


def transition_amplitudes(energies, vectors, dH, generator=None, threshold=None):
    """``chi[n, m]`` from ``V/Delta`` plus a basis-motion term.

    ``dH`` is the derivative of the Hamiltonian matrix; ``generator`` is
    ``<B_i|dB_j/dlambda>`` for a moving basis.  Returns ``(chi, V, degenerate)``
    where ``degenerate`` marks off-diagonal pairs left as NaN.
    """
    energies = np.asarray(energies)
    if threshold is None:
        threshold = degeneracy_threshold(energies)
    Vm = vectors.T @ apply(dH, vectors)
    Vm = 0.5 * (Vm + Vm.T)
    gaps = energies[:, None] - energies[None, :]
    degenerate = np.abs(gaps) <= threshold
    np.fill_diagonal(degenerate, False)
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = np.where(degenerate, np.nan, Vm / gaps)
    np.fill_diagonal(chi, 0.0)
    if generator is not None:
        G = vectors.T @ generator @ vectors
        chi = chi - 0.5 * (G - G.T)
    return chi, Vm, degenerate


def chi_finite_difference(model, lam: float, reference, h: float = 1e-5, k=None):
    """Central-difference ``chi`` for the tracked columns of ``reference`` at ``lam``.

    ``reference`` holds the tracked eigenvectors at ``lam`` (columns).  The
    eigenvectors at ``lam +- h`` are tracked onto them and compared in a
    common basis, so a moving basis is handled through its overlap matrix.
    """
    system = _as_system(model, k)
    reference = np.asarray(reference)
    L = reference.shape[1]
    n_cand = min(L + 4, system.dimension)
    moved = []
    for lam_h in (lam - h, lam + h):
        e, v = _candidates(system, lam_h, n_cand)
        dH, _, _ = _derivatives(system, lam_h)
        e, v = resolve_degeneracies(e, v, dH)
        S = None if system.overlap is None else system.overlap(lam, lam_h)
        res = track_levels((np.zeros(L), reference), e, v, overlap=S, match_threshold=0.9)
        moved.append(res.vectors if S is None else S @ res.vectors)
    diff = reference.T @ (moved[1] - moved[0]) / (2.0 * h)
    return -diff


# --------------------------------------------------------------------------
# sweeps


def snapshot_grid(
    N: int,
    nu,
    lam_start: float = -1.0,
    lam_end: float = 1.0,
    x_window: float = 50.0,
    n_window: int = 2001,
    outer_step: float = 2e-3,
) -> np.ndarray:
    """Snapshot lambdas: uniform in ``x = N**(1/nu) lambda`` for ``|x| <= x_window``, uniform in lambda outside.

    The grid always contains ``lam_start``, ``0`` and ``lam_end``.
    """
    if not lam_start < 0 < lam_end:
        raise ValueError("grid must straddle lambda = 0")
    scale = float(N) ** (1.0 / float(Fraction(nu)))
    dx = 2.0 * x_window / (n_window - 1)
    lam_w = x_window / scale
    lo, hi = max(lam_start, -lam_w), min(lam_end, lam_w)
    inner = np.arange(math.ceil(lo * scale / dx), math.floor(hi * scale / dx) + 1) * dx / scale
    pieces = []
    if lam_start < lo:
        n = max(1, math.ceil((lo - lam_start) / outer_step))
        pieces.append(np.linspace(lam_start, lo, n + 1)[:-1])
    elif inner[0] > lam_start:
        pieces.append([lam_start])
    pieces.append(inner)
    if hi < lam_end:
        n = max(1, math.ceil((lam_end - hi) / outer_step))
        pieces.append(np.linspace(hi, lam_end, n + 1)[1:])
    elif inner[-1] < lam_end:
        pieces.append([lam_end])
    grid = np.concatenate([np.asarray(p, dtype=float) for p in pieces])
    grid = np.unique(grid)
    # merge points closer than a small fraction of the local spacing
    keep = np.concatenate([[True], np.diff(grid) > 1e-3 * dx / scale])
    keep[-1] = True
    grid = grid[keep]
    if np.any(np.diff(grid) <= 0):
        raise AssertionError("snapshot grid not strictly increasing")
    return grid


@dataclass
class SpectralSweep:
    """Tracked spectral data on a lambda grid.

    Arrays carry a sector axis ``B``: the TFIM momentum blocks, or a single
    sector for the other models.

    Attributes
    ----------
    lam : (P,) grid
    energies : (P, B, L)
    chi : (P, B, L, L)
    V : (P, B, L, L) or None
    ks : (B,) block momenta for TFIM, otherwise None
    """

    spec: ModelSpec
    lam: np.ndarray
    energies: np.ndarray
    chi: np.ndarray
    V: np.ndarray | None = None
    ks: np.ndarray | None = None
    events: list = field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return self.energies.shape[-1]

    @property
    def n_sectors(self) -> int:
        return self.energies.shape[1]

    @property
    def gaps(self) -> np.ndarray:
        return self.energies[..., :, None] - self.energies[..., None, :]

    def x(self, nu=None) -> np.ndarray:
        if nu is None:
            nu = self.spec.exponents().nu
        return float(self.spec.N) ** (1.0 / float(nu)) * self.lam

    def snapshot(self, i: int, sector: int = 0) -> SpectralSnapshot:
        V = None if self.V is None else self.V[i, sector]
        return SpectralSnapshot(float(self.lam[i]), self.energies[i, sector], self.chi[i, sector], V)

    def default_sector(self) -> int:
        """Critical TFIM block (smallest gap at the QCP), or the only sector."""
        if self.ks is None:
            return 0
        return int(np.argmin(np.abs(self.ks - critical_momentum(self.spec.N))))

    def to_csv(self, path, sector: int | None = None):
        """Columns ``lambda, x, E_0..E_{L-1}, Delta_10, chi_10``."""
        if sector is None:
            sector = self.default_sector()
        E = self.energies[:, sector]
        header = ["lambda", "x"] + [f"E_{n}" for n in range(self.n_levels)] + ["Delta_10", "chi_10"]
        x = self.x()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i in range(self.lam.size):
                row = [self.lam[i], x[i], *E[i], E[i, 1] - E[i, 0], self.chi[i, sector, 1, 0]]
                w.writerow([repr(float(v)) for v in row])


def sweep_tfim(N: int, grid, match_threshold: float = MATCH_THRESHOLD) -> SpectralSweep:
    """All momentum blocks at once: batched 2x2 diagonalization and sign alignment."""
    grid = np.asarray(grid, dtype=float)
    ks = momenta(N)
    H = np.stack([block_stack(ks, lam) for lam in grid])
    E, U = np.linalg.eigh(H)  # (P, B, 2), (P, B, 2, 2)
    first = U[0]
    idx = np.argmax(np.abs(first), axis=1)
    s0 = np.sign(np.take_along_axis(first, idx[:, None, :], axis=1)[:, 0, :])
    s0[s0 == 0] = 1.0
    d = np.einsum("pbij,pbij->pbj", U[:-1], U[1:])
    if np.any(np.abs(d) < match_threshold):
        raise RuntimeError("TFIM block eigenvectors lost continuity; refine the grid")
    signs = np.concatenate([s0[None], np.where(d < 0, -1.0, 1.0)], axis=0)
    signs = np.cumprod(signs, axis=0)
    U = U * signs[:, :, None, :]
    Vop = interaction_stack(ks)
    V = np.einsum("pbia,bij,pbjc->pbac", U, Vop, U)
    gaps = E[..., :, None] - E[..., None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        chi = V / gaps
    chi[..., 0, 0] = chi[..., 1, 1] = 0.0
    spec = ModelSpec(ModelKind.TFIM, N)
    return SpectralSweep(spec, grid, E, chi, V, ks)


def sweep(
    model,
    grid,
    n_levels: int,
    buffer: int = 4,
    keep_vectors: bool = False,
    fd_step: float = 1e-5,
    max_angle: float | None = 0.05,
    min_step: float = 1e-7,
    chunk: int = 64,
    executor=None,
):
    """Tracked spectral sweep of a LMGM / Dicke system (or any fixed-size system).

    Diagonalizations on ``grid`` run as a (optionally parallel) map over
    chunks; tracking and alignment are a sequential pass.  Where a tracked
    eigenvector turns by more than ``max_angle`` radians between neighbouring
    points (a sharp avoided crossing), the interval is bisected down to
    ``min_step``, so the returned grid can be finer than ``grid``.

    Returns a :class:`SpectralSweep` and, when ``keep_vectors`` is set, the
    list of tracked eigenvector arrays.
    """
    spec = model if isinstance(model, ModelSpec) else None
    system = _as_system(model)
    if spec is not None and spec.kind is ModelKind.TFIM:
        raise ValueError("use sweep_tfim for the TFIM block decomposition")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    d = system.dimension
    if n_levels > d:
        raise ValueError(f"n_levels={n_levels} exceeds the effective dimension {d}")
    n_cand = min(n_levels + buffer, d)
    L = n_levels
    cos_max = -1.0 if max_angle is None else math.cos(max_angle)

    lams, energies, chi, V = [], [], [], []
    kept = [] if keep_vectors else None
    events = []
    prev = None  # (lam, energies, vectors)

    def solve(lam):
        return _candidates(system, lam, n_cand)

    def emit(lam, cur_e, cur_v, dH, A, Vop):
        c, _, degenerate = transition_amplitudes(cur_e, cur_v, dH, A)
        if np.any(degenerate):
            fd = chi_finite_difference(system, lam, cur_v, h=fd_step)
            c = np.where(degenerate, fd, c)
            pairs = np.argwhere(np.triu(degenerate)).tolist()
            events.append(f"lambda={lam!r}: finite-difference chi for degenerate pairs {pairs}")
            log.info("finite-difference chi at lambda=%r for pairs %s", lam, pairs)
        Vv = cur_v.T @ apply(Vop, cur_v)
        lams.append(lam)
        energies.append(cur_e)
        chi.append(c)
        V.append(0.5 * (Vv + Vv.T))
        if kept is not None:
            kept.append(cur_v)

    for start in range(0, grid.size, chunk):
        block = grid[start : start + chunk]
        raw = list(executor.map(solve, block)) if executor is not None else [solve(l) for l in block]
        for lam, (e, v) in zip(block, raw):
            lam = float(lam)
            if prev is None:
                dH, A, Vop = _derivatives(system, lam)
                e, v = resolve_degeneracies(e, v, dH)
                cur_e, cur_v = e[:L], fix_initial_signs(v[:, :L])
                emit(lam, cur_e, cur_v, dH, A, Vop)
                prev = (lam, cur_e, cur_v)
                continue
            pending = [(lam, e, v)]
            while pending:
                lam_c, e_c, v_c = pending[-1]
                dH, A, Vop = _derivatives(system, lam_c)
                e_c, v_c = resolve_degeneracies(e_c, v_c, dH)
                S = None if system.overlap is None else system.overlap(prev[0], lam_c)
                res = track_levels(prev[1:], e_c, v_c, overlap=S)
                right = v_c[:, res.permutation] if S is None else S @ v_c[:, res.permutation]
                turn = np.abs(np.einsum("ij,ij->j", prev[2], right))
                if turn.min() < cos_max and lam_c - prev[0] > 2.0 * min_step:
                    mid = 0.5 * (prev[0] + lam_c)
                    pending.append((mid, *solve(mid)))
                    continue
                if turn.min() < cos_max:
                    events.append(f"lambda={lam_c!r}: refinement stopped at min_step, overlap {turn.min():.3g}")
                if res.weak:
                    events.append(f"lambda={lam_c!r}: weak overlap for levels {res.weak}")
                if res.ties:
                    events.append(f"lambda={lam_c!r}: tie resolved by energy for levels {res.ties}")
                emit(lam_c, res.energies, res.vectors, dH, A, Vop)
                prev = (lam_c, res.energies, res.vectors)
                pending.pop()

    added = len(lams) - grid.size
    if added:
        events.append(f"refinement added {added} snapshots")
    lams = np.array(lams)
    energies = np.array(energies)[:, None]
    chi = np.array(chi)[:, None]
    V = np.array(V)[:, None]
    if spec is None:
        spec = _spec_of(system)
    out = SpectralSweep(spec, lams, energies, chi, V, None, events)
    return (out, kept) if keep_vectors else out


def _spec_of(system):
    name = type(system).__name__
    if name.startswith("Lmgm"):
        return ModelSpec(ModelKind.LMGM, system.N)
    if name.startswith("Dicke"):
        return ModelSpec(ModelKind.DICKE, system.N, getattr(system, "M", 8))
    return ModelSpec(ModelKind.TFIM, system.N)


def spectral_sweep(spec: ModelSpec, grid=None, n_levels: int | None = None, **kwargs) -> SpectralSweep:
    """Model-dispatching sweep with the default grid and level count."""
    if grid is None:
        grid = snapshot_grid(spec.N, spec.exponents().nu)
    if spec.kind is ModelKind.TFIM:
        return sweep_tfim(spec.N, grid)
    if n_levels is None:
        n_levels = default_levels(spec)
    return sweep(spec, grid, n_levels, **kwargs)


def default_levels(spec: ModelSpec) -> int:
    if spec.kind is ModelKind.TFIM:
        return 2
    return min(20, spec.dimension)
