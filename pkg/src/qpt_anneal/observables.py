"""Heating and ground-state fidelity along a sweep, and the trace CSV format."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import QuenchState, QuenchTrace
from .models import ModelKind, ModelSpec
from .schedule import AnnealingSchedule, ScalingExponents, scaled_velocity
from .spectral import SpectralSnapshot

log = logging.getLogger(__name__)

Q_FLOOR = 1e-12
N_REPORT = 5


def _amplitudes(state):
    if isinstance(state, QuenchState):
        return np.asarray(state.amplitudes)
    return np.asarray(state)


def fidelity(state) -> float:
    """``|a_0|**2``."""
    a = _amplitudes(state)
    return float(np.abs(a[0]) ** 2)


def heating(state, snapshot) -> float:
    """``sum_n |a_n|**2 (E_n - E_0)``.

    ``snapshot`` is a :class:`SpectralSnapshot` or an array of ``E_n - E_0``.
    """
    a = _amplitudes(state)
    if isinstance(snapshot, SpectralSnapshot):
        gaps = snapshot.energies - snapshot.energies[0]
    else:
        gaps = np.asarray(snapshot, dtype=float)
    if gaps.shape != a.shape:
        raise ValueError(f"state has {a.size} levels, snapshot has {gaps.size}")
    return float(np.sum(np.abs(a) ** 2 * gaps))


def heating_expectation(psi, H, ground_energy: float) -> float:
    """``<psi|H|psi> - E_0`` for a full state vector."""
    psi = np.asarray(psi)
    Hpsi = H.matvec(psi) if hasattr(H, "matvec") else H @ psi
    return float(np.real(np.vdot(psi, Hpsi))) - ground_energy


def aggregate_tfim(block_states: Sequence, block_snapshots: Sequence, n_blocks: int | None = None):
    """Chain heating and fidelity from per-momentum blocks: ``(sum_k Q_k, prod_k p0_k)``."""
    if len(block_states) != len(block_snapshots):
        raise ValueError(f"{len(block_states)} block states but {len(block_snapshots)} snapshots")
    if n_blocks is not None and len(block_states) != n_blocks:
        raise ValueError(f"expected {n_blocks} momentum blocks, got {len(block_states)}")
    Q = sum(heating(s, snap) for s, snap in zip(block_states, block_snapshots))
    p0 = float(np.prod([fidelity(s) for s in block_states]))
    return Q, p0


def clamp_heating(Q, floor: float = Q_FLOOR):
    """Clamp rounding-level negatives in ``[-floor, 0)`` to zero; larger negatives are errors.

    Returns ``(clamped, count)``.
    """
    Q = np.array(Q, dtype=float, copy=True)
    bad = Q < -floor
    if np.any(bad):
        raise ValueError(f"heating {Q[bad].min()!r} below the numerical floor -{floor}")
    small = Q < 0
    Q[small] = 0.0
    return Q, int(np.count_nonzero(small))


@dataclass
class ObservableTrace:
    """Rows ``(t, lambda, x, Q, Q_scaled, p0, p1..)`` plus run metadata."""

    t: np.ndarray
    lam: np.ndarray
    x: np.ndarray
    Q: np.ndarray
    Q_scaled: np.ndarray
    p: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def p0(self) -> np.ndarray:
        return self.p[:, 0]

    @property
    def columns(self) -> list:
        return ["t", "lambda", "x", "Q", "Q_scaled"] + [f"p{n}" for n in range(self.p.shape[1])]

    def rows(self):
        cols = np.column_stack([self.t, self.lam, self.x, self.Q, self.Q_scaled, self.p])
        for r in cols:
            yield [repr(float(v)) for v in r]

    def check_invariants(self, tol: float = 1e-9):
        if np.any(self.Q < -Q_FLOOR):
            raise AssertionError("negative heating")
        if np.any(self.p0 < -tol) or np.any(self.p0 > 1 + tol):
            raise AssertionError("ground-state fidelity outside [0, 1]")
        if np.any(self.p.sum(axis=1) > 1 + tol):
            raise AssertionError("reported populations sum above 1")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.metadata, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows():
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "ObservableTrace":
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ValueError(f"{path}: missing metadata line")
            metadata = json.loads(first[2:])
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(v) for v in row] for row in reader])
        if header[:6] != ["t", "lambda", "x", "Q", "Q_scaled", "p0"]:
            raise ValueError(f"{path}: unexpected header {header}")
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4], data[:, 5:], metadata)


def _fraction_str(f):
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)


def emit_trace(
    trace: QuenchTrace,
    spec: ModelSpec,
    schedule: AnnealingSchedule,
    exps: ScalingExponents | None = None,
    n_report: int = N_REPORT,
    Lambda: float | None = None,
    extra: dict | None = None,
) -> ObservableTrace:
    """Observables of a finished sweep on its output grid.

    TFIM traces aggregate the momentum blocks (heating sums, fidelity
    multiplies) and report ``p0`` only.  Engines that carry the full state
    report the expectation-value heating.
    """
    exps = exps or spec.exponents(schedule.kappa)
    N = spec.N
    pops = trace.populations
    if trace.heating_direct is not None:
        Q = trace.heating_direct.sum(axis=1)
    else:
        Q = np.sum(pops * trace.gaps, axis=(1, 2))
    Q, clamped = clamp_heating(Q)
    if clamped:
        log.info("clamped %d rounding-level negative heating values", clamped)
    if spec.kind is ModelKind.TFIM or pops.shape[1] > 1:
        p = np.prod(pops[..., 0], axis=1)[:, None]
    else:
        p = pops[:, 0, : min(n_report, pops.shape[2])]
    lam = np.asarray(trace.lam, dtype=float)
    x = float(N) ** (1.0 / float(exps.nu)) * lam
    t = np.asarray(trace.s) if trace.coordinate == "t" else schedule.t_of_lambda(lam)
    zN = float(N) ** float(exps.z)
    if Lambda is None:
        Lambda = scaled_velocity(N, schedule, exps)
    metadata = {
        "model": spec.kind.value,
        "N": N,
        "velocity": schedule.velocity,
        "kappa": schedule.kappa,
        "Lambda": float(Lambda),
        "mu": exps.mu,
        "nu": _fraction_str(exps.nu),
        "z": _fraction_str(exps.z),
        "engine": trace.engine,
        "n_levels": int(trace.amplitudes.shape[-1]),
        "norm_drift": trace.norm_drift,
        "clamped": clamped,
    }
    if spec.kind is ModelKind.DICKE:
        metadata["M"] = spec.M
    if extra:
        metadata.update(extra)
    return ObservableTrace(np.asarray(t, dtype=float), lam, x, Q, Q * zN, p, metadata)
