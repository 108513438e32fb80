"""Shared integrator for the eigenbasis and scaled amplitude equations.

Both engines integrate::

    da_n/ds = sum_{m != n} exp(i P (Phi_n(s) - Phi_m(s))) K_nm(s) a_m

with ``Phi_n(s) = int_0^s |s'|**alpha Gap_n0(s') ds'``.  In lambda this is the
eigenbasis equation (``K = chi``, ``Gap = Delta``, ``P`` from the schedule);
in ``x`` it is the size-independent form (``K = C``, ``Gap = D``,
``P = Lambda**(-1/mu)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .phases import PhaseIntegral


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorSettings:
    """ODE controls shared by all engines.

    ``phase_step`` caps each step so the fastest phase advances by at most
    that many radians; ``None`` leaves step control to the error estimate
    alone.  The direct engines default to a cap (:data:`DIRECT_SETTINGS`).
    """

    method: str = "DOP853"
    rtol: float = 1e-11
    atol: float = 1e-14
    phase_step: float | None = None
    n_output: int = 2000


DIRECT_SETTINGS = IntegratorSettings(phase_step=0.1)


@dataclass
class QuenchState:
    """Amplitudes on the tracked levels at one point of a sweep."""

    amplitudes: np.ndarray
    phases: np.ndarray
    lam: float
    engine: str

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass
class QuenchTrace:
    """Output of one sweep.

    Attributes
    ----------
    lam : (T,) output lambdas
    amplitudes : (T, B, L) complex; ``B`` sectors (TFIM blocks) and ``L`` levels
    gaps : (T, B, L) ``E_n - E_0`` in physical units at the output points
    phases : (T, B, L) ``Phi_n0`` (unscaled by the prefactor) or None
    engine : engine tag
    coordinate : "lambda" or "x"
    s : (T,) the integration coordinate at the output points
    heating_direct : (T, B) ``<psi|H|psi> - E_0`` from engines that carry the full state
    states : (T, d) full state vectors (direct engines on one sector only)
    """

    lam: np.ndarray
    amplitudes: np.ndarray
    gaps: np.ndarray
    engine: str
    s: np.ndarray
    coordinate: str = "lambda"
    phases: np.ndarray | None = None
    heating_direct: np.ndarray | None = None
    states: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm_drift(self) -> float:
        """Largest ``|norm - 1|`` over the output points (per sector)."""
        if self.states is not None:
            norms = np.sum(np.abs(self.states) ** 2, axis=-1)
        else:
            norms = self.populations.sum(axis=-1)
        return float(np.max(np.abs(norms - 1.0)))

    def state(self, i: int, sector: int = 0) -> QuenchState:
        ph = None if self.phases is None else self.phases[i, sector]
        return QuenchState(self.amplitudes[i, sector], ph, float(self.lam[i]), self.engine)


class AmplitudeEquation:
    """Right-hand side built from tabulated couplings and gaps.

    Parameters
    ----------
    knots : (P,) integration coordinate of the table
    coupling : (P, B, L, L) antisymmetric coupling ``K``
    gap : (P, B, L) ``Gap_n0``
    prefactor : ``P``
    alpha : phase weight exponent
    """

    def __init__(self, knots, coupling, gap, prefactor: float, alpha: float = 0.0):
        knots = np.asarray(knots, dtype=float)
        coupling = np.asarray(coupling, dtype=float)
        if not np.all(np.isfinite(coupling)):
            raise IntegrationError("coupling table contains non-finite entries")
        self.knots = knots
        self.B, self.L = gap.shape[1], gap.shape[2]
        self._K = CubicSpline(knots, coupling.reshape(knots.size, -1), axis=0)
        self.phase = PhaseIntegral(knots, gap, alpha)
        self.prefactor = float(prefactor)
        self.alpha = float(alpha)
        self.gap_max = float(np.max(gap))

    def coupling(self, s):
        return self._K(s).reshape(self.B, self.L, self.L)

    def rhs(self, s, y):
        a = y.reshape(self.B, self.L)
        e = np.exp(1j * self.prefactor * self.phase(s))
        K = self.coupling(s)
        return (e * np.einsum("bnm,bm->bn", K, np.conj(e) * a)).ravel()

    def max_step(self, s0, s1, phase_step):
        if phase_step is None:
            return np.inf
        weight = max(abs(s0) ** self.alpha, abs(s1) ** self.alpha)
        rate = self.prefactor * self.gap_max * weight
        return np.inf if rate <= 0 else phase_step / rate

    def integrate(self, s_out, a0, settings: IntegratorSettings):
        """Amplitudes at ``s_out`` (increasing) starting from ``a0`` at ``s_out[0]``.

        The range is split at ``s = 0`` so that neither half steps across the
        phase-weight singularity.
        """
        s_out = np.asarray(s_out, dtype=float)
        if s_out[0] < self.knots[0] - 1e-12 or s_out[-1] > self.knots[-1] + 1e-12:
            raise IntegrationError(
                f"requested [{s_out[0]}, {s_out[-1]}] outside the table [{self.knots[0]}, {self.knots[-1]}]"
            )
        s_out = np.clip(s_out, self.knots[0], self.knots[-1])
        hmax = self.max_step(s_out[0], s_out[-1], settings.phase_step)
        return integrate_segments(self.rhs, s_out, a0, settings, hmax).reshape(s_out.size, self.B, self.L)


def integrate_segments(rhs, s_out, y0, settings: IntegratorSettings, max_step=np.inf):
    """``solve_ivp`` over ``s_out`` split at 0, with outputs exactly at ``s_out``."""
    y = np.asarray(y0, dtype=complex).ravel()
    out = np.empty((s_out.size, y.size), dtype=complex)
    out[0] = y
    if s_out[0] < 0 < s_out[-1]:
        segments = [(s_out[0], 0.0), (0.0, s_out[-1])]
    else:
        segments = [(s_out[0], s_out[-1])]
    rest = np.arange(1, s_out.size)
    for lo, hi in segments:
        sel = rest[(s_out[rest] > lo) & (s_out[rest] <= hi)]
        t_eval = s_out[sel]
        if t_eval.size == 0 or t_eval[-1] != hi:
            t_eval = np.append(t_eval, hi)
        sol = solve_ivp(
            rhs,
            (lo, hi),
            y,
            method=settings.method,
            rtol=settings.rtol,
            atol=settings.atol,
            max_step=max_step,
            t_eval=t_eval,
        )
        if not sol.success:
            raise IntegrationError(f"integration failed on [{lo}, {hi}]: {sol.message}")
        out[sel] = sol.y.T[: sel.size]
        y = sol.y[:, -1]
    return out
