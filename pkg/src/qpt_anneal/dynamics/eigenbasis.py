"""Amplitude equations in the instantaneous eigenbasis, in lambda and in x."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schedule import AnnealingSchedule, ScalingExponents
from ..spectral import SpectralSweep
from .core import AmplitudeEquation, IntegrationError, IntegratorSettings, QuenchTrace


def _ground_start(B, L):
    a0 = np.zeros((B, L), dtype=complex)
    a0[:, 0] = 1.0
    return a0


def _phase_table(eq: AmplitudeEquation, s):
    if eq.alpha == 0.0:
        return eq.phase(s)
    return np.stack([eq.phase(v) for v in s])


def evolve_eigenbasis(
    sweep: SpectralSweep,
    schedule: AnnealingSchedule,
    n_levels: int | None = None,
    settings: IntegratorSettings | None = None,
    output=None,
) -> QuenchTrace:
    """Integrate the eigenbasis amplitude equation over the schedule's lambda range.

    ``chi`` and ``Delta`` are cubic splines through the sweep's snapshots;
    the phases are exact integrals of the gap spline.  Starts in the ground
    state of every sector at ``schedule.lambda_start``.
    """
    settings = settings or IntegratorSettings()
    L = sweep.n_levels if n_levels is None else n_levels
    if L > sweep.n_levels:
        raise ValueError(f"sweep tracks {sweep.n_levels} levels, {L} requested")
    lo, hi = schedule.lambda_start, schedule.lambda_end
    if lo < sweep.lam[0] or hi > sweep.lam[-1]:
        raise IntegrationError(
            f"schedule range [{lo}, {hi}] exceeds snapshot range [{sweep.lam[0]}, {sweep.lam[-1]}]"
        )
    if output is None:
        output = np.linspace(lo, hi, settings.n_output)
    output = np.asarray(output, dtype=float)
    E = sweep.energies[..., :L]
    gap = E - E[..., :1]
    eq = AmplitudeEquation(
        sweep.lam,
        sweep.chi[..., :L, :L],
        gap,
        schedule.phase_prefactor,
        alpha=(1.0 - schedule.kappa) / schedule.kappa,
    )
    amps = eq.integrate(output, _ground_start(eq.B, L), settings)
    gaps_out = eq.phase.spline(output).reshape(output.size, eq.B, L)
    return QuenchTrace(
        lam=output,
        amplitudes=amps,
        gaps=gaps_out,
        engine="eigenbasis",
        s=output,
        coordinate="lambda",
        phases=_phase_table(eq, output),
        info={"velocity": schedule.velocity, "kappa": schedule.kappa, "n_levels": L},
    )


@dataclass
class ScaledTables:
    """Critical functions of one size on the ``x`` axis, for all tracked pairs.

    ``C = N**(-1/nu) chi`` and ``D = N**z (E_n - E_0)``.
    """

    N: int
    nu: object
    z: object
    x: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @classmethod
    def from_sweep(cls, sweep: SpectralSweep, exps: ScalingExponents | None = None):
        exps = exps or sweep.spec.exponents()
        N = sweep.spec.N
        inv_nu = 1.0 / float(exps.nu)
        scale = float(N) ** inv_nu
        E = sweep.energies
        return cls(
            N=N,
            nu=exps.nu,
            z=exps.z,
            x=scale * sweep.lam,
            C=sweep.chi / scale,
            D=float(N) ** float(exps.z) * (E - E[..., :1]),
        )

    @property
    def x_scale(self) -> float:
        return float(self.N) ** (1.0 / float(self.nu))


def evolve_scaled(
    tables: ScaledTables,
    Lambda: float,
    exps: ScalingExponents,
    kappa: float = 1.0,
    x_start: float | None = None,
    x_end: float | None = None,
    n_levels: int | None = None,
    settings: IntegratorSettings | None = None,
    output=None,
) -> QuenchTrace:
    """Integrate the size-independent amplitude equation in ``x`` at scaled velocity ``Lambda``.

    The phase prefactor is ``Lambda**(-1/mu)`` with ``mu`` evaluated for
    ``kappa``; for ``kappa != 1`` the phase carries the weight
    ``|x|**((1 - kappa)/kappa)``.
    """
    if not Lambda > 0:
        raise ValueError(f"Lambda must be positive, got {Lambda}")
    settings = settings or IntegratorSettings()
    exps = exps.with_kappa(kappa)
    L = tables.C.shape[-1] if n_levels is None else n_levels
    x_start = tables.x[0] if x_start is None else x_start
    x_end = tables.x[-1] if x_end is None else x_end
    if output is None:
        scale = tables.x_scale
        output = scale * np.linspace(x_start / scale, x_end / scale, settings.n_output)
    output = np.asarray(output, dtype=float)
    eq = AmplitudeEquation(
        tables.x,
        tables.C[..., :L, :L],
        tables.D[..., :L],
        float(Lambda) ** (-1.0 / exps.mu),
        alpha=(1.0 - kappa) / kappa,
    )
    amps = eq.integrate(output, _ground_start(eq.B, L), settings)
    D_out = eq.phase.spline(output).reshape(output.size, eq.B, L)
    return QuenchTrace(
        lam=output / tables.x_scale,
        amplitudes=amps,
        gaps=D_out / float(tables.N) ** float(tables.z),
        engine="scaled",
        s=output,
        coordinate="x",
        phases=_phase_table(eq, output),
        info={"Lambda": float(Lambda), "kappa": kappa, "mu": exps.mu, "n_levels": L},
    )
