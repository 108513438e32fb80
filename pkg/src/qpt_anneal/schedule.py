"""Annealing protocol and the scaled coordinates built on it.

The sweep parameter follows ``lambda(t) = v * sign(t) * |t|**kappa`` and crosses
the critical point at ``t = 0``.  Everything downstream works in lambda (or in
the scaled coordinate ``x = N**(1/nu) * lambda``); physical time is recovered
through :meth:`AnnealingSchedule.t_of_lambda`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class AnnealingSchedule:
    velocity: float
    kappa: float = 1.0
    lambda_start: float = -1.0
    lambda_end: float = 1.0

    def __post_init__(self):
        if not (self.velocity > 0 and np.isfinite(self.velocity)):
            raise ValueError(f"velocity must be positive and finite, got {self.velocity}")
        if not (self.kappa > 0 and np.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")
        if not self.lambda_start < 0 < self.lambda_end:
            raise ValueError(
                "the sweep must cross lambda = 0: need lambda_start < 0 < lambda_end, "
                f"got [{self.lambda_start}, {self.lambda_end}]"
            )

    def lambda_of_t(self, t):
        t = np.asarray(t, dtype=float)
        out = self.velocity * np.sign(t) * np.abs(t) ** self.kappa
        return out if out.ndim else float(out)

    def t_of_lambda(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.sign(lam) * (np.abs(lam) / self.velocity) ** (1.0 / self.kappa)
        return out if out.ndim else float(out)

    def dt_dlambda(self, lam):
        """Jacobian ``dt/dlambda``; diverges (integrably) at 0 when kappa > 1."""
        lam = np.asarray(lam, dtype=float)
        k = self.kappa
        with np.errstate(divide="ignore"):
            out = self.velocity ** (-1.0 / k) / k * np.abs(lam) ** ((1.0 - k) / k)
        return out if out.ndim else float(out)

    @property
    def t_start(self) -> float:
        return self.t_of_lambda(self.lambda_start)

    @property
    def t_end(self) -> float:
        return self.t_of_lambda(self.lambda_end)

    @property
    def phase_prefactor(self) -> float:
        """Factor multiplying ``int_0^lambda |l|**((1-k)/k) Delta dl`` in the dynamical phase."""
        if self.kappa == 1:
            return 1.0 / self.velocity
        return self.velocity ** (-1.0 / self.kappa) / self.kappa


def lambda_of_t(schedule: AnnealingSchedule, t):
    return schedule.lambda_of_t(t)


@dataclass(frozen=True)
class ScalingExponents:
    """Critical exponents of one model, kept as exact rationals.

    ``mu`` depends on the schedule exponent ``kappa`` and is converted to float
    once, here.
    """

    nu: Fraction
    z: Fraction
    kappa: Fraction = Fraction(1)
    mu_exact: Fraction = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("nu", "z", "kappa"):
            value = Fraction(getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)
        k, nu, z = self.kappa, self.nu, self.z
        object.__setattr__(self, "mu_exact", k * nu / (k * nu * z + 1))

    @property
    def mu(self) -> float:
        return float(self.mu_exact)

    @property
    def inv_nu(self) -> float:
        return float(1 / self.nu)

    def with_kappa(self, kappa) -> "ScalingExponents":
        return ScalingExponents(self.nu, self.z, Fraction(kappa).limit_denominator(10**6))

    @classmethod
    def for_model(cls, kind, kappa=1) -> "ScalingExponents":
        name = getattr(kind, "value", kind)
        kappa = Fraction(kappa).limit_denominator(10**6)
        if name == "TFIM":
            return cls(Fraction(1), Fraction(1), kappa)
        if name in ("LMGM", "DICKE"):
            return cls(Fraction(3, 2), Fraction(1, 3), kappa)
        raise ValueError(f"unknown model kind {kind!r}")


def _check_kappa(schedule: AnnealingSchedule, exps: ScalingExponents):
    if abs(float(exps.kappa) - schedule.kappa) > 1e-12:
        raise ValueError(
            f"exponents were built for kappa={exps.kappa}, schedule has kappa={schedule.kappa}"
        )


def scaled_velocity(N: int, schedule: AnnealingSchedule, exps: ScalingExponents) -> float:
    """Scaled velocity ``Lambda = kappa**mu * v**(mu/kappa) * N``.

    The ``kappa**mu`` factor is what makes the scaled equation of motion an
    exact change of variables of the eigenbasis one; for kappa = 1 this is
    ``N * v**mu`` bit for bit.
    """
    _check_kappa(schedule, exps)
    mu = exps.mu
    if exps.kappa == 1:
        return N * schedule.velocity**mu
    k = schedule.kappa
    return k**mu * schedule.velocity ** (mu / k) * N


def velocity_for_scaled(Lambda: float, N: int, exps: ScalingExponents) -> float:
    """Inverse of :func:`scaled_velocity` at fixed size."""
    if Lambda <= 0:
        raise ValueError(f"scaled velocity must be positive, got {Lambda}")
    mu = exps.mu
    if exps.kappa == 1:
        return (Lambda / N) ** (1.0 / mu)
    k = float(exps.kappa)
    return (Lambda / (N * k**mu)) ** (k / mu)


def scaled_coordinate(N: int, lam, nu) -> float:
    lam = np.asarray(lam, dtype=float)
    out = float(N) ** float(1 / Fraction(nu)) * lam
    return out if out.ndim else float(out)
