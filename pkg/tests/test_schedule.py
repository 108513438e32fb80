from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpt_anneal.schedule import (
    AnnealingSchedule,
    ScalingExponents,
    lambda_of_t,
    scaled_coordinate,
    scaled_velocity,
    velocity_for_scaled,
)

TFIM = ScalingExponents.for_model("TFIM")
LMGM = ScalingExponents.for_model("LMGM")

velocities = st.floats(1e-4, 1e2)
kappas = st.floats(0.25, 4.0)
times = st.floats(-1e2, 1e2)


@pytest.mark.parametrize(
    "v, kappa, t, expected",
    [(0.5, 1, 2.0, 1.0), (1.0, 2, -3.0, -9.0), (0.01, 1, 0.0, 0.0)],
)
def test_lambda_of_t_examples(v, kappa, t, expected):
    assert lambda_of_t(AnnealingSchedule(v, kappa), t) == pytest.approx(expected, abs=1e-15)


def test_scaled_velocity_examples():
    assert scaled_velocity(100, AnnealingSchedule(0.01), TFIM) == pytest.approx(10.0, rel=1e-14)
    assert scaled_velocity(64, AnnealingSchedule(0.5), LMGM) == pytest.approx(32.0, rel=1e-14)
    assert scaled_velocity(1, AnnealingSchedule(1.0), TFIM) == 1.0


def test_unit_size_and_velocity_depends_on_kappa():
    # With N = v = 1 only the kappa prefactor survives, so Lambda = 1 holds for kappa = 1 alone.
    exps = TFIM.with_kappa(2)
    got = scaled_velocity(1, AnnealingSchedule(1.0, 2), exps)
    assert got == pytest.approx(2.0 ** exps.mu, rel=1e-14)
    assert got != 1.0


@pytest.mark.parametrize("N, lam, nu, expected", [(160, 0.01, 1, 1.6), (8, 0.5, Fraction(3, 2), 2.0), (37, 0.0, 2, 0.0)])
def test_scaled_coordinate_examples(N, lam, nu, expected):
    assert scaled_coordinate(N, lam, nu) == pytest.approx(expected, rel=1e-14, abs=0)


def test_exponent_tables():
    assert (TFIM.nu, TFIM.z, TFIM.mu_exact) == (1, 1, Fraction(1, 2))
    assert (LMGM.nu, LMGM.z, LMGM.mu_exact) == (Fraction(3, 2), Fraction(1, 3), 1)
    assert ScalingExponents.for_model("DICKE") == LMGM
    # mu = k nu / (k nu z + 1)
    assert TFIM.with_kappa(2).mu_exact == Fraction(2, 3)
    assert LMGM.with_kappa(2).mu_exact == Fraction(3, 2)


@pytest.mark.parametrize(
    "kwargs",
    [dict(velocity=0.0), dict(velocity=-1.0), dict(velocity=1.0, kappa=0.0), dict(velocity=1.0, lambda_start=0.1), dict(velocity=1.0, lambda_end=0.0)],
)
def test_schedule_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        AnnealingSchedule(**kwargs)


def test_scaled_velocity_rejects_kappa_mismatch():
    with pytest.raises(ValueError, match="kappa"):
        scaled_velocity(10, AnnealingSchedule(0.1, 2.0), TFIM)


@given(st.integers(2, 4096), velocities, st.sampled_from([TFIM, LMGM]))
def test_kappa_one_reduces_to_plain_form(N, v, exps):
    assert scaled_velocity(N, AnnealingSchedule(v), exps) == N * v**exps.mu


@given(velocities, kappas, times)
def test_lambda_is_odd(v, kappa, t):
    s = AnnealingSchedule(v, kappa)
    assert s.lambda_of_t(-t) == -s.lambda_of_t(t)


@given(velocities, kappas, times, times)
def test_lambda_is_monotone(v, kappa, t1, t2):
    s = AnnealingSchedule(v, kappa)
    lo, hi = sorted((t1, t2))
    assert s.lambda_of_t(lo) <= s.lambda_of_t(hi)
    if hi - lo > 1e-3:
        assert s.lambda_of_t(lo) < s.lambda_of_t(hi)


# |lam|**(1/kappa) must stay representable
@given(velocities, kappas, st.floats(-1.0, 1.0).filter(lambda x: x == 0 or abs(x) > 1e-30))
def test_time_inverse(v, kappa, lam):
    s = AnnealingSchedule(v, kappa)
    assert s.lambda_of_t(s.t_of_lambda(lam)) == pytest.approx(lam, rel=1e-12)


@given(st.integers(2, 2048), st.floats(1e-3, 1e3), kappas, st.sampled_from([TFIM, LMGM]))
def test_velocity_for_scaled_inverts(N, Lam, kappa, base):
    exps = base.with_kappa(kappa)
    v = velocity_for_scaled(Lam, N, exps)
    back = scaled_velocity(N, AnnealingSchedule(v, float(exps.kappa)), exps)
    assert back == pytest.approx(Lam, rel=1e-10)


def test_dt_dlambda_matches_derivative():
    s = AnnealingSchedule(0.3, 2.0)
    lam, h = 0.4, 1e-6
    fd = (s.t_of_lambda(lam + h) - s.t_of_lambda(lam - h)) / (2 * h)
    assert s.dt_dlambda(lam) == pytest.approx(fd, rel=1e-8)
