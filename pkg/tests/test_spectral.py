import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from qpt_anneal.models import DickeSystem, LmgmSystem, ModelSpec, critical_momentum, tfim_chi_exact, tfim_gap_exact
from qpt_anneal.spectral import (
    align_phases,
    chi_finite_difference,
    degeneracy_threshold,
    diagonalize,
    fix_initial_signs,
    resolve_degeneracies,
    snapshot_grid,
    spectral_sweep,
    track_levels,
    transition_amplitudes,
)


@pytest.fixture(scope="module")
def lmgm32_sweep():
    return spectral_sweep(ModelSpec("LMGM", 32), n_levels=10)


@pytest.fixture(scope="module")
def dicke_sweep():
    return spectral_sweep(ModelSpec("DICKE", 4, M=8), n_levels=10)


# --------------------------------------------------------------------------
# diagonalize


def test_diagonalize_examples():
    e, _ = diagonalize(ModelSpec("TFIM", 4), 1.0, 2, k=math.pi / 4)
    np.testing.assert_allclose(e, [-1.0, 1.0], atol=1e-15)
    e, _ = diagonalize(ModelSpec("LMGM", 4), -1.0, 3)
    np.testing.assert_allclose(e, [-4.0, 0.0, 4.0], atol=1e-14)
    e, _ = diagonalize(ModelSpec("DICKE", 2, M=4), -1.0, 2)
    np.testing.assert_allclose(e, [-1.0, 1.0], atol=1e-14)


def test_diagonalize_orthonormal_ascending():
    e, v = diagonalize(ModelSpec("DICKE", 6, M=6), 0.3, 12)
    assert np.all(np.diff(e) >= 0)
    np.testing.assert_allclose(v.T @ v, np.eye(12), atol=1e-12)


def test_diagonalize_rejects_too_many_levels():
    with pytest.raises(ValueError, match="effective dimension"):
        diagonalize(ModelSpec("LMGM", 4), 0.0, 4)


# --------------------------------------------------------------------------
# phases and tracking


def test_align_phases_identity_and_flip():
    _, v = diagonalize(ModelSpec("LMGM", 16), 0.2, 5)
    np.testing.assert_array_equal(align_phases(v, v), v)
    np.testing.assert_array_equal(align_phases(v, -v), v)
    mixed = v * np.array([1, -1, 1, -1, -1])
    np.testing.assert_array_equal(align_phases(v, mixed), v)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, math.radians(10)))
@settings(max_examples=40, deadline=None)
def test_align_phases_small_rotation(seed, angle):
    rng = np.random.default_rng(seed)
    prev = special_ortho_group.rvs(6, random_state=rng)[:, :4]
    A = rng.standard_normal((6, 6))
    A = A - A.T
    A *= angle / np.linalg.norm(A, 2)
    w, U = np.linalg.eig(A)
    R = np.real(U @ np.diag(np.exp(w)) @ np.linalg.inv(U))
    signs = rng.choice([-1.0, 1.0], 4)
    cur = (R @ prev) * signs
    out = align_phases(prev, cur)
    assert np.all(np.einsum("ij,ij->j", prev, out) > 0)


def test_first_snapshot_sign_convention():
    v = np.array([[0.6, -0.8], [-0.8, -0.6]])
    out = fix_initial_signs(v)
    np.testing.assert_array_equal(out, [[-0.6, 0.8], [0.8, 0.6]])


def test_track_identity_without_crossing():
    _, v0 = diagonalize(ModelSpec("LMGM", 32), 0.0, 6)
    e1, v1 = diagonalize(ModelSpec("LMGM", 32), 1e-3, 6)
    res = track_levels((np.zeros(6), v0), e1, v1)
    np.testing.assert_array_equal(res.permutation, np.arange(6))


def test_track_recovers_transposition_at_exact_crossing():
    def H(lam):
        return np.array([[lam, 0.0, 0.0], [0.0, -lam, 0.0], [0.0, 0.0, 5.0]])

    e0, v0 = np.linalg.eigh(H(-0.1))
    e1, v1 = np.linalg.eigh(H(0.1))
    res = track_levels((e0, v0), e1, v1)
    np.testing.assert_array_equal(res.permutation, [1, 0, 2])
    # labels follow the states, not the energy order
    np.testing.assert_allclose(res.energies, [0.1, -0.1, 5.0])


def test_track_tie_broken_by_energy_change():
    prev_v = np.array([[1.0], [1.0], [0.0]]) / math.sqrt(2)
    cand_e = np.array([0.5, 0.1, 3.0])
    cand_v = np.eye(3)
    res = track_levels((np.array([0.0]), prev_v), cand_e, cand_v)
    assert res.permutation[0] == 1
    assert res.ties == [0]


def test_track_composes_to_identity_over_closed_loop():
    system = LmgmSystem(64)
    L = 8
    loop = np.concatenate([np.linspace(-0.5, 0.5, 201), np.linspace(0.5, -0.5, 201)[1:]])
    e, v = system.eigh(loop[0], L + 4)
    start = fix_initial_signs(v[:, :L])
    prev = (e[:L], start)
    for lam in loop[1:]:
        e, v = system.eigh(lam, L + 4)
        res = track_levels(prev, e, v)
        prev = (res.energies, res.vectors)
    np.testing.assert_allclose(prev[1], start, atol=1e-9)


# --------------------------------------------------------------------------
# transition amplitudes


def test_tfim_chi_matches_closed_form():
    N = 4
    k = critical_momentum(N)
    sw = spectral_sweep(ModelSpec("TFIM", N), grid=np.linspace(-1, 1, 201))
    b = sw.default_sector()
    assert sw.ks[b] == pytest.approx(k)
    np.testing.assert_allclose(sw.chi[:, b, 1, 0], tfim_chi_exact(N, sw.lam), atol=1e-10)
    np.testing.assert_allclose(sw.gaps[:, b, 1, 0], tfim_gap_exact(N, sw.lam), atol=1e-10)


@pytest.mark.parametrize("spec", [ModelSpec("LMGM", 32), ModelSpec("DICKE", 6, M=8)])
def test_chi_antisymmetric(spec):
    system = LmgmSystem(32) if spec.kind.value == "LMGM" else DickeSystem(6, 8)
    for lam in (-0.7, 0.0, 0.4):
        e, v = system.eigh(lam, 10)
        dH = system.hamiltonian_derivative(lam) if hasattr(system, "hamiltonian_derivative") else system.interaction(lam)
        A = system.basis_generator(lam) if hasattr(system, "basis_generator") else None
        chi, V, deg = transition_amplitudes(e, v, dH, A)
        assert not deg.any()
        assert np.max(np.abs(chi + chi.T)) <= 1e-10
        if A is None:
            gap = e[:, None] - e[None, :]
            np.fill_diagonal(gap, 1.0)
            off = ~np.eye(10, dtype=bool)
            np.testing.assert_allclose(chi[off], (V / gap)[off], rtol=1e-12)


def test_lmgm_chi_paths_agree():
    system = LmgmSystem(32)
    e, v = system.eigh(0.1, 10)
    v = fix_initial_signs(v)
    chi, _, _ = transition_amplitudes(e, v, system.interaction(0.1))
    fd = chi_finite_difference(system, 0.1, v, h=1e-4)
    off = ~np.eye(10, dtype=bool)
    assert np.max(np.abs(chi - fd)[off]) <= 1e-6


@pytest.mark.parametrize("lam", [-0.6, 0.0, 0.5])
def test_dicke_chi_paths_agree(lam):
    # the basis moves with lambda; the common-basis finite difference is the independent path
    system = DickeSystem(6, 8)
    e, v = system.eigh(lam, 8)
    v = fix_initial_signs(v)
    chi, _, _ = transition_amplitudes(e, v, system.hamiltonian_derivative(lam), system.basis_generator(lam))
    off = ~np.eye(8, dtype=bool)
    err = [np.max(np.abs(chi - chi_finite_difference(system, lam, v, h=h))[off]) for h in (1e-3, 1e-4, 1e-5)]
    assert err[2] <= 1e-6
    # central differences converge quadratically onto the exact generator path
    assert err[0] / err[1] == pytest.approx(100, rel=0.1)


def test_degenerate_cluster_rotated_onto_smooth_continuations():
    # two levels crossing exactly at lam = 0: H = lam * diag(1, -1) + rotated frame
    R = special_ortho_group.rvs(3, random_state=3)
    dH = R @ np.diag([1.0, -1.0, 0.0]) @ R.T
    H0 = R @ np.diag([0.0, 0.0, 4.0]) @ R.T
    _, v = np.linalg.eigh(H0)
    mixed = v[:, :2] @ np.array([[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]])
    e, out = resolve_degeneracies(np.array([0.0, 0.0, 4.0]), np.column_stack([mixed, v[:, 2]]), dH)
    slopes = np.einsum("ij,ij->j", out, dH @ out)
    np.testing.assert_allclose(slopes[:2], [-1.0, 1.0], atol=1e-12)
    chi, _, deg = transition_amplitudes(e, out, dH)
    assert deg[0, 1] and deg[1, 0]
    assert np.isnan(chi[0, 1])


def test_degeneracy_threshold_relative_to_span():
    assert degeneracy_threshold([0.0, 50.0]) == pytest.approx(50e-10)
    assert degeneracy_threshold([0.0, 0.1]) == pytest.approx(1e-10)


# --------------------------------------------------------------------------
# sweeps


def test_snapshot_grid_layout():
    grid = snapshot_grid(160, 1)
    assert grid[0] == -1.0 and grid[-1] == 1.0 and 0.0 in grid
    assert np.all(np.diff(grid) > 0)
    x = 160 * grid
    inner = x[np.abs(x) <= 50 + 1e-9]
    np.testing.assert_allclose(np.diff(inner), 0.05, rtol=1e-9)
    assert inner.size == 2001


def test_sweep_energies_continuous_and_vectors_smooth():
    sw, vecs = spectral_sweep(ModelSpec("LMGM", 32), n_levels=8, keep_vectors=True)
    dE = np.abs(np.diff(sw.energies[:, 0], axis=0))
    h = np.diff(sw.lam)[:, None]
    C = np.max(np.abs(sw.V[:, 0].diagonal(axis1=1, axis2=2)))
    assert np.all(dE <= 1.01 * C * h + 1e-12)
    for a, b in zip(vecs[:-1], vecs[1:]):
        O = a.T @ b
        assert np.max(np.abs(O - np.eye(8))) < 0.05


def test_sweep_chi_antisymmetric(lmgm32_sweep, dicke_sweep):
    for sw in (lmgm32_sweep, dicke_sweep):
        chi = sw.chi[:, 0]
        assert np.all(np.isfinite(chi))
        assert np.max(np.abs(chi + np.swapaxes(chi, 1, 2))) <= 1e-10


def test_dicke_sweep_survives_degenerate_start(dicke_sweep):
    # at lambda = -1 the coupling vanishes and the Dicke spectrum is degenerate
    assert dicke_sweep.lam[0] == -1.0
    assert any("finite-difference" in ev for ev in dicke_sweep.events)


def test_sweep_csv(tmp_path, lmgm32_sweep):
    path = tmp_path / "snap.csv"
    lmgm32_sweep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,x," + ",".join(f"E_{n}" for n in range(10)) + ",Delta_10,chi_10"
    assert len(lines) == lmgm32_sweep.lam.size + 1


def test_critical_function_consistency_shrinks_with_size():
    # N**(-1/nu) chi_10(x N**(-1/nu)) for successive sizes
    x = np.linspace(-10, 10, 201)
    curves = {}
    for N in (40, 80, 160, 320):
        sw = spectral_sweep(ModelSpec("TFIM", N))
        b = sw.default_sector()
        curves[N] = np.interp(x, sw.x(), sw.chi[:, b, 1, 0] / N)
    gaps = [np.max(np.abs(curves[a] - curves[b])) for a, b in ((40, 80), (80, 160), (160, 320))]
    assert gaps[0] > gaps[1] > gaps[2]
