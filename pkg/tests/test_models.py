import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from qpt_anneal.models import (
    DickeFockSystem,
    ModelKind,
    ModelSpec,
    build_dicke,
    build_lmgm,
    build_system,
    build_tfim_block,
    critical_momentum,
    interaction_operator,
    lmgm_interaction,
    momenta,
    tfim_block_interaction,
    tfim_chi_exact,
    tfim_gap_exact,
)
from qpt_anneal.models.dicke import (
    adapted_basis_in_fock,
    adapted_overlap,
    basis_generator,
    dicke_full_fock_hamiltonian,
    dicke_hamiltonian_derivative,
    dicke_parity_diagonal,
)
from qpt_anneal.models.lmgm import lmgm_full_hamiltonian, spin_flip_parity
from qpt_anneal.models.tfim import TfimChainSystem

SQ2 = math.sqrt(2.0)
lams = st.floats(-1.0, 1.0)


def _asym(A):
    A = A.to_dense() if hasattr(A, "to_dense") else np.asarray(A)
    return float(np.max(np.abs(A - A.T)))


# --------------------------------------------------------------------------
# model spec


def test_spec_dimensions():
    assert ModelSpec("TFIM", 8).dimension == 2
    assert ModelSpec("LMGM", 16).dimension == 9
    # M * N/2 + ceil(M/2)
    assert ModelSpec("DICKE", 8, M=8).dimension == 8 * 4 + 4
    assert ModelSpec("DICKE", 6, M=5).dimension == 5 * 3 + 3


@pytest.mark.parametrize("kind", list(ModelKind))
def test_odd_sizes_rejected(kind):
    with pytest.raises(ValueError, match="odd"):
        ModelSpec(kind, 7)


# --------------------------------------------------------------------------
# TFIM


@pytest.mark.parametrize(
    "N, k, lam, expected",
    [
        (4, math.pi / 4, 1.0, [[1, 0], [0, -1]]),
        (2, math.pi / 2, 0.0, [[1, 1], [1, -1]]),
        (4, math.pi / 4, -1.0, [[1 + SQ2, SQ2], [SQ2, -1 - SQ2]]),
    ],
)
def test_tfim_block_examples(N, k, lam, expected):
    np.testing.assert_allclose(build_tfim_block(N, k, lam), expected, atol=1e-15)


def test_tfim_block_rejects_off_grid_momentum():
    with pytest.raises(ValueError, match="momentum grid"):
        build_tfim_block(4, math.pi / 3, 0.0)


def test_tfim_gap_examples():
    assert tfim_gap_exact(4, 0.0) == pytest.approx(1.530734, abs=1e-6)
    assert tfim_gap_exact(4, 0.0) == pytest.approx(4 * math.sin(math.pi / 8), rel=1e-14)
    assert tfim_gap_exact(4, 1 - math.cos(math.pi / 4)) == pytest.approx(SQ2, rel=1e-14)
    assert tfim_gap_exact(10**6, 0.5) == pytest.approx(1.0, abs=1e-5)


def test_tfim_chi_examples():
    assert tfim_chi_exact(4, 1 - math.cos(math.pi / 4)) == pytest.approx(1 / (2 * math.sin(math.pi / 4)), rel=1e-14)
    assert tfim_chi_exact(4, 0.0) == pytest.approx(0.603553, abs=1e-6)
    assert tfim_chi_exact(2, 10.0) == pytest.approx(0.5 / 82, rel=1e-14)


def _block_chi_numeric(N, k, lam):
    """-<1| d/dlam |0> of the 2x2 block from its eigenvector derivative (perturbation formula)."""
    w, U = np.linalg.eigh(build_tfim_block(N, k, lam))
    V = U.T @ tfim_block_interaction(k) @ U
    return w[1] - w[0], V[1, 0] / (w[1] - w[0]), U


def test_tfim_chi_example_against_brute_force_block():
    # N=2, lam=10 via a finite-difference eigenvector derivative
    k = math.pi / 2
    h = 1e-6
    _, U0 = np.linalg.eigh(build_tfim_block(2, k, 10.0))
    _, Up = np.linalg.eigh(build_tfim_block(2, k, 10.0 + h))
    _, Um = np.linalg.eigh(build_tfim_block(2, k, 10.0 - h))
    Up *= np.sign(np.sum(Up * U0, axis=0))
    Um *= np.sign(np.sum(Um * U0, axis=0))
    chi = -U0[:, 1] @ (Up[:, 0] - Um[:, 0]) / (2 * h)
    assert abs(chi) == pytest.approx(tfim_chi_exact(2, 10.0), rel=1e-8)


@pytest.mark.parametrize("N", [4, 16, 80])
def test_closed_forms_describe_the_critical_block(N):
    k = critical_momentum(N)
    assert k == pytest.approx(math.pi * (N - 1) / N)
    for lam in np.linspace(-1, 1, 41):
        gap, chi, _ = _block_chi_numeric(N, k, lam)
        assert gap == pytest.approx(tfim_gap_exact(N, lam), rel=1e-12)
        assert abs(chi) == pytest.approx(tfim_chi_exact(N, lam), rel=1e-10)


@given(st.sampled_from([2, 4, 8, 16, 64]), st.data(), lams)
def test_tfim_block_properties(N, data, lam):
    k = data.draw(st.sampled_from(list(momenta(N))))
    H = build_tfim_block(N, k, lam)
    assert _asym(H) == 0.0
    assert np.trace(H) == pytest.approx(0.0, abs=1e-15)
    w = np.linalg.eigvalsh(H)
    e = math.sqrt((1 + (1 - lam) * math.cos(k)) ** 2 + (1 - lam) ** 2 * math.sin(k) ** 2)
    np.testing.assert_allclose(w, [-e, e], atol=1e-12)


def test_tfim_interaction_example():
    c = s = math.cos(math.pi / 4)
    np.testing.assert_allclose(tfim_block_interaction(math.pi / 4), -np.array([[c, s], [s, -c]]), atol=1e-15)
    np.testing.assert_allclose(interaction_operator(ModelSpec("TFIM", 4), 0.3, k=math.pi / 4), -np.array([[c, s], [s, -c]]))


@pytest.mark.parametrize("N", [6, 8])
def test_tfim_chain_spectrum_is_block_sum(N):
    # paired-mode levels sum_k +-eps_k all appear in the even-parity chain spectrum
    lam = 0.37
    eps = np.array([np.linalg.eigvalsh(build_tfim_block(N, k, lam))[1] for k in momenta(N)])
    signs = np.array(np.meshgrid(*[[-1, 1]] * eps.size)).reshape(eps.size, -1).T
    block_levels = np.sort(signs @ eps)
    chain = TfimChainSystem(N)
    w = np.linalg.eigvalsh(chain.hamiltonian(lam).toarray())
    assert w.min() == pytest.approx(block_levels[0], abs=1e-11)
    for e in block_levels:
        assert np.min(np.abs(w - e)) < 1e-11


# --------------------------------------------------------------------------
# LMGM


def _even_spectrum_full(N, lam):
    H = lmgm_full_hamiltonian(N, lam).toarray()
    w, U = np.linalg.eigh(H)
    parity = np.einsum("ij,i,ij->j", U, spin_flip_parity(N), U)
    return w, parity


def test_lmgm_small_example_against_full_space():
    # N=2: reduced levels must appear in the even-parity part of the 4x4 problem
    w_red = np.linalg.eigvalsh(build_lmgm(2, -1.0).to_dense())
    w, parity = _even_spectrum_full(2, -1.0)
    even = w[parity > 0.5]
    for e in w_red:
        assert np.min(np.abs(even - e)) < 1e-12


def test_lmgm_decoupled_example():
    H = build_lmgm(4, -1.0)
    np.testing.assert_allclose(H.to_dense(), np.diag([-4.0, 0.0, 4.0]), atol=1e-15)
    w, _ = build_system(ModelSpec("LMGM", 4)).eigh(-1.0, 3)
    np.testing.assert_allclose(w, [-4.0, 0.0, 4.0], atol=1e-14)


@pytest.mark.parametrize("N, lam", [(4, 0.0), (6, 0.5), (8, -0.3), (8, 1.0)])
def test_lmgm_ground_energy_matches_full_space(N, lam):
    w_red = np.linalg.eigvalsh(build_lmgm(N, lam).to_dense())
    w, parity = _even_spectrum_full(N, lam)
    assert w_red[0] == pytest.approx(w[0], abs=1e-8)
    assert parity[0] == pytest.approx(1.0, abs=1e-10)
    even = w[parity > 0.5]
    for e in w_red:
        assert np.min(np.abs(even - e)) < 1e-9


def test_lmgm_interaction_finite_difference():
    N, lam, h = 4, 0.3, 1e-4
    fd = (build_lmgm(N, lam + h).to_dense() - build_lmgm(N, lam - h).to_dense()) / (2 * h)
    np.testing.assert_allclose(fd, lmgm_interaction(N).to_dense(), atol=1e-10)


@given(st.sampled_from([2, 4, 10, 64, 512]), lams)
@settings(max_examples=30)
def test_lmgm_matrix_symmetric_banded(N, lam):
    H = build_lmgm(N, lam)
    assert H.dimension == N // 2 + 1
    assert np.all(np.isfinite(H.diagonal)) and np.all(np.isfinite(H.offdiag))
    v = np.random.default_rng(0).standard_normal(H.dimension)
    np.testing.assert_allclose(H.matvec(v), H.to_dense() @ v, atol=1e-12)


# --------------------------------------------------------------------------
# Dicke


def test_dicke_decoupled_example():
    H, _ = build_dicke(2, -1.0, 4)
    w = np.linalg.eigvalsh(H)
    assert w[0] == pytest.approx(-1.0, abs=1e-14)
    assert w[1] - w[0] == pytest.approx(2.0, abs=1e-14)
    fock = DickeFockSystem(2, 20)
    wf, _ = fock.eigh(-1.0, 2)
    np.testing.assert_allclose(wf, [-1.0, 1.0], atol=1e-12)


def test_dicke_gram_matrix_identity():
    B = adapted_basis_in_fock(4, 4, 0.5, 60)
    np.testing.assert_allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10)


def test_dicke_matrix_matches_fock_projection():
    N, M, lam = 4, 4, 0.5
    B = adapted_basis_in_fock(N, M, lam, 60)
    H_fock = dicke_full_fock_hamiltonian(N, lam, 60)
    H, _ = build_dicke(N, lam, M)
    np.testing.assert_allclose(H, B.T @ H_fock @ B, atol=1e-10)


def test_dicke_basis_has_even_parity():
    B = adapted_basis_in_fock(6, 5, 0.2, 60)
    P = dicke_parity_diagonal(6, 60)
    np.testing.assert_allclose(P[:, None] * B, B, atol=1e-12)


def test_dicke_ground_energy_M8_matches_fock():
    # stated tolerance for M = 8; see the M = 32 companion below
    H, _ = build_dicke(4, 0.0, 8)
    e_fock = DickeFockSystem(4, 60).eigh(0.0, 1)[0][0]
    assert np.linalg.eigvalsh(H)[0] == pytest.approx(e_fock, abs=1e-8)


@pytest.mark.parametrize("N, lam", [(4, 0.0), (4, 1.0), (8, -0.5), (8, 0.7), (8, 1.0)])
def test_dicke_ground_energy_converged_truncation_matches_fock(N, lam):
    H, _ = build_dicke(N, lam, 32)
    e_fock = DickeFockSystem(N, 60).eigh(lam, 1)[0][0]
    assert np.linalg.eigvalsh(H)[0] == pytest.approx(e_fock, abs=1e-8)


@pytest.mark.parametrize("N, M", [(2, 4), (4, 8), (8, 8)])
def test_dicke_adapted_levels_are_variational(N, M):
    # a truncated basis gives Ritz values: upper bounds that tighten with M
    fock = DickeFockSystem(N, 60)
    for lam in np.linspace(-1, 1, 9):
        exact = fock.eigh(lam, 6)[0]
        H, _ = build_dicke(N, lam, M)
        w = np.linalg.eigvalsh(H)[:6]
        assert np.all(w >= exact - 1e-10)
        w_big = np.linalg.eigvalsh(build_dicke(N, lam, M + 8)[0])[:6]
        assert np.all(np.abs(w_big - exact) <= np.abs(w - exact) + 1e-12)


def test_dicke_full_space_ground_state_has_even_parity():
    N, cap = 4, 40
    w, U = eigh(dicke_full_fock_hamiltonian(N, 0.4, cap), subset_by_index=[0, 0])
    parity = np.sum(dicke_parity_diagonal(N, cap) * U[:, 0] ** 2)
    assert parity == pytest.approx(1.0, abs=1e-10)
    assert w[0] == pytest.approx(DickeFockSystem(N, cap).eigh(0.4, 1)[0][0], abs=1e-10)


def test_dicke_fock_interaction_finite_difference():
    sysf = DickeFockSystem(2, 30)
    lam, h = 0.2, 1e-4
    fd = (sysf.hamiltonian(lam + h) - sysf.hamiltonian(lam - h)).toarray() / (2 * h)
    np.testing.assert_allclose(fd, sysf.interaction(lam).toarray(), atol=1e-10)


def test_dicke_matrix_derivative_and_basis_generator():
    N, M, lam, h = 6, 6, 0.3, 1e-5
    fd = (build_dicke(N, lam + h, M)[0] - build_dicke(N, lam - h, M)[0]) / (2 * h)
    np.testing.assert_allclose(dicke_hamiltonian_derivative(N, lam, M), fd, atol=1e-8)
    S = (adapted_overlap(N, M, lam, lam + h) - adapted_overlap(N, M, lam, lam - h)) / (2 * h)
    A = basis_generator(N, M)
    np.testing.assert_allclose(A, S, atol=1e-8)
    assert _asym(A + A.T) == 0.0


@given(st.sampled_from([(2, 3), (4, 4), (6, 8)]), lams)
@settings(max_examples=20, deadline=None)
def test_dicke_matrices_symmetric(NM, lam):
    N, M = NM
    H, basis = build_dicke(N, lam, M)
    assert basis.dimension == ModelSpec("DICKE", N, M).dimension
    assert _asym(H) < 1e-12
    assert _asym(dicke_hamiltonian_derivative(N, lam, M)) < 1e-12
    assert _asym(interaction_operator(ModelSpec("DICKE", N, M), lam)) < 1e-12
