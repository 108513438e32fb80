"""Resonant Dicke model in the J = N/2 sector.

    H = J_z + a^dag a + G J_x (a + a^dag),    G = (1 + lam) / sqrt(N)

Two representations of the even-parity sector are provided:

* the parity-adapted displaced-Fock basis, whose vectors are
  ``(|m>_x D(-mG)|k> + (-1)**k |-m>_x D(mG)|k>) / sqrt(2)`` for
  ``m = 1..J``, ``k = 0..M-1`` and ``|0>_x |k>`` for even ``k < M``.  The
  photon part is diagonal here and ``J_z`` couples neighbouring ``m`` through
  displaced-Fock overlaps ``<k'|D(G)|k>`` (generalized Laguerre closed form);
* a plain truncated Fock basis ``|m>_z |n>``, ``n <= n_cap``, used as the
  brute-force reference.

``|m>_x`` phases are fixed so that ``<m+1|_x J_z |m>_x > 0``; with that choice
the spin-flip part of the parity maps ``|m>_x`` to ``|-m>_x`` with no extra
sign, which is what makes the ``(-1)**k`` combination even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, expm
from scipy.special import eval_genlaguerre, gammaln

from ._linalg import lowest_eigh


def coupling(N: int, lam: float) -> float:
    return (1.0 + lam) / math.sqrt(N)


def displaced_fock_matrix(beta: float, M: int) -> np.ndarray:
    """``<k'|D(beta)|k>`` for real ``beta`` and ``k, k' < M``.

    Row index is ``k'``, column index ``k``.
    """
    k = np.arange(M)
    kp, kk = np.meshgrid(k, k, indexing="ij")
    lo = np.minimum(kp, kk)
    diff = np.abs(kp - kk)
    x = beta * beta
    lag = eval_genlaguerre(lo, diff, x)
    # (-beta)**diff when k' < k, beta**diff otherwise
    base = np.where(kp >= kk, beta, -beta)
    prefactor = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + diff + 1)) - 0.5 * x)
    return prefactor * base**diff * lag


def displaced_fock_derivative(beta: float, M: int) -> np.ndarray:
    """``d/dbeta <k'|D(beta)|k>`` for ``k, k' < M``.

    ``D(beta)`` commutes with ``a^dag - a``, so the derivative is
    ``<k'|D(beta) (a^dag - a)|k>``; the ``k + 1 = M`` component needs one
    extra row of the overlap table.
    """
    big = displaced_fock_matrix(beta, M + 1)
    return (big @ _momentum_matrix(M + 1))[:M, :M]


def _momentum_matrix(M):
    """``a^dag - a`` truncated to ``k < M`` (real antisymmetric)."""
    off = np.sqrt(np.arange(1, M))
    return np.diag(off, -1) - np.diag(off, 1)


def _quadrature_matrix(M):
    """``a + a^dag`` truncated to ``k < M``."""
    off = np.sqrt(np.arange(1, M))
    return np.diag(off, 1) + np.diag(off, -1)


@dataclass
class DickeAdaptedBasis:
    """Index bookkeeping for the adapted basis at one displacement ``G``."""

    N: int
    M: int
    G: float
    labels: list = field(init=False)

    def __post_init__(self):
        if self.N % 2:
            raise ValueError(f"Dicke model needs even N, got {self.N}")
        J = self.N // 2
        labels = [(0, k) for k in range(0, self.M, 2)]
        labels += [(m, k) for m in range(1, J + 1) for k in range(self.M)]
        self.labels = labels

    @property
    def J(self) -> int:
        return self.N // 2

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def block(self, m):
        """Slice of basis indices with ``J_x`` label ``m``."""
        n0 = (self.M + 1) // 2
        if m == 0:
            return slice(0, n0)
        start = n0 + (m - 1) * self.M
        return slice(start, start + self.M)


def build_dicke(N: int, lam: float, M: int = 8):
    """Hamiltonian matrix in the adapted basis; returns ``(H, basis)``."""
    basis = DickeAdaptedBasis(N, M, coupling(N, lam))
    J, G = basis.J, basis.G
    H = np.zeros((basis.dimension,) * 2)
    m_arr = np.array([lab[0] for lab in basis.labels], dtype=float)
    k_arr = np.array([lab[1] for lab in basis.labels], dtype=float)
    H[np.diag_indices_from(H)] = k_arr - (G * m_arr) ** 2
    overlap = displaced_fock_matrix(G, M)
    for m in range(0, J):
        c = 0.5 * math.sqrt(J * (J + 1) - m * (m + 1))
        rows = basis.block(m + 1)
        cols = basis.block(m)
        if m == 0:
            blk = math.sqrt(2.0) * c * overlap[:, 0::2]
        else:
            blk = c * overlap
        H[rows, cols] = blk
        H[cols, rows] = blk.T
    return H, basis


def dicke_interaction(N: int, lam: float, M: int = 8) -> np.ndarray:
    """``dH/dlambda = J_x (a + a^dag) / sqrt(N)`` in the adapted basis at ``lam``."""
    basis = DickeAdaptedBasis(N, M, coupling(N, lam))
    X = _quadrature_matrix(M)
    V = np.zeros((basis.dimension,) * 2)
    for m in range(1, basis.J + 1):
        s = basis.block(m)
        V[s, s] = m * X - 2.0 * m * m * basis.G * np.eye(M)
    return V / math.sqrt(N)


def dicke_hamiltonian_derivative(N: int, lam: float, M: int = 8) -> np.ndarray:
    """``d/dlambda`` of the truncated adapted-basis matrix returned by :func:`build_dicke`.

    Differs from :func:`dicke_interaction` by the motion of the basis; the two
    coincide only in the untruncated limit.
    """
    basis = DickeAdaptedBasis(N, M, coupling(N, lam))
    J, G = basis.J, basis.G
    dG = 1.0 / math.sqrt(N)
    dH = np.zeros((basis.dimension,) * 2)
    m_arr = np.array([lab[0] for lab in basis.labels], dtype=float)
    dH[np.diag_indices_from(dH)] = -2.0 * G * dG * m_arr**2
    d_overlap = dG * displaced_fock_derivative(G, M)
    for m in range(0, J):
        c = 0.5 * math.sqrt(J * (J + 1) - m * (m + 1))
        rows = basis.block(m + 1)
        cols = basis.block(m)
        blk = math.sqrt(2.0) * c * d_overlap[:, 0::2] if m == 0 else c * d_overlap
        dH[rows, cols] = blk
        dH[cols, rows] = blk.T
    return dH


def basis_generator(N: int, M: int = 8) -> np.ndarray:
    """``<B_i(lam)|d/dlam B_j(lam)>``; antisymmetric and independent of lambda."""
    basis = DickeAdaptedBasis(N, M, 0.0)
    A = np.zeros((basis.dimension,) * 2)
    P = _momentum_matrix(M)
    for m in range(1, basis.J + 1):
        s = basis.block(m)
        A[s, s] = -m * P
    return A / math.sqrt(N)


def adapted_overlap(N: int, M: int, lam_a: float, lam_b: float) -> np.ndarray:
    """``<B_i(G_a)|B_j(G_b)>`` between adapted bases at two couplings."""
    basis = DickeAdaptedBasis(N, M, coupling(N, lam_a))
    dG = basis.G - coupling(N, lam_b)
    S = np.zeros((basis.dimension,) * 2)
    s0 = basis.block(0)
    S[s0, s0] = np.eye(s0.stop - s0.start)
    for m in range(1, basis.J + 1):
        s = basis.block(m)
        S[s, s] = displaced_fock_matrix(m * dG, M)
    return S


class DickeSystem:
    """Adapted-basis Dicke model; the basis moves with lambda."""

    def __init__(self, N: int, M: int = 8):
        if N % 2:
            raise ValueError(f"Dicke model needs even N, got {N}")
        self.N, self.M = N, M
        self.dimension = DickeAdaptedBasis(N, M, 0.0).dimension

    def hamiltonian(self, lam):
        return build_dicke(self.N, lam, self.M)[0]

    def interaction(self, lam):
        return dicke_interaction(self.N, lam, self.M)

    def overlap(self, lam_a, lam_b):
        return adapted_overlap(self.N, self.M, lam_a, lam_b)

    def hamiltonian_derivative(self, lam):
        return dicke_hamiltonian_derivative(self.N, lam, self.M)

    def basis_generator(self, lam):
        return basis_generator(self.N, self.M)

    def eigh(self, lam, n):
        return eigh(self.hamiltonian(lam), subset_by_index=[0, n - 1])


# --------------------------------------------------------------------------
# plain Fock reference


class DickeFockSystem:
    """Even-parity sector of ``|m>_z |n>`` with ``n <= n_cap`` photons."""

    overlap = None

    def __init__(self, N: int, n_cap: int = 60):
        if N % 2:
            raise ValueError(f"Dicke model needs even N, got {N}")
        self.N, self.n_cap = N, n_cap
        J = N // 2
        labels = [(m, n) for n in range(n_cap + 1) for m in range(-J, J + 1) if (n + m + J) % 2 == 0]
        self.labels = labels
        self.dimension = len(labels)
        index = {lab: i for i, lab in enumerate(labels)}
        m = np.array([lab[0] for lab in labels], dtype=float)
        n = np.array([lab[1] for lab in labels], dtype=float)
        self._free = sp.diags(m + n).tocsr()
        rows, cols, vals = [], [], []
        for i, (mi, ni) in enumerate(labels):
            for dm in (-1, 1):
                mj = mi + dm
                if abs(mj) > J:
                    continue
                jx = 0.5 * math.sqrt(J * (J + 1) - mi * mj)
                for dn in (-1, 1):
                    nj = ni + dn
                    if nj < 0 or nj > n_cap:
                        continue
                    j = index[(mj, nj)]
                    rows.append(j)
                    cols.append(i)
                    vals.append(jx * math.sqrt(max(ni, nj)))
        self._coupling = sp.coo_matrix((vals, (rows, cols)), shape=(self.dimension,) * 2).tocsr()

    def hamiltonian(self, lam):
        return (self._free + coupling(self.N, lam) * self._coupling).tocsr()

    def interaction(self, lam):
        return self._coupling / math.sqrt(self.N)

    def eigh(self, lam, n):
        return lowest_eigh(self.hamiltonian(lam), n)

    def ground_state_at(self, lam):
        return self.eigh(lam, 1)


def jx_eigenbasis(J: int) -> np.ndarray:
    """Columns ``|m>_x`` (m = J..-J) in the ``|m>_z`` basis (m = J..-J).

    Phases follow the module convention ``<m+1|_x J_z |m>_x > 0``.
    """
    m = np.arange(J, -J - 1, -1.0)
    off = 0.5 * np.sqrt(J * (J + 1) - m[1:] * (m[1:] + 1))
    jx = np.diag(off, 1) + np.diag(off, -1)
    w, U = eigh(jx)
    U = U[:, np.argsort(-w)]
    jz = np.diag(m)
    for i in range(1, U.shape[1]):
        if U[:, i - 1] @ jz @ U[:, i] < 0:
            U[:, i] *= -1
    return U


def adapted_basis_in_fock(N: int, M: int, lam: float, n_cap: int) -> np.ndarray:
    """Adapted basis vectors written in the full (both-parity) ``|m>_z|n>`` space.

    Row ordering is ``m_z`` major (J..-J), photon number minor.  Verification
    helper: displacements are built by matrix exponentials, independent of
    the Laguerre closed form.
    """
    J = N // 2
    basis = DickeAdaptedBasis(N, M, coupling(N, lam))
    U = jx_eigenbasis(J)
    a = np.diag(np.sqrt(np.arange(1, n_cap + 1)), 1)
    gen = a.T - a

    def displaced(alpha, k):
        e = np.zeros(n_cap + 1)
        e[k] = 1.0
        return expm(alpha * gen) @ e

    cols = []
    for m, k in basis.labels:
        spin_p = U[:, J - m]
        if m == 0:
            vec = np.kron(spin_p, displaced(0.0, k))
        else:
            spin_m = U[:, J + m]
            vec = np.kron(spin_p, displaced(-m * basis.G, k))
            vec = vec + (-1) ** k * np.kron(spin_m, displaced(m * basis.G, k))
            vec /= math.sqrt(2.0)
        cols.append(vec)
    return np.array(cols).T


def dicke_full_fock_hamiltonian(N: int, lam: float, n_cap: int) -> np.ndarray:
    """Dense ``J_z + a^dag a + G J_x (a + a^dag)`` on ``|m>_z|n>`` (m = J..-J, both parities)."""
    J = N // 2
    m = np.arange(J, -J - 1, -1.0)
    off = 0.5 * np.sqrt(J * (J + 1) - m[1:] * (m[1:] + 1))
    jx = np.diag(off, 1) + np.diag(off, -1)
    a = np.diag(np.sqrt(np.arange(1, n_cap + 1)), 1)
    num = a.T @ a
    return (
        np.kron(np.diag(m), np.eye(n_cap + 1))
        + np.kron(np.eye(2 * J + 1), num)
        + coupling(N, lam) * np.kron(jx, a + a.T)
    )


def dicke_parity_diagonal(N: int, n_cap: int) -> np.ndarray:
    """``exp(i pi (a^dag a + J_z + J))`` on the ``|m>_z|n>`` layout above."""
    J = N // 2
    m = np.arange(J, -J - 1, -1)
    n = np.arange(n_cap + 1)
    return ((-1.0) ** (m[:, None] + J + n[None, :])).ravel()
