"""Lipkin-Meshkov-Glick model in the J = N/2, even-parity sector.

The all-to-all chain ``-sum sigma_z - (lam + 1)/N sum_{i<j} sigma_x sigma_x``
reduces to::

    H = -2 J_z - 2 (lam + 1)/N J_x**2 + (lam + 1)/2

Basis: ``|J, m>`` with ``m = J, J-2, ..., -J`` (descending, so the
lambda = -1 ground state sits at index 0).  ``J_x**2`` couples m to m and
m +- 2 only, so the reduced matrix is tridiagonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal


@dataclass
class BandedHamiltonian:
    """Real symmetric tridiagonal matrix stored as (diagonal, first off-band)."""

    diagonal: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        self.diagonal = np.asarray(self.diagonal, dtype=float)
        self.offdiag = np.asarray(self.offdiag, dtype=float)
        if self.offdiag.size != max(self.diagonal.size - 1, 0):
            raise ValueError("off-band must have dimension - 1 entries")
        if not (np.all(np.isfinite(self.diagonal)) and np.all(np.isfinite(self.offdiag))):
            raise ValueError("non-finite matrix entry")

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    @property
    def shape(self):
        return (self.dimension, self.dimension)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v):
        v = np.asarray(v)
        d = self.diagonal if v.ndim == 1 else self.diagonal[:, None]
        e = self.offdiag if v.ndim == 1 else self.offdiag[:, None]
        out = d * v
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
        return out

    __matmul__ = matvec

    def eigh(self, n: int):
        if self.dimension == 1:
            return self.diagonal.copy(), np.ones((1, 1))
        return eigh_tridiagonal(
            self.diagonal, self.offdiag, select="i", select_range=(0, n - 1), lapack_driver="stemr"
        )


def _m_values(N):
    J = N / 2
    return np.arange(J, -J - 1, -2.0), J * (J + 1)


def _jx2_parts(N):
    m, jj = _m_values(N)
    diag = (jj - m**2) / 2.0
    mm = m[:-1]
    off = np.sqrt((jj - mm * (mm - 1)) * (jj - (mm - 1) * (mm - 2))) / 4.0
    return m, diag, off


def build_lmgm(N: int, lam: float) -> BandedHamiltonian:
    if N < 2 or N % 2:
        raise ValueError(f"LMGM needs an even N >= 2, got {N}")
    m, jx2_d, jx2_o = _jx2_parts(N)
    g = 2.0 * (lam + 1.0) / N
    return BandedHamiltonian(-2.0 * m - g * jx2_d + (lam + 1.0) / 2.0, -g * jx2_o)


def lmgm_interaction(N: int) -> BandedHamiltonian:
    """``dH/dlambda = -(2/N) J_x**2 + 1/2`` (lambda independent)."""
    _, jx2_d, jx2_o = _jx2_parts(N)
    return BandedHamiltonian(-2.0 / N * jx2_d + 0.5, -2.0 / N * jx2_o)


class LmgmSystem:
    overlap = None

    def __init__(self, N: int):
        if N < 2 or N % 2:
            raise ValueError(f"LMGM needs an even N >= 2, got {N}")
        self.N = N
        self.dimension = N // 2 + 1
        self._V = lmgm_interaction(N)

    def hamiltonian(self, lam):
        return build_lmgm(self.N, lam)

    def interaction(self, lam):
        return self._V

    def eigh(self, lam, n):
        return self.hamiltonian(lam).eigh(n)


def lmgm_full_hamiltonian(N: int, lam: float) -> sp.csr_matrix:
    """Brute-force ``2**N`` Hamiltonian of the all-to-all chain (small N only)."""
    sx = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    sz = sp.csr_matrix(np.diag([1.0, -1.0]))
    eye = sp.identity(2, format="csr")

    def site(op, i):
        return reduce(lambda a, b: sp.kron(a, b, format="csr"), [op if j == i else eye for j in range(N)])

    X = [site(sx, i) for i in range(N)]
    H = -sum(site(sz, i) for i in range(N))
    H = H - (lam + 1.0) / N * sum(X[i] @ X[j] for i in range(N) for j in range(i + 1, N))
    return H.tocsr()


def spin_flip_parity(N: int) -> np.ndarray:
    """Diagonal of ``prod_i sigma_z^(i)`` in the computational basis."""
    return reduce(np.kron, [np.array([1.0, -1.0])] * N)
