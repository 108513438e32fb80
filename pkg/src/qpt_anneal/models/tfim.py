"""Transverse-field Ising chain.

After Jordan-Wigner and Fourier transforms the even-parity dynamics splits
into independent two-level problems, one per momentum pair ``{k, -k}`` with
``k = pi (2n + 1) / N``::

    H_k = sigma_z + (1 - lam) (cos k sigma_z + sin k sigma_x)

The matching spin chain (checked against brute force in the tests) is::

    H = -1/2 sum_i sigma^z_i - (1 - lam)/2 sum_i sigma^x_i sigma^x_{i+1}

on a periodic ring, restricted to even parity.  Its even-sector spectrum is
exactly ``sum_k +-eps_k`` with no constant offset.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ._linalg import lowest_eigh


def _check_even(N):
    if N < 2 or N % 2:
        raise ValueError(f"TFIM needs an even N >= 2, got {N}")


def momenta(N: int) -> np.ndarray:
    _check_even(N)
    return np.pi * (2 * np.arange(N // 2) + 1) / N


def critical_momentum(N: int) -> float:
    """Momentum of the block that carries the smallest gap near the critical point.

    The closed forms :func:`tfim_gap_exact` / :func:`tfim_chi_exact` describe
    this block, ``k = pi (N - 1) / N``.
    """
    return float(momenta(N)[-1])


def _check_k(N, k):
    ks = momenta(N)
    if not np.any(np.isclose(ks, k, rtol=0, atol=1e-12)):
        raise ValueError(f"k={k!r} is not on the momentum grid pi(2n+1)/{N}")


def build_tfim_block(N: int, k: float, lam: float) -> np.ndarray:
    _check_k(N, k)
    return _block(k, lam)


def _block(k, lam):
    g = 1.0 - lam
    a = 1.0 + g * np.cos(k)
    b = g * np.sin(k)
    return np.array([[a, b], [b, -a]])


def tfim_block_interaction(k: float) -> np.ndarray:
    """``dH_k/dlambda``."""
    c, s = np.cos(k), np.sin(k)
    return -np.array([[c, s], [s, -c]])


def tfim_gap_exact(N: int, lam):
    _check_even(N)
    s, c = np.sin(np.pi / N), np.cos(np.pi / N)
    return 2.0 * np.sqrt((np.asarray(lam) + c - 1.0) ** 2 + s**2)


def tfim_chi_exact(N: int, lam):
    """Magnitude of the ground/first-excited transition amplitude."""
    _check_even(N)
    s, c = np.sin(np.pi / N), np.cos(np.pi / N)
    return (s / 2.0) / ((np.asarray(lam) + c - 1.0) ** 2 + s**2)


def block_stack(ks, lam) -> np.ndarray:
    """All block Hamiltonians at once, shape ``(len(ks), 2, 2)``."""
    ks = np.asarray(ks, dtype=float)
    g = 1.0 - lam
    a = 1.0 + g * np.cos(ks)
    b = g * np.sin(ks)
    out = np.empty((ks.size, 2, 2))
    out[:, 0, 0] = a
    out[:, 1, 1] = -a
    out[:, 0, 1] = out[:, 1, 0] = b
    return out


def interaction_stack(ks) -> np.ndarray:
    ks = np.asarray(ks, dtype=float)
    c, s = np.cos(ks), np.sin(ks)
    out = np.empty((ks.size, 2, 2))
    out[:, 0, 0] = -c
    out[:, 1, 1] = c
    out[:, 0, 1] = out[:, 1, 0] = -s
    return out


class TfimBlockSystem:
    """One momentum block as a two-level system."""

    overlap = None

    def __init__(self, N: int, k: float):
        _check_k(N, k)
        self.N = N
        self.k = float(k)
        self.dimension = 2

    def hamiltonian(self, lam):
        return _block(self.k, lam)

    def interaction(self, lam):
        return tfim_block_interaction(self.k)

    def eigh(self, lam, n):
        w, v = np.linalg.eigh(self.hamiltonian(lam))
        return w[:n], v[:, :n]


def _even_states(N):
    states = np.arange(2**N, dtype=np.int64)
    down = np.array([bin(s).count("1") for s in states])
    return states[down % 2 == 0]


class TfimChainSystem:
    """The periodic spin chain in its even-parity sector (dimension ``2**(N-1)``).

    Bit ``i`` set means spin ``i`` points down.  Only meant for small ``N``:
    it is the brute-force reference for the block decomposition.
    """

    overlap = None

    def __init__(self, N: int):
        _check_even(N)
        self.N = N
        states = _even_states(N)
        self.states = states
        self.dimension = states.size
        index = {int(s): i for i, s in enumerate(states)}
        bits = (states[:, None] >> np.arange(N)) & 1
        self._field = -0.5 * np.sum(1 - 2 * bits, axis=1).astype(float)
        rows, cols = [], []
        for i in range(N):
            mask = (1 << i) | (1 << ((i + 1) % N))
            flipped = states ^ mask
            rows.append(np.arange(states.size))
            cols.append(np.array([index[int(f)] for f in flipped]))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        xx = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(states.size,) * 2)
        self._xx = xx.tocsr()
        self._z = sp.diags(self._field).tocsr()

    def hamiltonian(self, lam):
        return (self._z - 0.5 * (1.0 - lam) * self._xx).tocsr()

    def interaction(self, lam):
        return 0.5 * self._xx

    def eigh(self, lam, n):
        return lowest_eigh(self.hamiltonian(lam), n)
