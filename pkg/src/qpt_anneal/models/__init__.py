"""Symmetry-reduced Hamiltonians for the three models.

Every ``*System`` class exposes ``hamiltonian(lam)``, ``interaction(lam)``
(the operator ``dH/dlambda`` in the current basis), ``eigh(lam, n)`` and
``overlap``, which is ``None`` for lambda-independent bases.
"""

from .base import ModelKind, ModelSpec
from .dicke import (
    DickeAdaptedBasis,
    DickeFockSystem,
    DickeSystem,
    build_dicke,
    dicke_interaction,
    displaced_fock_matrix,
)
from .lmgm import BandedHamiltonian, LmgmSystem, build_lmgm, lmgm_interaction
from .tfim import (
    TfimBlockSystem,
    TfimChainSystem,
    build_tfim_block,
    critical_momentum,
    momenta,
    tfim_block_interaction,
    tfim_chi_exact,
    tfim_gap_exact,
)
from ._linalg import EigensolverError


def build_system(spec: ModelSpec, k: float | None = None):
    """Reduced-basis system for ``spec``.

    TFIM needs a block momentum ``k``; without one the full even-parity chain
    (brute force, small N only) is returned.
    """
    if spec.kind is ModelKind.TFIM:
        return TfimChainSystem(spec.N) if k is None else TfimBlockSystem(spec.N, k)
    if spec.kind is ModelKind.LMGM:
        return LmgmSystem(spec.N)
    return DickeSystem(spec.N, spec.M)


def interaction_operator(spec: ModelSpec, lam: float, k: float | None = None):
    """``dH/dlambda`` in the same basis as the matching ``build_*`` call."""
    return build_system(spec, k).interaction(lam)


__all__ = [
    "BandedHamiltonian",
    "DickeAdaptedBasis",
    "DickeFockSystem",
    "DickeSystem",
    "EigensolverError",
    "LmgmSystem",
    "ModelKind",
    "ModelSpec",
    "TfimBlockSystem",
    "TfimChainSystem",
    "build_dicke",
    "build_lmgm",
    "build_system",
    "build_tfim_block",
    "critical_momentum",
    "dicke_interaction",
    "displaced_fock_matrix",
    "interaction_operator",
    "lmgm_interaction",
    "momenta",
    "tfim_block_interaction",
    "tfim_chi_exact",
    "tfim_gap_exact",
]
