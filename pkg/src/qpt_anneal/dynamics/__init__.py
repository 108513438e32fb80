"""Quench engines: direct time integration, eigenbasis amplitudes, scaled amplitudes."""

from .core import IntegrationError, IntegratorSettings, QuenchState, QuenchTrace
from .direct import DIMENSION_CAP, evolve_direct_reference, evolve_direct_tfim
from .eigenbasis import ScaledTables, evolve_eigenbasis, evolve_scaled

__all__ = [
    "DIMENSION_CAP",
    "IntegrationError",
    "IntegratorSettings",
    "QuenchState",
    "QuenchTrace",
    "ScaledTables",
    "evolve_direct_reference",
    "evolve_direct_tfim",
    "evolve_eigenbasis",
    "evolve_scaled",
]
