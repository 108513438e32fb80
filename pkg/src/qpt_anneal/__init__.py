"""Near-adiabatic quenches across quantum phase transitions in TFIM, LMGM and Dicke models."""

from .models import ModelKind, ModelSpec
from .schedule import AnnealingSchedule, ScalingExponents, scaled_coordinate, scaled_velocity

__version__ = "0.1.0"

__all__ = [
    "AnnealingSchedule",
    "ModelKind",
    "ModelSpec",
    "ScalingExponents",
    "scaled_coordinate",
    "scaled_velocity",
]
