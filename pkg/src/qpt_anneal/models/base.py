from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..schedule import ScalingExponents


class ModelKind(str, Enum):
    TFIM = "TFIM"
    LMGM = "LMGM"
    DICKE = "DICKE"


@dataclass(frozen=True)
class ModelSpec:
    """Model identity and size.

    ``M`` is the displaced-Fock truncation and only matters for the Dicke model.
    """

    kind: ModelKind
    N: int
    M: int = 8

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if self.N % 2:
            raise ValueError(f"odd N={self.N} is not supported; all three models need even N")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dimension(self) -> int:
        """Size of the symmetry-reduced space (per k-block for TFIM)."""
        if self.kind is ModelKind.TFIM:
            return 2
        if self.kind is ModelKind.LMGM:
            return self.N // 2 + 1
        return self.M * (self.N // 2) + math.ceil(self.M / 2)

    def exponents(self, kappa=1) -> ScalingExponents:
        return ScalingExponents.for_model(self.kind, kappa)

    @property
    def label(self) -> str:
        if self.kind is ModelKind.DICKE:
            return f"{self.kind.value}(N={self.N},M={self.M})"
        return f"{self.kind.value}(N={self.N})"
