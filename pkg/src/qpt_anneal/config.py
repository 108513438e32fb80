"""Run configuration: flat ``key = value`` files with repeated keys for lists."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from .models import ModelKind

ENGINES = ("eigenbasis", "scaled", "direct")
CONVERGENCE_AXES = ("M", "n_levels", "photon_cap")
OUT_ENV = "QPT_ANNEAL_OUT"


class ConfigError(ValueError):
    """Raised for any invalid or incomplete run configuration."""


def _floats(values):
    return [float(v) for v in values]


def _ints(values):
    return [int(v) for v in values]


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


@dataclass
class RunConfig:
    """Everything a run needs; list fields are the sweep axes."""

    model: str = "TFIM"
    sizes: list = field(default_factory=list)
    velocities: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    kappa: list = field(default_factory=lambda: [1.0])
    M: int = 8
    engine: str = "eigenbasis"
    levels: int | None = None
    lambda_start: float = -1.0
    lambda_end: float = 1.0
    x_window: float = 50.0
    n_window: int = 2001
    outer_step: float = 2e-3
    n_output: int = 2000
    n_report: int = 5
    photon_cap: int = 60
    out: str | None = None
    workers: int = 1
    seed: int = 0
    collapse: bool = True
    collapse_window: list = field(default_factory=lambda: [-10.0, 10.0])
    collapse_q_tol: float = 0.03
    collapse_p0_tol: float = 0.02
    fit: bool = True
    gate: float = 1e-6
    gate_levels: bool = False

    # (parser, is_list)
    _SCHEMA = {
        "model": (str, False),
        "sizes": (_ints, True),
        "velocities": (_floats, True),
        "lambdas": (_floats, True),
        "kappa": (_floats, True),
        "M": (int, False),
        "engine": (str, False),
        "levels": (int, False),
        "lambda_start": (float, False),
        "lambda_end": (float, False),
        "x_window": (float, False),
        "n_window": (int, False),
        "outer_step": (float, False),
        "n_output": (int, False),
        "n_report": (int, False),
        "photon_cap": (int, False),
        "out": (str, False),
        "workers": (int, False),
        "seed": (int, False),
        "collapse": (_bool, False),
        "collapse_window": (_floats, True),
        "collapse_q_tol": (float, False),
        "collapse_p0_tol": (float, False),
        "fit": (_bool, False),
        "gate": (float, False),
        "gate_levels": (_bool, False),
    }
    _ALIASES = {"velocity": "velocities", "size": "sizes", "N": "sizes", "Lambda": "lambdas", "n_levels": "levels"}

    @property
    def kind(self) -> ModelKind:
        return ModelKind(self.model)

    @property
    def axis_kind(self) -> str:
        return "Lambda" if self.lambdas else "velocity"

    @property
    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "results")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build from ``key -> list of raw values`` (as produced by :func:`parse_config`)."""
        kwargs = {}
        for key, raw in mapping.items():
            key = cls._ALIASES.get(key, key)
            if key not in cls._SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            parse, is_list = cls._SCHEMA[key]
            values = raw if isinstance(raw, (list, tuple)) else [raw]
            try:
                if is_list:
                    items = []
                    for v in values:
                        items.extend(str(v).replace(",", " ").split() if isinstance(v, str) else [v])
                    kwargs[key] = parse(items)
                else:
                    if len(values) != 1:
                        raise ConfigError(f"key {key!r} given {len(values)} times but takes one value")
                    kwargs[key] = parse(values[0])
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
        return cls(**kwargs)

    def updated(self, **overrides) -> "RunConfig":
        """Copy with non-``None`` overrides applied."""
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def validate(self) -> "RunConfig":
        try:
            kind = self.kind
        except ValueError:
            raise ConfigError(f"unknown model {self.model!r}; expected one of TFIM, LMGM, DICKE") from None
        if not self.sizes:
            raise ConfigError("sweep axis 'sizes' is empty")
        if not self.velocities and not self.lambdas:
            raise ConfigError("sweep axis 'velocities' or 'lambdas' is empty; give one of them")
        if self.velocities and self.lambdas:
            raise ConfigError("give exactly one of 'velocities' and 'lambdas'")
        if not self.kappa:
            raise ConfigError("sweep axis 'kappa' is empty")
        for N in self.sizes:
            if N <= 0 or N % 2:
                raise ConfigError(f"size {N} must be a positive even integer")
        for name in ("velocities", "lambdas", "kappa"):
            for v in getattr(self, name):
                if not v > 0:
                    raise ConfigError(f"{name} entries must be positive, got {v}")
        if not self.lambda_start < 0 < self.lambda_end:
            raise ConfigError("need lambda_start < 0 < lambda_end")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}; expected one of {', '.join(ENGINES)}")
        if self.levels is not None and self.levels < 1:
            raise ConfigError("levels must be at least 1")
        if kind is ModelKind.DICKE and self.M < 1:
            raise ConfigError("M must be at least 1")
        if len(self.collapse_window) != 2 or not self.collapse_window[0] < self.collapse_window[1]:
            raise ConfigError("collapse_window needs two increasing values")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        return self

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


def parse_config(text: str) -> dict:
    """``key = value`` lines into ``key -> [values]``; ``#`` starts a comment."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out.setdefault(key, []).append(value)
    return out


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig.from_mapping(parse_config(text))
