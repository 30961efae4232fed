"""Run configuration: one JSON file, environment defaults, CLI overrides."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from dotenv import load_dotenv

from stringtable.errors import ConfigError
from stringtable.tools.vanishing import DirectionSetSpec

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    "reconstruction": 1e-8,
    "invariance": 1e-7,
    "slope": 1e-4,
    "width": 1e-10,
    "determinant": 1e-4,
    "energy_drift": 1e-8,
    "circle": 1e-10,
}

VARIANTS = ("transversal", "flat")
BACKENDS = ("bump", "trigpoly")
WEIGHTS = ("harmonic", "exponential")


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


@dataclass
class TwistConfig:
    nodes: list[float] = field(default_factory=list)
    degenerate: list[float] = field(default_factory=list)
    accumulations: list[dict] = field(default_factory=list)
    a: int = 1
    b: int = 1
    amplitude: float = 1.0
    orbits: int = 12
    periods: int = 200


@dataclass
class RunConfig:
    """Every knob of a run. Defaults are documented in ``stringtable --help``."""

    name: str = "run"
    direction_set: DirectionSetSpec = field(default_factory=DirectionSetSpec)
    series: list[list[float]] | None = None  # [[k, re, im], ...] of g, overrides direction_set
    variant: str = "transversal"
    tau: float = 1.0
    ell: float | str = "auto"
    amplitude: float = 0.01
    weights: str = "harmonic"
    backend: str = field(default_factory=lambda: os.environ.get("STRINGTABLE_BACKEND", "bump"))
    degree: int = 128
    fit_grid: int = 4096
    scan_grid: int = field(default_factory=lambda: _env_int("STRINGTABLE_GRID", 8192))
    curve_samples: int = 4096
    invariance_stride: int = 1
    determinant_samples: int = 100
    orbit: dict | None = None  # {"t": .., "theta": .., "steps": ..} dumps one orbit
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str = field(default_factory=lambda: os.environ.get("STRINGTABLE_OUT", "stringtable-out"))
    emit_svg: bool = False
    twist: TwistConfig | None = None
    sweep: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0])

    def validate(self) -> "RunConfig":
        """Raises ConfigError on the first invalid value."""
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.weights not in WEIGHTS:
            raise ConfigError(f"weights must be one of {WEIGHTS}, got {self.weights!r}")
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if self.ell != "auto" and (not isinstance(self.ell, (int, float)) or self.ell <= 1):
            raise ConfigError(f"ell must be 'auto' or a number > 1, got {self.ell!r}")
        if self.amplitude <= 0:
            raise ConfigError(f"amplitude must be positive, got {self.amplitude}")
        for key in ("degree", "fit_grid", "scan_grid", "curve_samples", "invariance_stride", "determinant_samples"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        for key, value in self.tolerances.items():
            if value <= 0:
                raise ConfigError(f"tolerance {key!r} must be positive, got {value}")
        if self.twist is not None and (self.twist.a == 0 or self.twist.b == 0):
            raise ConfigError(f"twist a and b must be nonzero, got a={self.twist.a}, b={self.twist.b}")
        return self

    def tolerance(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["direction_set"] = self.direction_set.to_dict()
        data["twist"] = vars(self.twist).copy() if self.twist else None
        return data


def _direction_set(value, base: Path) -> DirectionSetSpec:
    if isinstance(value, str):
        path = Path(value)
        return DirectionSetSpec.load(path if path.is_absolute() else base / path)
    return DirectionSetSpec.from_dict(value or {})


def from_dict(data: dict, base: Path | str = ".") -> RunConfig:
    """Build a RunConfig from a parsed JSON document.

    Raises:
        ConfigError: Unknown keys or invalid values.
    """
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown config keys: {unknown}")
    kwargs = dict(data)
    try:
        if "direction_set" in kwargs:
            kwargs["direction_set"] = _direction_set(kwargs["direction_set"], Path(base))
        if kwargs.get("twist") is not None:
            kwargs["twist"] = TwistConfig(**kwargs["twist"])
        if "tolerances" in kwargs:
            kwargs["tolerances"] = {**DEFAULT_TOLERANCES, **kwargs["tolerances"]}
        config = RunConfig(**kwargs)
    except (TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"Invalid config: {exc}") from exc
    return config.validate()


def load_config(path: Path | str | None = None, **overrides) -> RunConfig:
    """Load a config file (or defaults) and apply non-None overrides.

    Precedence: overrides (CLI flags) > file values > environment defaults.
    """
    if path is None:
        config = RunConfig()
    else:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}") from exc
        config = from_dict(data, base=path.parent)
        if "name" not in data:
            config.name = path.stem
    applied = {k: v for k, v in overrides.items() if v is not None}
    if applied:
        logger.debug("Config overrides: %s", applied)
        config = replace(config, **applied)
    return config.validate()
