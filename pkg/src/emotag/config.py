"""Pipeline configuration.

Defaults live in :class:`PipelineConfig`; a TOML file can override any
field, and command-line flags override the file. Unknown keys in the file
are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .audio import CANONICAL_RATE, DEFAULT_PEAK
from .musical import MODE_CONVENTIONS
from .svm import DEFAULT_C, DEFAULT_MAX_PASSES, DEFAULT_TOL, KERNELS


class ConfigError(ValueError):
    """The config file is unreadable or holds invalid values."""


@dataclass
class PipelineConfig:
    """Every knob of the extract/train pipeline with its default."""

    sample_rate: int = CANONICAL_RATE
    n_frames: int = 124
    n_subbands: int = 10
    peak_target: float = DEFAULT_PEAK
    n_mfcc: int = 20
    mfcc_first: int = 0
    mode_convention: str = "major-positive"
    kernel: str = "rbf"
    c: float = DEFAULT_C
    gamma: float | None = None
    tolerance: float = DEFAULT_TOL
    max_passes: int = DEFAULT_MAX_PASSES
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        for name in ("sample_rate", "n_frames", "n_subbands", "n_mfcc", "max_passes", "jobs"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.mfcc_first < 0:
            raise ConfigError("mfcc_first must be >= 0")
        if not 0.0 < self.peak_target <= 1.0:
            raise ConfigError("peak_target must lie in (0, 1]")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.mode_convention not in MODE_CONVENTIONS:
            raise ConfigError(
                f"mode_convention must be one of {MODE_CONVENTIONS}, got {self.mode_convention!r}"
            )
        if self.c <= 0:
            raise ConfigError("c must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("gamma must be positive when set")
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")


_FIELD_NAMES = tuple(f.name for f in fields(PipelineConfig))
_INT_FIELDS = ("sample_rate", "n_frames", "n_subbands", "n_mfcc", "mfcc_first",
               "max_passes", "seed", "jobs")


def load_config_file(path) -> dict:
    """Read a TOML config file into a plain dict of known keys."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    unknown = sorted(set(raw) - set(_FIELD_NAMES))
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
    for key in _INT_FIELDS:
        if key in raw and isinstance(raw[key], float) and raw[key].is_integer():
            raw[key] = int(raw[key])
    return raw


def resolve_config(config_path=None, overrides: dict | None = None) -> PipelineConfig:
    """Merge defaults, an optional config file, and explicit overrides.

    ``overrides`` entries with value None mean "not set on the command
    line" and are ignored.
    """
    merged: dict = {}
    if config_path is not None:
        merged.update(load_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    return PipelineConfig(**merged)
