"""Pipeline configuration: a dataclass, a key = value file format, and
command-line overrides sharing the key names."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .tasks import GeneratorConfig


class ConfigError(ValueError):
    """Invalid or missing configuration (CLI exit code 1)."""


@dataclass
class PipelineConfig:
    seed: int | None = None
    input_dir: str = ""
    output_dir: str = "out"
    external_dir: str = ""
    folds: int = 5
    train_tasks: int = 1
    sigma: float = 0.2
    foreground_threshold: float = 0.0
    mask_size_min: float = 0.04
    mask_size_max: float = 0.28
    exponent_min: float = 1.0
    exponent_max: float = 4.0
    intensity_min: float = 0.25
    intensity_max: float = 1.0
    smoothing_min: float = 0.10
    smoothing_max: float = 0.50
    max_anomalies: int = 4
    reducer: str = "mean"
    zscore: bool = False
    full_product: bool = False
    intra_random_offset: bool = False
    label_threshold: float = 0.0
    eval_axis: int = 0

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if not 0 < self.mask_size_min <= self.mask_size_max:
            raise ConfigError("mask size range is empty")
        if not 1.0 <= self.exponent_min <= self.exponent_max:
            raise ConfigError("exponent range is empty or below 1")
        if not 0 < self.intensity_min <= self.intensity_max:
            raise ConfigError("intensity range is empty")
        if not 0 < self.smoothing_min <= self.smoothing_max:
            raise ConfigError("smoothing range is empty")
        if self.max_anomalies < 1:
            raise ConfigError("max_anomalies must be >= 1")
        if self.reducer not in ("mean", "max"):
            raise ConfigError(f"unknown reducer {self.reducer!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not 1 <= self.train_tasks:
            raise ConfigError("train_tasks must be >= 1")

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            sigma=self.sigma,
            foreground_threshold=self.foreground_threshold,
            mask_size_range=(self.mask_size_min, self.mask_size_max),
            exponent_range=(self.exponent_min, self.exponent_max),
            intensity_range=(self.intensity_min, self.intensity_max),
            smoothing_range=(self.smoothing_min, self.smoothing_max),
            max_anomalies=self.max_anomalies,
            intra_random_offset=self.intra_random_offset,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind in ("int", "int | None"):
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean {name} = {raw!r}")
    return raw


def parse_config_file(path: str | Path) -> dict:
    """Read UTF-8 ``key = value`` lines; '#' starts a comment."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {err}") from err
    return values


def build_config(file_values: dict, overrides: dict) -> PipelineConfig:
    """Merge config-file values with CLI overrides (overrides win)."""
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(merged) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**merged)
    cfg.validate()
    return cfg
