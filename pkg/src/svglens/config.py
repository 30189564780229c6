"""Run configuration: defaults, config-file loading, flag overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import SvgLensError


@dataclass(frozen=True)
class RunConfig:
    """All tunables; serialized verbatim into every report."""

    render_size: int = 384
    background: str = "white"
    backend: str = "neg-mse"
    embed_url: str | None = None
    embed_timeout: float = 10.0
    embed_retries: int = 2
    tau_helpful: float = 0.005
    tau_harmful: float = -0.005
    inactive_threshold: float = 0.01
    iou_merge_threshold: float = 0.9
    instance_score_min: float = 0.3
    area_fraction_min: float = 0.005
    area_fraction_max: float = 0.95
    binarize_level: float = 0.5
    epsilon: float = 1e-8
    move_px: float = 20.0
    scale_factor: float = 0.7
    workers: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.render_size < 16:
            raise SvgLensError(f"render_size must be >= 16, got {self.render_size}")
        if self.background not in ("white", "black", "transparent"):
            raise SvgLensError(f"unknown background policy {self.background!r}")
        if self.backend not in ("neg-mse", "ssim", "embedding", "embedding-service"):
            raise SvgLensError(f"unknown backend {self.backend!r}")
        if self.tau_helpful < self.tau_harmful:
            raise SvgLensError("tau_helpful must be >= tau_harmful")
        if not (0.0 <= self.inactive_threshold <= 1.0):
            raise SvgLensError("inactive_threshold must lie in [0, 1]")
        if not (0.0 <= self.iou_merge_threshold <= 1.0):
            raise SvgLensError("iou_merge_threshold must lie in [0, 1]")
        if not (0.0 <= self.area_fraction_min <= self.area_fraction_max <= 1.0):
            raise SvgLensError("area fraction bounds must satisfy 0 <= min <= max <= 1")
        if not (0.0 <= self.binarize_level < 1.0):
            raise SvgLensError("binarize_level must lie in [0, 1)")
        if self.epsilon <= 0:
            raise SvgLensError("epsilon must be positive")
        if self.workers < 1:
            raise SvgLensError("workers must be >= 1")
        if self.scale_factor <= 0:
            raise SvgLensError("scale_factor must be positive")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config_file(path: str | Path) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    text = Path(path).read_text(encoding="utf-8")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SvgLensError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value: str):
    ftype = _FIELD_TYPES.get(name)
    if ftype is None:
        raise SvgLensError(f"unknown config key {name!r}")
    if name == "embed_url":
        return value or None
    if ftype == "int":
        return int(value)
    if ftype == "float":
        return float(value)
    return value


def build_config(config_path: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then config file, then explicit overrides (flags win)."""
    config = RunConfig()
    if config_path is not None:
        file_values = {k: _coerce(k, v) for k, v in load_config_file(config_path).items()}
        config = replace(config, **file_values)
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    if cleaned:
        config = replace(config, **cleaned)
    config.validate()
    return config
