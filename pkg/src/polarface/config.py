"""Run configuration: ``key = value`` files merged with command-line flags."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from typing import Optional

from .features import FeatureConfig
from .io import VARIANTS
from .preprocess import CanonicalLayout, LAYOUT_KEYS

CONFIG_ENV = "POLARFACE_CONFIG"

_PAIR_KEYS = {"left_eye", "right_eye", "mask_center", "mask_axes"}
_INT_LAYOUT_KEYS = {"crop_width", "crop_height", "region_size"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    variant: str = "fbt_global"
    manifest: Optional[str] = None
    images_dir: Optional[str] = None
    features: Optional[str] = None
    model: Optional[str] = None
    out: Optional[str] = None
    threshold: Optional[float] = None
    seed: int = 0
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    orders: int = 30
    roots: int = 6
    angular_step_deg: float = 3.0
    radial_step: float = 1.0
    subjects: int = 50
    probes_per_subject: int = 2
    perturbation: str = "none"
    strength: float = 1.0
    layout_overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}")
        if self.orders < 0 or self.roots < 1:
            raise ConfigError("band needs orders >= 0 and roots >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def layout(self) -> CanonicalLayout:
        try:
            return CanonicalLayout().with_overrides(**self.layout_overrides)
        except ValueError as exc:
            raise ConfigError(f"invalid layout: {exc}") from None

    def feature_config(self) -> FeatureConfig:
        try:
            return FeatureConfig(
                layout=self.layout(),
                orders=self.orders,
                roots=self.roots,
                angular_step=math.radians(self.angular_step_deg),
                radial_step=self.radial_step,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


_RUN_FIELDS = {f.name: f for f in fields(RunConfig) if f.name != "layout_overrides"}


def _convert(key: str, raw: str):
    if key in _PAIR_KEYS:
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"{key} needs two comma-separated numbers")
        return tuple(float(p) for p in parts)
    if key in _INT_LAYOUT_KEYS:
        return int(raw)
    ftype = _RUN_FIELDS[key].type
    if ftype in ("int",):
        return int(raw)
    if ftype in ("float", "Optional[float]"):
        return float(raw)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Return a flat dict of typed values; layout keys are grouped under 'layout_overrides'."""
    values, layout = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            if key in LAYOUT_KEYS:
                layout[key] = _convert(key, value)
            elif key in _RUN_FIELDS:
                values[key] = _convert(key, value)
            else:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}") from None
    if layout:
        values["layout_overrides"] = layout
    return values


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), str(path))


def build_config(flags: dict, config_path: Optional[str] = None) -> RunConfig:
    """File values first (``config_path`` or $POLARFACE_CONFIG), then non-None flags."""
    config_path = config_path or os.environ.get(CONFIG_ENV)
    values = load_config_file(config_path) if config_path else {}
    for key, value in flags.items():
        if value is not None and (key in _RUN_FIELDS):
            values[key] = value
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg
