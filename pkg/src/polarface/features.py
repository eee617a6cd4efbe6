"""Per-image feature extraction for the four variants.

Global variants transform the whole normalised crop on its largest
inscribed disk; local variants transform the three eye regions separately
and concatenate the vectors (upper_left, upper_middle, upper_right).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import fbt, pft
from .bessel import zero_table
from .errors import DegenerateGeometryError
from .io import FeatureRecord, GrayImage, ManifestEntry, VARIANTS, load_pgm
from .preprocess import CanonicalLayout, extract_regions, normalize


@dataclass(frozen=True)
class FeatureConfig:
    """Transform parameters; defaults are 30 orders, 6 roots, 3 degree sampling."""

    layout: CanonicalLayout = field(default_factory=CanonicalLayout)
    orders: int = fbt.DEFAULT_ORDERS
    roots: int = fbt.DEFAULT_ROOTS
    angular_step: float = fbt.ANGULAR_STEP
    radial_step: float = 1.0
    pft_angular_band: int = pft.ANGULAR_BAND
    pft_radial_band: int = pft.RADIAL_BAND

    def __post_init__(self):
        if self.orders < 0 or self.roots < 1:
            raise ValueError("band must have orders >= 0 and roots >= 1")
        if self.radial_step <= 0:
            raise ValueError("radial step must be positive")
        fbt.angular_count(self.angular_step)


def variant_dim(variant: str, config: FeatureConfig = FeatureConfig()) -> int:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant.startswith("fbt"):
        per_disk = fbt.feature_length(config.orders, config.roots)
    else:
        per_disk = pft.pft_feature_length(config.pft_angular_band, config.pft_radial_band)
    return per_disk * (3 if variant.endswith("local") else 1)


def disks(image: GrayImage, variant: str, config: FeatureConfig):
    """(image, center, R) for each disk the variant transforms."""
    if variant.endswith("global"):
        h, w = image.pixels.shape
        return [(image, (w / 2.0, h / 2.0), min(w, h) / 2.0)]
    out = []
    for region in extract_regions(image, config.layout):
        h, w = region.pixels.shape
        out.append((region, (w / 2.0, h / 2.0), min(w, h) / 2.0))
    return out


def polar_grids(image: GrayImage, variant: str, config: FeatureConfig = FeatureConfig()):
    return [
        fbt.to_polar(img, center, R, config.angular_step, config.radial_step)
        for img, center, R in disks(image, variant, config)
    ]


def transform_grid(grid, variant: str, config: FeatureConfig) -> np.ndarray:
    if variant.startswith("fbt"):
        zeros = zero_table(config.orders, config.roots)
        return fbt.flatten(fbt.fbt_forward(grid, zeros, config.orders, config.roots))
    coeffs = pft.pft_forward(grid, config.pft_angular_band, config.pft_radial_band)
    return pft.pft_flatten(coeffs)


def feature_vector(normalized: GrayImage, variant: str, config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Feature vector of an already normalised crop."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    parts = [transform_grid(g, variant, config) for g in polar_grids(normalized, variant, config)]
    return np.concatenate(parts)


def check_eyes(entry: ManifestEntry, image: GrayImage) -> None:
    for name, (x, y) in (("left", entry.left_eye), ("right", entry.right_eye)):
        if not (0 <= x <= image.width - 1 and 0 <= y <= image.height - 1):
            raise DegenerateGeometryError(
                f"{entry.image_path}: {name} eye {(x, y)} outside the "
                f"{image.width}x{image.height} image"
            )


def extract_entry(entry: ManifestEntry, images_dir, variant: str,
                  config: FeatureConfig = FeatureConfig()) -> FeatureRecord:
    """load -> register -> mask -> equalise -> standardise -> transform -> flatten."""
    path = os.path.join(images_dir, entry.image_path) if images_dir else entry.image_path
    image = load_pgm(path)
    check_eyes(entry, image)
    normalized = normalize(image, (entry.left_eye, entry.right_eye), config.layout)
    vector = feature_vector(normalized, variant, config)
    return FeatureRecord(entry.image_path, entry.subject_id, variant, vector)


def relative_change(a, b) -> float:
    """||a - b|| / ||a||."""
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a))
    return float(np.linalg.norm(a - np.asarray(b, dtype=float))) / norm if norm else math.inf
