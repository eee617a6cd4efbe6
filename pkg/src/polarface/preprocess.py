"""Geometric and photometric face normalisation.

The fixed order is register -> apply_mask -> hist_eq -> standardize, with
extract_regions optionally applied last for the local variants.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import DegenerateGeometryError, DegenerateImageError, DimensionMismatchError
from .interp import bilinear
from .io import GrayImage

REGION_NAMES = ("upper_left", "upper_middle", "upper_right")


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def inside(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height

    @property
    def local_center(self) -> tuple[float, float]:
        """Centre in the region's own pixel coordinates."""
        return (self.w / 2.0, self.h / 2.0)


@dataclass(frozen=True)
class CanonicalLayout:
    """Target geometry of a normalised face crop (pixel units).

    When ``region_rects`` is omitted the three regions are ``region_size``
    squares centred on the left eye, the eye midpoint and the right eye,
    shifted as needed to stay inside the crop.
    """

    crop_width: int = 130
    crop_height: int = 150
    left_eye: tuple = (40.0, 60.0)
    right_eye: tuple = (90.0, 60.0)
    mask_center: tuple = (65.0, 78.0)
    mask_axes: tuple = (58.0, 70.0)
    region_size: int = 50
    region_rects: Optional[tuple] = None

    def __post_init__(self):
        if self.region_rects is None:
            object.__setattr__(self, "region_rects", self._default_regions())
        self._validate()

    def _default_regions(self):
        (lx, ly), (rx, ry) = self.left_eye, self.right_eye
        centers = ((lx, ly), ((lx + rx) / 2.0, (ly + ry) / 2.0), (rx, ry))
        s = self.region_size
        rects = []
        for cx, cy in centers:
            x = int(round(cx - s / 2.0))
            y = int(round(cy - s / 2.0))
            x = min(max(x, 0), self.crop_width - s)
            y = min(max(y, 0), self.crop_height - s)
            rects.append(Rect(x, y, s, s))
        return tuple(rects)

    def _validate(self):
        w, h = self.crop_width, self.crop_height
        if w <= 0 or h <= 0:
            raise ValueError("crop size must be positive")
        for name, (x, y) in (("left_eye", self.left_eye), ("right_eye", self.right_eye)):
            if not (0 <= x < w and 0 <= y < h):
                raise ValueError(f"canonical {name} {(x, y)} lies outside the crop")
        if not self.left_eye[0] < self.right_eye[0]:
            raise ValueError("canonical left eye must be left of the right eye")
        (cx, cy), (ax, ay) = self.mask_center, self.mask_axes
        if ax <= 0 or ay <= 0 or cx - ax < 0 or cx + ax > w or cy - ay < 0 or cy + ay > h:
            raise ValueError("mask ellipse must fit inside the crop")
        if len(self.region_rects) != 3:
            raise ValueError("layout needs exactly three region rectangles")
        for r in self.region_rects:
            if r.w <= 0 or r.h <= 0 or not r.inside(w, h):
                raise ValueError(f"region {r} lies outside the crop")

    @property
    def crop_shape(self) -> tuple[int, int]:
        return (self.crop_height, self.crop_width)

    def with_overrides(self, **overrides) -> "CanonicalLayout":
        """Copy with some fields replaced; derived regions are recomputed."""
        if "region_rects" not in overrides:
            overrides["region_rects"] = None
        return replace(self, **overrides)


LAYOUT_KEYS = {f.name for f in fields(CanonicalLayout)} - {"region_rects"}


def similarity_to_canonical(eyes, layout: CanonicalLayout):
    """Complex coefficients (a, b) of z -> a*z + b sending the eyes to canonical."""
    (lx, ly), (rx, ry) = eyes
    src_l, src_r = complex(lx, ly), complex(rx, ry)
    if abs(src_r - src_l) < 1e-9:
        raise DegenerateGeometryError(f"coincident eye positions {eyes}")
    dst_l = complex(*layout.left_eye)
    dst_r = complex(*layout.right_eye)
    a = (dst_r - dst_l) / (src_r - src_l)
    b = dst_l - a * src_l
    return a, b


def register(image: GrayImage, eyes, layout: CanonicalLayout = CanonicalLayout()) -> GrayImage:
    """Warp ``image`` so ``eyes`` = (left, right) land on the canonical eyes.

    Output has the crop size; samples taken outside the source are 0.
    """
    if image.pixels.size == 0:
        raise DegenerateImageError("cannot register an empty image")
    a, b = similarity_to_canonical(eyes, layout)
    ys, xs = np.mgrid[0 : layout.crop_height, 0 : layout.crop_width].astype(float)
    src = (xs + 1j * ys - b) / a
    source = image.pixels
    if image.mask is not None:
        source = np.where(image.mask, source, 0.0)
    return GrayImage(bilinear(source, src.real, src.imag))


def transform_point(point, eyes, layout: CanonicalLayout = CanonicalLayout()):
    """Where ``register`` sends a source point."""
    a, b = similarity_to_canonical(eyes, layout)
    z = a * complex(*point) + b
    return (z.real, z.imag)


def _require_crop(image: GrayImage, layout: CanonicalLayout):
    if image.pixels.shape != layout.crop_shape:
        raise DimensionMismatchError(
            f"image is {image.width}x{image.height}, layout expects "
            f"{layout.crop_width}x{layout.crop_height}"
        )


def ellipse_mask(layout: CanonicalLayout) -> np.ndarray:
    ys, xs = np.mgrid[0 : layout.crop_height, 0 : layout.crop_width].astype(float)
    (cx, cy), (ax, ay) = layout.mask_center, layout.mask_axes
    return ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 <= 1.0


def apply_mask(image: GrayImage, layout: CanonicalLayout = CanonicalLayout()) -> GrayImage:
    _require_crop(image, layout)
    return GrayImage(image.pixels.copy(), ellipse_mask(layout))


def hist_eq(image: GrayImage, bins: int = 256) -> GrayImage:
    """Histogram-equalise the valid pixels; masked pixels pass through.

    Values are quantised to ``bins`` levels on [0, 1] and remapped through
    the normalised cumulative histogram, so the mapping is monotone.
    """
    valid = image.valid
    if not valid.any():
        raise DegenerateImageError("histogram equalisation needs at least one valid pixel")
    top = bins - 1
    values = image.pixels[valid]
    levels = np.rint(np.clip(values, 0.0, 1.0) * top).astype(np.int64)
    cdf = np.cumsum(np.bincount(levels, minlength=bins))
    cdf_min = cdf[levels.min()]
    total = levels.size
    out = image.pixels.copy()
    if total == cdf_min:
        # one occupied level: nothing to spread
        out[valid] = 0.0
    else:
        out[valid] = (cdf[levels] - cdf_min) / (total - cdf_min)
    return GrayImage(out, None if image.mask is None else image.mask.copy())


def standardize(image: GrayImage) -> GrayImage:
    """Zero mean, unit population std over valid pixels; invalid pixels -> 0."""
    valid = image.valid
    if not valid.any():
        raise DegenerateImageError("no valid pixels to standardise")
    values = image.pixels[valid]
    mean = values.mean()
    centered = values - mean
    std = np.sqrt(np.mean(centered**2))
    if not std > 1e-12 * max(1.0, abs(mean)):
        raise DegenerateImageError("zero-variance image cannot be standardised")
    out = np.zeros_like(image.pixels)
    out[valid] = centered / std
    return GrayImage(out, None if image.mask is None else image.mask.copy())


def extract_regions(image: GrayImage, layout: CanonicalLayout = CanonicalLayout()):
    """Crop (upper_left, upper_middle, upper_right); masks are sliced along."""
    _require_crop(image, layout)
    regions = []
    for r in layout.region_rects:
        sl = (slice(r.y, r.y + r.h), slice(r.x, r.x + r.w))
        mask = None if image.mask is None else image.mask[sl].copy()
        regions.append(GrayImage(image.pixels[sl].copy(), mask))
    return tuple(regions)


def normalize(image: GrayImage, eyes, layout: CanonicalLayout = CanonicalLayout()) -> GrayImage:
    """Full photometric/geometric normalisation of one face."""
    registered = register(image, eyes, layout)
    return standardize(hist_eq(apply_mask(registered, layout)))
