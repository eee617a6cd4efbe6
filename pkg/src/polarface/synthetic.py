"""Deterministic synthetic gallery/probe data for desk-scale evaluation.

Every subject is a smooth template face (skin ellipse, dark eye marks, mouth)
plus a band-limited random polar pattern, defined in canonical crop
coordinates and rendered analytically through a random similarity pose into
a larger source raster. Probe perturbations:

``none``        the probe is a byte copy of the gallery image
``expression``  same pose, extra structure confined to the mouth area
                (below the three eye regions)
``age``         new pose, low-frequency global shading, and jitter on the
                eye coordinates written to the manifest
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j, zero_table
from .io import ManifestEntry, encode_pgm, write_manifest
from .preprocess import CanonicalLayout

PERTURBATIONS = ("none", "expression", "age")

SOURCE_SIZE = (180, 160)  # (height, width)

# subject pattern band and disk
_PATTERN_ORDERS = 6
_PATTERN_ROOTS = 3
_PATTERN_RADIUS = 95.0
_PATTERN_AMPLITUDE = 0.12
_TABLE_POINTS = 4001

# expression edits start this many px below the eye-region bottom edge
_EXPRESSION_MARGIN = 10.0


@dataclass
class SyntheticDataset:
    gallery: list
    probes: list
    images: dict  # relative path -> PGM bytes

    def write(self, out_dir) -> None:
        os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)
        for rel, data in self.images.items():
            with open(os.path.join(out_dir, rel), "wb") as fh:
                fh.write(data)
        write_manifest(self.gallery, os.path.join(out_dir, "gallery.csv"))
        write_manifest(self.probes, os.path.join(out_dir, "probes.csv"))


def _subject_pattern(rng):
    """Random polar-series coefficients: (cos, sin) tables of shape (orders+1, roots)."""
    shape = (_PATTERN_ORDERS + 1, _PATTERN_ROOTS)
    a = rng.standard_normal(shape)
    b = rng.standard_normal(shape)
    b[0] = 0.0
    return a, b


@functools.lru_cache(maxsize=1)
def _radial_table():
    # J_n(alpha_ni * rho) on a fine rho grid; interpolation error ~1e-7,
    # far below 8-bit quantisation
    zeros = zero_table(_PATTERN_ORDERS, _PATTERN_ROOTS)
    rho = np.linspace(0.0, 1.0, _TABLE_POINTS)
    table = np.array(
        [[bessel_j(n, alpha * rho) for alpha in zeros.alpha[n]] for n in range(_PATTERN_ORDERS + 1)]
    )
    return rho, table


def _eval_pattern(coeffs, u, v, center):
    a, b = coeffs
    rho, table = _radial_table()
    dx, dy = u - center[0], v - center[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    rr = np.minimum(r, _PATTERN_RADIUS) / _PATTERN_RADIUS
    out = np.zeros_like(u)
    for n in range(_PATTERN_ORDERS + 1):
        out += np.cos(n * theta) * np.interp(rr, rho, a[n] @ table[n])
        out += np.sin(n * theta) * np.interp(rr, rho, b[n] @ table[n])
    # scale so the pattern's typical magnitude is independent of band size
    return out / math.sqrt(a.size)


def _gauss(u, v, cx, cy, sx, sy):
    return np.exp(-0.5 * (((u - cx) / sx) ** 2 + ((v - cy) / sy) ** 2))


def _template(u, v, layout: CanonicalLayout):
    cx = 0.5 * (layout.left_eye[0] + layout.right_eye[0])
    eye_y = 0.5 * (layout.left_eye[1] + layout.right_eye[1])
    q = ((u - 65.0) / 55.0) ** 2 + ((v - 80.0) / 68.0) ** 2
    face = 0.25 + 0.35 / (1.0 + np.exp(6.0 * (q - 1.0)))
    for ex, ey in (layout.left_eye, layout.right_eye):
        face -= 0.25 * _gauss(u, v, ex, ey, 5.0, 3.5)
    face -= 0.12 * _gauss(u, v, cx, eye_y + 55.0, 16.0, 4.0)  # mouth
    face += 0.06 * _gauss(u, v, cx, eye_y + 25.0, 5.0, 12.0)  # nose ridge
    return face


def _expression_field(rng, u, v, layout: CanonicalLayout):
    """Random mouth-area structure, exactly zero above the cut-off row."""
    cut = max(r.y + r.h for r in layout.region_rects) + _EXPRESSION_MARGIN
    cx = 0.5 * (layout.left_eye[0] + layout.right_eye[0])
    field = np.zeros_like(u)
    for _ in range(4):
        x0 = cx + rng.uniform(-25.0, 25.0)
        y0 = cut + rng.uniform(12.0, 35.0)
        field += rng.uniform(-0.35, 0.35) * _gauss(u, v, x0, y0, rng.uniform(5, 14), rng.uniform(3, 8))
    ramp = np.clip((v - cut) / 8.0, 0.0, 1.0)
    return field * ramp * ramp * (3.0 - 2.0 * ramp)


def _age_field(rng, u, v):
    field = np.zeros_like(u)
    for _ in range(3):
        kx, ky = rng.uniform(-1.0, 1.0, size=2) * (2 * math.pi / 120.0)
        field += 0.05 * np.cos(kx * u + ky * v + rng.uniform(0, 2 * math.pi))
    return field


def _random_pose(rng, layout: CanonicalLayout):
    """Similarity (a, b) mapping canonical coordinates into the source raster."""
    angle = math.radians(rng.uniform(-8.0, 8.0))
    scale = rng.uniform(0.9, 1.12)
    a = scale * complex(math.cos(angle), math.sin(angle))
    h, w = SOURCE_SIZE
    crop_center = complex(layout.crop_width / 2.0, layout.crop_height / 2.0)
    shift = complex(rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0))
    b = complex(w / 2.0, h / 2.0) + shift - a * crop_center
    return a, b


def _render(face_fn, pose):
    """Evaluate face_fn at the canonical preimage of every source pixel."""
    a, b = pose
    h, w = SOURCE_SIZE
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    z = (xs + 1j * ys - b) / a
    return np.clip(face_fn(z.real, z.imag), 0.0, 1.0)


def _eyes_in_source(pose, layout: CanonicalLayout):
    a, b = pose
    out = []
    for x, y in (layout.left_eye, layout.right_eye):
        z = a * complex(x, y) + b
        out.append((round(z.real, 6), round(z.imag, 6)))
    return tuple(out)


def generate_synthetic(num_subjects: int, probes_per_subject: int, perturbation: str = "none",
                       seed: int = 0, strength: float = 1.0,
                       layout: CanonicalLayout = CanonicalLayout()) -> SyntheticDataset:
    """Build a gallery (one image per subject) and its probe set."""
    if num_subjects < 1 or probes_per_subject < 1:
        raise ValueError("num_subjects and probes_per_subject must be positive")
    if perturbation not in PERTURBATIONS:
        raise ValueError(f"perturbation must be one of {PERTURBATIONS}")
    rng = np.random.default_rng(seed)
    center = (layout.crop_width / 2.0, layout.crop_height / 2.0)
    gallery, probes, images = [], [], {}

    for s in range(num_subjects):
        sid = f"s{s:03d}"
        pattern = _subject_pattern(rng)
        pose = _random_pose(rng, layout)

        def face(u, v, pattern=pattern):
            return _template(u, v, layout) + _PATTERN_AMPLITUDE * _eval_pattern(pattern, u, v, center)

        g_rel = f"images/{sid}_g.pgm"
        g_bytes = encode_pgm(_render(face, pose))
        images[g_rel] = g_bytes
        eyes = _eyes_in_source(pose, layout)
        gallery.append(ManifestEntry(g_rel, sid, *eyes))

        for p in range(probes_per_subject):
            p_rel = f"images/{sid}_p{p}.pgm"
            if perturbation == "none" or strength == 0:
                images[p_rel] = g_bytes
                probes.append(ManifestEntry(p_rel, sid, *eyes))
            elif perturbation == "expression":
                sub = np.random.default_rng([seed, s, p, 1])

                def probe_face(u, v, sub_seed=sub.integers(2**63)):
                    r = np.random.default_rng(sub_seed)
                    return face(u, v) + strength * _expression_field(r, u, v, layout)

                images[p_rel] = encode_pgm(_render(probe_face, pose))
                probes.append(ManifestEntry(p_rel, sid, *eyes))
            else:
                sub = np.random.default_rng([seed, s, p, 2])
                p_pose = _random_pose(sub, layout)
                sub_seed = sub.integers(2**63)

                def probe_face(u, v, sub_seed=sub_seed):
                    r = np.random.default_rng(sub_seed)
                    return face(u, v) + strength * _age_field(r, u, v)

                images[p_rel] = encode_pgm(_render(probe_face, p_pose))
                (lx, ly), (rx, ry) = _eyes_in_source(p_pose, layout)
                jitter = sub.normal(0.0, 1.0 * strength, size=4)
                probes.append(
                    ManifestEntry(
                        p_rel, sid,
                        (round(lx + jitter[0], 6), round(ly + jitter[1], 6)),
                        (round(rx + jitter[2], 6), round(ry + jitter[3], 6)),
                    )
                )
    return SyntheticDataset(gallery, probes, images)
