"""Polar resampling and the forward/inverse Fourier-Bessel transform.

A function on the disk r <= R with f(R, theta) = 0 is expanded as

    f(r, theta) = sum_{n,i} J_n(alpha_ni r / R) (A_ni cos n theta + B_ni sin n theta)

where alpha_ni is the i-th positive zero of J_n. Coefficients are computed by
quadrature on the polar sampling lattice itself.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .bessel import BesselZeroTable, bessel_j, zero_table
from .errors import DimensionMismatchError
from .interp import bilinear
from .io import GrayImage

DEFAULT_ORDERS = 30
DEFAULT_ROOTS = 6
ANGULAR_STEP = math.pi / 60  # 3 degrees


@dataclass
class PolarGrid:
    """Samples ``samples[j, k]`` of f at r_j = j*radial_step, theta_k = k*angular_step."""

    samples: np.ndarray
    R: float
    radial_step: float
    angular_step: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.R <= 0 or self.radial_step <= 0 or self.angular_step <= 0:
            raise ValueError("R and both steps must be positive")
        expected = polar_shape(self.R, self.radial_step, self.angular_step)
        if self.samples.shape != expected:
            raise DimensionMismatchError(
                f"polar samples have shape {self.samples.shape}, geometry implies {expected}"
            )

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.samples.shape[0]) * self.radial_step

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.samples.shape[1]) * self.angular_step

    def like(self, samples) -> "PolarGrid":
        """Same geometry, new samples."""
        return PolarGrid(samples, self.R, self.radial_step, self.angular_step, self.center)


def angular_count(angular_step: float) -> int:
    count = int(round(2 * math.pi / angular_step))
    if count < 1 or abs(count * angular_step - 2 * math.pi) > 1e-12:
        raise ValueError(f"angular step {angular_step!r} does not divide 2*pi")
    return count


def radial_count(R: float, radial_step: float) -> int:
    # samples with r >= R would be identically zero; keep only r < R
    return int(math.ceil(R / radial_step - 1e-9))


def polar_shape(R, radial_step, angular_step) -> tuple[int, int]:
    return (radial_count(R, radial_step), angular_count(angular_step))


def polar_grid_from_function(fn, R, radial_step=1.0, angular_step=ANGULAR_STEP, center=(0.0, 0.0)):
    """Evaluate ``fn(r, theta)`` (broadcasting) on the polar lattice."""
    shape = polar_shape(R, radial_step, angular_step)
    r = (np.arange(shape[0]) * radial_step)[:, None]
    theta = (np.arange(shape[1]) * angular_step)[None, :]
    samples = np.broadcast_to(fn(r, theta), shape).astype(float)
    samples = np.where(r < R, samples, 0.0)
    return PolarGrid(samples, float(R), float(radial_step), float(angular_step), center)


def to_polar(image: GrayImage, center, R, angular_step=ANGULAR_STEP, radial_step=1.0) -> PolarGrid:
    """Bilinearly resample ``image`` around ``center`` = (x, y) onto a polar lattice.

    Masked pixels count as 0, as do samples falling outside the raster.
    """
    if R <= 0 or angular_step <= 0 or radial_step <= 0:
        raise ValueError("R, angular_step and radial_step must be positive")
    n_r, n_t = polar_shape(R, radial_step, angular_step)
    r = (np.arange(n_r) * radial_step)[:, None]
    theta = (np.arange(n_t) * angular_step)[None, :]
    cx, cy = center
    pixels = image.pixels if image.mask is None else np.where(image.mask, image.pixels, 0.0)
    samples = bilinear(pixels, cx + r * np.cos(theta), cy + r * np.sin(theta))
    samples[np.broadcast_to(r >= R, samples.shape)] = 0.0
    return PolarGrid(samples, float(R), float(radial_step), float(angular_step), (cx, cy))


def rotate_grid(grid: PolarGrid, steps: int) -> PolarGrid:
    """Rotate by ``steps`` angular steps: the result samples f(r, theta - steps*dtheta)."""
    return grid.like(np.roll(grid.samples, steps, axis=1))


@dataclass
class FBCoefficients:
    """A[n, i-1], B[n, i-1] for orders 0..N and roots 1..I on a disk of radius R."""

    A: np.ndarray
    B: np.ndarray
    R: float

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.A.shape != self.B.shape or self.A.ndim != 2:
            raise DimensionMismatchError("A and B must be matching 2-D tables")

    @property
    def orders(self) -> int:
        """Highest order N."""
        return self.A.shape[0] - 1

    @property
    def roots(self) -> int:
        return self.A.shape[1]

    @classmethod
    def zeros(cls, N=DEFAULT_ORDERS, I=DEFAULT_ROOTS, R=1.0) -> "FBCoefficients":
        return cls(np.zeros((N + 1, I)), np.zeros((N + 1, I)), R)


def _resolve_zeros(zeros, N, I) -> BesselZeroTable:
    if zeros is None:
        zeros = zero_table(N, I)
    if not zeros.covers(N, I):
        raise DimensionMismatchError(
            f"zero table ({zeros.max_order}, {zeros.roots_per_order}) does not cover ({N}, {I})"
        )
    return zeros


@functools.lru_cache(maxsize=32)
def _radial_basis_cached(alpha_bytes, N, I, n_r, radial_step, R):
    alpha = np.frombuffer(alpha_bytes, dtype=float).reshape(N + 1, I)
    r = np.arange(n_r) * radial_step
    basis = np.empty((N + 1, I, n_r))
    for n in range(N + 1):
        basis[n] = bessel_j(n, alpha[n][:, None] * r[None, :] / R)
    basis.setflags(write=False)
    return basis


def radial_basis(zeros: BesselZeroTable, N, I, n_r, radial_step, R) -> np.ndarray:
    """J_n(alpha_ni r_j / R) as an (N+1, I, n_r) array, cached per geometry."""
    alpha = np.ascontiguousarray(zeros.alpha[: N + 1, :I])
    return _radial_basis_cached(alpha.tobytes(), N, I, n_r, float(radial_step), float(R))


@functools.lru_cache(maxsize=32)
def _normalisation_cached(alpha_bytes, N, I, R):
    alpha = np.frombuffer(alpha_bytes, dtype=float).reshape(N + 1, I)
    norm = np.empty((N + 1, I))
    # order 0 uses 1/(pi R^2 J_1^2), higher orders 2/(pi R^2 J_{n+1}^2)
    for n in range(N + 1):
        factor = 1.0 if n == 0 else 2.0
        norm[n] = factor / (math.pi * R**2 * bessel_j(n + 1, alpha[n]) ** 2)
    norm.setflags(write=False)
    return norm


def _normalisation(zeros: BesselZeroTable, N, I, R) -> np.ndarray:
    alpha = np.ascontiguousarray(zeros.alpha[: N + 1, :I])
    return _normalisation_cached(alpha.tobytes(), N, I, float(R))


def angular_projection(grid: PolarGrid, N) -> tuple[np.ndarray, np.ndarray]:
    """Per-radius sums of f*cos(n theta)*dtheta and f*sin(n theta)*dtheta, shape (n_r, N+1)."""
    n = np.arange(N + 1)
    phase = np.outer(grid.angles, n)
    cos_part = grid.samples @ np.cos(phase) * grid.angular_step
    sin_part = grid.samples @ np.sin(phase) * grid.angular_step
    return cos_part, sin_part


def fbt_forward(grid: PolarGrid, zeros: BesselZeroTable = None, N=DEFAULT_ORDERS, I=DEFAULT_ROOTS) -> FBCoefficients:
    """Fourier-Bessel coefficients of a polar grid by lattice quadrature."""
    zeros = _resolve_zeros(zeros, N, I)
    R = grid.R
    n_r = grid.samples.shape[0]
    basis = radial_basis(zeros, N, I, n_r, grid.radial_step, R)
    cos_part, sin_part = angular_projection(grid, N)
    weight = grid.radii * grid.radial_step  # r dr
    # sum_j basis[n,i,j] * r_j dr * proj[j, n]
    A = np.einsum("nij,j,jn->ni", basis, weight, cos_part)
    B = np.einsum("nij,j,jn->ni", basis, weight, sin_part)
    norm = _normalisation(zeros, N, I, R)
    A = A * norm
    B = B * norm
    B[0, :] = 0.0
    return FBCoefficients(A, B, R)


def fbt_inverse(coeffs: FBCoefficients, like: PolarGrid, zeros: BesselZeroTable = None) -> PolarGrid:
    """Evaluate the truncated Fourier-Bessel series on the geometry of ``like``."""
    N, I = coeffs.orders, coeffs.roots
    zeros = _resolve_zeros(zeros, N, I)
    n_r = like.samples.shape[0]
    basis = radial_basis(zeros, N, I, n_r, like.radial_step, like.R)
    n = np.arange(N + 1)
    phase = np.outer(n, like.angles)
    radial_cos = np.einsum("nij,ni->nj", basis, coeffs.A)
    radial_sin = np.einsum("nij,ni->nj", basis, coeffs.B)
    samples = radial_cos.T @ np.cos(phase) + radial_sin.T @ np.sin(phase)
    samples[like.radii >= like.R, :] = 0.0
    return like.like(samples)


def flatten(coeffs: FBCoefficients) -> np.ndarray:
    """Interleave A and B: for n, for i: A[n,i], B[n,i] (B[0,i] kept as zeros)."""
    return np.stack([coeffs.A, coeffs.B], axis=-1).reshape(-1)


def unflatten(vector, N=DEFAULT_ORDERS, I=DEFAULT_ROOTS, R=1.0) -> FBCoefficients:
    vector = np.asarray(vector, dtype=float)
    if vector.size != 2 * (N + 1) * I:
        raise DimensionMismatchError(
            f"vector of length {vector.size} does not match band ({N}, {I})"
        )
    table = vector.reshape(N + 1, I, 2)
    return FBCoefficients(table[..., 0].copy(), table[..., 1].copy(), R)


def feature_length(N=DEFAULT_ORDERS, I=DEFAULT_ROOTS) -> int:
    return 2 * (N + 1) * I


def reconstruct_image(coeffs: FBCoefficients, shape, center, zeros: BesselZeroTable = None) -> np.ndarray:
    """Evaluate the series at every pixel of a ``shape`` raster (0 outside the disk)."""
    N, I = coeffs.orders, coeffs.roots
    zeros = _resolve_zeros(zeros, N, I)
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    dx, dy = xs - center[0], ys - center[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    inside = r < coeffs.R
    rr, tt = r[inside], theta[inside]
    total = np.zeros(rr.shape)
    for n in range(N + 1):
        radial = bessel_j(n, zeros.alpha[n, :I][:, None] * rr[None, :] / coeffs.R)
        total += np.cos(n * tt) * (coeffs.A[n] @ radial) + np.sin(n * tt) * (coeffs.B[n] @ radial)
    out = np.zeros(shape)
    out[inside] = total
    return out
