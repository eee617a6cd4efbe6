"""Polar Fourier transform features.

The polar grid is treated as an ordinary 2-D raster (radius x angle) and
Fourier transformed. Only the low band matching the Fourier-Bessel features
is kept: angular frequencies 0..30 and radial frequencies 0..3 cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .fbt import ANGULAR_STEP, PolarGrid

ANGULAR_BAND = 30
RADIAL_BAND = 3

# amplitudes at or below this (relative to the grid's L1 mass) get phase 0
_ZERO_AMPLITUDE = 1e-12


@dataclass
class PFTCoefficients:
    """Amplitude/phase tables indexed [angular frequency n, radial frequency m]."""

    amplitude: np.ndarray
    phase: np.ndarray

    @property
    def complex(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)


def pft_spectrum(grid: PolarGrid, angular_band=ANGULAR_BAND, radial_band=RADIAL_BAND,
                 angular_step=ANGULAR_STEP) -> np.ndarray:
    """Complex DFT entries F[n, m] for n <= angular_band, m <= radial_band.

    F[n, m] = sum_j sum_k f[j, k] exp(-2 pi i (m j / n_r + n k / n_theta)).
    """
    if abs(grid.angular_step - angular_step) > 1e-12:
        raise DimensionMismatchError(
            f"grid angular step {grid.angular_step!r} does not match {angular_step!r}"
        )
    n_r, n_t = grid.samples.shape
    if angular_band >= n_t or radial_band >= n_r:
        raise DimensionMismatchError("frequency band exceeds the grid size")
    spectrum = np.fft.fft2(grid.samples)  # axes: (radial m, angular n)
    return spectrum[: radial_band + 1, : angular_band + 1].T.copy()


def _to_amplitude_phase(entries: np.ndarray, scale: float) -> PFTCoefficients:
    amplitude = np.abs(entries)
    phase = np.angle(entries)
    # np.angle can return -pi for a negative-zero imaginary part; keep (-pi, pi]
    phase = np.where(phase <= -math.pi, math.pi, phase)
    phase = np.where(amplitude <= _ZERO_AMPLITUDE * max(scale, 1.0), 0.0, phase)
    return PFTCoefficients(amplitude, phase)


def pft_forward(grid: PolarGrid, angular_band=ANGULAR_BAND, radial_band=RADIAL_BAND) -> PFTCoefficients:
    entries = pft_spectrum(grid, angular_band, radial_band)
    return _to_amplitude_phase(entries, float(np.abs(grid.samples).sum()))


def pft_flatten(coeffs: PFTCoefficients) -> np.ndarray:
    """(amplitude, phase) pairs for n = 0..30, m = 0..3 (length 248 by default)."""
    return np.stack([coeffs.amplitude, coeffs.phase], axis=-1).reshape(-1)


def pft_feature_length(angular_band=ANGULAR_BAND, radial_band=RADIAL_BAND) -> int:
    return 2 * (angular_band + 1) * (radial_band + 1)
