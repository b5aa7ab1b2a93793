"""
Half-plane amplitude spectra of height maps.
"""

import logging
from typing import Any, Dict, Optional

import numpy as np
from scipy import fft
from scipy.signal import windows

from fractomatch.errors import SpectrumError
from fractomatch.spectral.bands import frequency_axes
from fractomatch.surface.heightmap import HeightMap

logger = logging.getLogger("fractomatch.spectral")


class BandSpectrum:
    """|H(f)| over the fy >= 0 half-plane, shape (N/2 + 1, N), fx ascending."""

    def __init__(
        self,
        amplitude: np.ndarray,
        transform_size: int,
        pitch: float,
        source_meta: Optional[Dict[str, Any]] = None,
    ):
        self.amplitude = np.asarray(amplitude, dtype=np.float64)
        self.transform_size = int(transform_size)
        self.pitch = float(pitch)
        self.fy_axis, self.fx_axis = frequency_axes(self.transform_size, self.pitch)
        self.source_meta = dict(source_meta or {})

        expected = (self.transform_size // 2 + 1, self.transform_size)
        if self.amplitude.shape != expected:
            raise SpectrumError(
                "Amplitude grid has the wrong shape",
                {"shape": self.amplitude.shape, "expected": expected},
            )
        if np.any(self.amplitude < 0):
            raise SpectrumError("Amplitudes must be non-negative")
        self.amplitude.setflags(write=False)

    @property
    def spacing(self) -> float:
        """Frequency step in cycles/mm."""
        return 1000.0 / (self.transform_size * self.pitch)

    def same_geometry(self, other: "BandSpectrum") -> bool:
        return self.transform_size == other.transform_size and self.pitch == other.pitch


def is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


def full_amplitude(height_map: HeightMap, transform_size: int, hann: bool = False) -> np.ndarray:
    """
    Full-plane |FFT| of the mean-removed, centrally zero-padded map.

    Masked cells are set to the unmasked mean before removal, so they add
    nothing to the transform. Output is in numpy's unshifted FFT order.
    """
    if not is_power_of_two(transform_size):
        raise SpectrumError("transform_size must be a power of two", {"transform_size": transform_size})
    if transform_size < max(height_map.rows, height_map.cols):
        raise SpectrumError(
            "transform_size smaller than the image; refusing to truncate",
            {"transform_size": transform_size, "shape": height_map.shape},
        )

    mean = float(np.mean(height_map.heights[height_map.mask]))
    centred = height_map.filled(mean) - mean
    if hann:
        taper = np.outer(
            windows.hann(height_map.rows, sym=False),
            windows.hann(height_map.cols, sym=False),
        )
        centred = centred * taper

    padded = np.zeros((transform_size, transform_size))
    top = (transform_size - height_map.rows) // 2
    left = (transform_size - height_map.cols) // 2
    padded[top:top + height_map.rows, left:left + height_map.cols] = centred
    return np.abs(fft.fft2(padded))


def amplitude_spectrum(
    height_map: HeightMap,
    transform_size: int,
    hann: bool = False,
) -> BandSpectrum:
    """
    Amplitude spectrum restricted to the upper half-plane.

    |H(f)| = |H(-f)| for a real surface, so rows fy >= 0 carry all of it.
    """
    amplitude = full_amplitude(height_map, transform_size, hann)
    half = fft.fftshift(amplitude[: transform_size // 2 + 1, :], axes=1)
    return BandSpectrum(half, transform_size, height_map.pitch, source_meta=height_map.meta)
