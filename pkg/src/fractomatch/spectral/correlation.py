"""
Banded spectral correlations and Fisher-z pair observations.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from fractomatch.errors import BandCorrelationError, DatasetError, FisherZError
from fractomatch.models import PairLabel
from fractomatch.spectral.bands import DEFAULT_MIN_BAND_CELLS, Band, BandPlan, band_mask
from fractomatch.spectral.spectrum import BandSpectrum, amplitude_spectrum
from fractomatch.surface.heightmap import HeightMap

logger = logging.getLogger("fractomatch.spectral")

FISHER_EPS = 1e-12


class PairObservation:
    """p x q Fisher-z band correlations for one base/tip pair (rows = bands, columns = images)."""

    def __init__(
        self,
        z: np.ndarray,
        pair_id: Tuple[str, str],
        label: PairLabel = PairLabel.UNKNOWN,
        band_plan: Optional[BandPlan] = None,
        r: Optional[np.ndarray] = None,
    ):
        self.z = np.array(z, dtype=np.float64)
        if self.z.ndim != 2:
            raise DatasetError("Observation must be a p x q matrix", {"shape": self.z.shape})
        p, q = self.z.shape
        if p < 1 or q < 2:
            raise DatasetError("Observation needs p >= 1 bands and q >= 2 images", {"shape": (p, q)})
        if not np.all(np.isfinite(self.z)):
            raise DatasetError("Observation has non-finite entries", {"pair_id": pair_id})

        self.pair_id = (str(pair_id[0]), str(pair_id[1]))
        self.label = PairLabel(label)
        self.band_plan = band_plan or BandPlan()
        if self.band_plan.p != p:
            raise DatasetError("Band plan does not match the number of rows", {"p": p, "bands": self.band_plan.p})
        self.r = np.tanh(self.z) if r is None else np.array(r, dtype=np.float64)
        self.z.setflags(write=False)
        self.r.setflags(write=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.z.shape

    @property
    def key(self) -> str:
        """Pair id in its CSV form "base:tip"."""
        return f"{self.pair_id[0]}:{self.pair_id[1]}"

    def involves(self, specimen: str) -> bool:
        return specimen in self.pair_id

    def with_label(self, label: PairLabel) -> "PairObservation":
        return PairObservation(self.z, self.pair_id, label, self.band_plan, self.r)

    def __repr__(self) -> str:
        return f"PairObservation({self.key}, {self.label.value}, shape={self.shape})"


def parse_pair_key(key: str) -> Tuple[str, str]:
    base, sep, tip = key.partition(":")
    if not sep or not base or not tip:
        raise DatasetError("pair_id must look like 'base:tip'", {"pair_id": key})
    return base, tip


def band_correlation(
    a: BandSpectrum,
    b: BandSpectrum,
    band: Band,
    sector: Optional[Tuple[float, float]] = None,
    min_cells: int = DEFAULT_MIN_BAND_CELLS,
) -> float:
    """
    Pearson correlation of two amplitude spectra over the cells of one band.

    Cells are paired by identical frequency coordinates. Raises when the band
    selects fewer than min_cells cells or either restriction has zero variance.
    """
    if not a.same_geometry(b):
        raise BandCorrelationError(
            "Spectra do not share grid geometry",
            {"a": (a.transform_size, a.pitch), "b": (b.transform_size, b.pitch)},
        )
    mask = band_mask(a.transform_size, a.pitch, band, sector)
    cells = int(mask.sum())
    if cells < min_cells:
        raise BandCorrelationError(
            "Band selects too few spectrum cells", {"band": band, "cells": cells, "min_cells": min_cells}
        )

    x = a.amplitude[mask]
    y = b.amplitude[mask]
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        raise BandCorrelationError("Zero amplitude variance inside band; correlation undefined", {"band": band})
    r = float(np.sum(dx * dy)) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def fisher_z(r: float) -> float:
    """arctanh(r) with r clamped to [-1 + 1e-12, 1 - 1e-12]."""
    if not np.isfinite(r) or abs(r) > 1.0 + FISHER_EPS:
        raise FisherZError("Correlation outside [-1, 1]", {"r": r})
    clamped = min(1.0 - FISHER_EPS, max(-1.0 + FISHER_EPS, float(r)))
    return float(np.arctanh(clamped))


def correlate_spectra(
    base_spectra: Sequence[BandSpectrum],
    tip_spectra: Sequence[BandSpectrum],
    plan: BandPlan,
    min_cells: int = DEFAULT_MIN_BAND_CELLS,
) -> Tuple[np.ndarray, np.ndarray]:
    """(r, z) matrices for position-aligned spectra: entry [i, j] is band i of image j."""
    if len(base_spectra) != len(tip_spectra):
        raise DatasetError(
            "Base and tip need the same number of images",
            {"base": len(base_spectra), "tip": len(tip_spectra)},
        )
    p, q = plan.p, len(base_spectra)
    r = np.empty((p, q))
    z = np.empty((p, q))
    for j, (sa, sb) in enumerate(zip(base_spectra, tip_spectra)):
        for i, band in enumerate(plan.bands):
            try:
                r[i, j] = band_correlation(sa, sb, band, plan.angular_sector, min_cells)
            except BandCorrelationError as e:
                raise BandCorrelationError(e.message, {**e.context, "band_index": i, "image_index": j}) from e
            z[i, j] = fisher_z(r[i, j])
    return r, z


def compute_spectra(
    images: Sequence[HeightMap],
    transform_size: int,
    hann: bool = False,
    workers: int = 1,
) -> List[BandSpectrum]:
    """Spectra for a sequence of images, in input order."""
    if workers <= 1:
        return [amplitude_spectrum(image, transform_size, hann) for image in images]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda image: amplitude_spectrum(image, transform_size, hann), images))


def build_pair_observation(
    base_images: Sequence[HeightMap],
    tip_images: Sequence[HeightMap],
    plan: BandPlan,
    transform_size: int,
    pair_id: Tuple[str, str] = ("base", "tip"),
    label: PairLabel = PairLabel.UNKNOWN,
    hann: bool = False,
    min_cells: int = DEFAULT_MIN_BAND_CELLS,
    workers: int = 1,
) -> PairObservation:
    """
    Correlate base image j with tip image j in every band.

    Args:
        base_images: k ordered base-side images
        tip_images: k ordered tip-side images, same geometry
        plan: Band plan (p bands)
        transform_size: FFT size (power of two)

    Returns:
        PairObservation with z[i][j] = fisher_z(r(band i, image j))
    """
    if len(base_images) != len(tip_images):
        raise DatasetError(
            "Base and tip need the same number of images",
            {"pair_id": pair_id, "base": len(base_images), "tip": len(tip_images)},
        )
    shapes = {(m.shape, m.pitch) for m in list(base_images) + list(tip_images)}
    if len(shapes) != 1:
        raise DatasetError("All images of a pair must share one geometry", {"pair_id": pair_id})

    base_spectra = compute_spectra(base_images, transform_size, hann, workers)
    tip_spectra = compute_spectra(tip_images, transform_size, hann, workers)
    r, z = correlate_spectra(base_spectra, tip_spectra, plan, min_cells)
    return PairObservation(z, pair_id, label, plan, r)


def restrict_columns(observation: PairObservation, columns: Sequence[int]) -> PairObservation:
    """Keep the given image columns, in order."""
    columns = list(columns)
    q = observation.shape[1]
    if any(c < 0 or c >= q for c in columns):
        raise DatasetError("Column index out of range", {"columns": columns, "q": q})
    return PairObservation(
        observation.z[:, columns],
        observation.pair_id,
        observation.label,
        observation.band_plan,
        observation.r[:, columns],
    )
