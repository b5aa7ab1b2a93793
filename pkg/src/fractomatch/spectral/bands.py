"""
Radial frequency band plans and half-plane cell selection.
"""

from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Band = Tuple[float, float]

DEFAULT_BANDS: List[Band] = [(5.0, 10.0), (10.0, 20.0)]
DEFAULT_MIN_BAND_CELLS = 50


class BandPlan(BaseModel):
    """Ordered half-open radial bands [f_lo, f_hi) in cycles/mm, optional angular sector."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    bands: List[Band] = Field(default_factory=lambda: list(DEFAULT_BANDS))
    angular_sector: Optional[Tuple[float, float]] = None

    @field_validator("bands")
    @classmethod
    def _check_bands(cls, bands: List[Band]) -> List[Band]:
        if not bands:
            raise ValueError("a band plan needs at least one band")
        previous_hi = None
        for lo, hi in bands:
            if lo < 0:
                raise ValueError(f"band lower edge must be >= 0, got {lo}")
            if not hi > lo:
                raise ValueError(f"band [{lo}, {hi}) is empty")
            if previous_hi is not None and lo < previous_hi:
                raise ValueError("bands must be non-overlapping and increasing")
            previous_hi = hi
        return [(float(lo), float(hi)) for lo, hi in bands]

    @model_validator(mode="after")
    def _check_sector(self) -> "BandPlan":
        if self.angular_sector is not None:
            lo, hi = self.angular_sector
            if not (0.0 <= lo < hi <= 180.0):
                raise ValueError("angular sector must satisfy 0 <= lo < hi <= 180 degrees")
        return self

    @classmethod
    def parse(cls, text: str, sector: Optional[Tuple[float, float]] = None) -> "BandPlan":
        """Parse the CLI form "5-10,10-20"."""
        bands = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            lo, _, hi = chunk.partition("-")
            bands.append((float(lo), float(hi)))
        return cls(bands=bands, angular_sector=sector)

    @property
    def p(self) -> int:
        return len(self.bands)

    def describe(self) -> str:
        return ",".join(f"{lo:g}-{hi:g}" for lo, hi in self.bands)


def frequency_axes(transform_size: int, pitch: float) -> Tuple[np.ndarray, np.ndarray]:
    """(fy, fx) axes in cycles/mm of the half-plane grid; fx ascending."""
    spacing = 1000.0 / (transform_size * pitch)
    fy = np.arange(transform_size // 2 + 1) * spacing
    fx = (np.arange(transform_size) - transform_size // 2) * spacing
    return fy, fx


@lru_cache(maxsize=64)
def _cached_band_mask(
    transform_size: int,
    pitch: float,
    band: Band,
    sector: Optional[Tuple[float, float]],
) -> np.ndarray:
    fy, fx = frequency_axes(transform_size, pitch)
    fyy, fxx = np.meshgrid(fy, fx, indexing="ij")
    radius = np.hypot(fxx, fyy)
    mask = (radius >= band[0]) & (radius < band[1])

    # rows fy = 0 and fy = Nyquist hold conjugate duplicates: keep fx >= 0 only
    edge_rows = [0, transform_size // 2]
    for row in edge_rows:
        mask[row, fx < 0] = False

    if sector is not None:
        angle = np.degrees(np.arctan2(fyy, fxx))
        mask &= (angle >= sector[0]) & (angle < sector[1])

    mask.setflags(write=False)
    return mask


def band_mask(
    transform_size: int,
    pitch: float,
    band: Band,
    sector: Optional[Tuple[float, float]] = None,
) -> np.ndarray:
    """Boolean mask of half-plane cells whose radial frequency lies in band."""
    return _cached_band_mask(
        int(transform_size),
        float(pitch),
        (float(band[0]), float(band[1])),
        None if sector is None else (float(sector[0]), float(sector[1])),
    )


def band_cell_count(
    band: Band,
    transform_size: int,
    pitch: float,
    sector: Optional[Tuple[float, float]] = None,
) -> int:
    """Number of distinct spectrum cells a band selects at this geometry."""
    return int(band_mask(transform_size, pitch, band, sector).sum())


def undersized_bands(
    plan: BandPlan,
    transform_size: int,
    pitch: float,
    min_cells: int = DEFAULT_MIN_BAND_CELLS,
) -> List[Tuple[Band, int]]:
    """Bands of the plan holding fewer than min_cells cells at this geometry."""
    short = []
    for band in plan.bands:
        count = band_cell_count(band, transform_size, pitch, plan.angular_sector)
        if count < min_cells:
            short.append((band, count))
    return short
