"""
Height map container.

A HeightMap is the raw evidence image: a rectangular grid of surface heights
in micrometres, the pixel pitch, and a validity mask. Invalid pixels are
stored as NaN in `heights` and flagged False in `mask`.
"""

from typing import Any, Dict, Optional

import numpy as np

from fractomatch.errors import GridShapeError, MaskFractionError, PitchError

MIN_SIDE = 64
MAX_MASK_FRACTION = 0.10


class HeightMap:
    """Topography image with pixel pitch (um/pixel) and validity mask."""

    def __init__(
        self,
        heights: np.ndarray,
        pitch: float,
        mask: Optional[np.ndarray] = None,
        meta: Optional[Dict[str, Any]] = None,
        validate: bool = True,
    ):
        heights = np.array(heights, dtype=np.float64)
        if mask is None:
            mask = np.isfinite(heights)
        else:
            mask = np.asarray(mask, dtype=bool) & np.isfinite(heights)
        heights[~mask] = np.nan

        self.heights = heights
        self.pitch = float(pitch)
        self.mask = mask
        self.meta: Dict[str, Any] = dict(meta or {})
        self.heights.setflags(write=False)
        self.mask.setflags(write=False)

        if validate:
            self.validate()

    @property
    def shape(self) -> tuple:
        return self.heights.shape

    @property
    def rows(self) -> int:
        return self.heights.shape[0]

    @property
    def cols(self) -> int:
        return self.heights.shape[1]

    @property
    def mask_fraction(self) -> float:
        return 1.0 - float(self.mask.mean())

    def validate(self) -> None:
        """Check every HeightMap invariant; raise the matching error."""
        if self.heights.ndim != 2:
            raise GridShapeError("Height map must be a 2D grid", {"ndim": self.heights.ndim})
        if self.rows < MIN_SIDE or self.cols < MIN_SIDE:
            raise GridShapeError(
                f"Height map must be at least {MIN_SIDE} x {MIN_SIDE}",
                {"rows": self.rows, "cols": self.cols},
            )
        if not np.isfinite(self.pitch) or self.pitch <= 0:
            raise PitchError("Pixel pitch must be positive", {"pitch": self.pitch})
        if self.mask_fraction > MAX_MASK_FRACTION:
            raise MaskFractionError(
                f"Masked fraction exceeds {MAX_MASK_FRACTION:.0%}",
                {"mask_fraction": round(self.mask_fraction, 4)},
            )

    def with_heights(self, heights: np.ndarray, **meta: Any) -> "HeightMap":
        """Return a new map on the same lattice; masked cells stay masked."""
        merged = {**self.meta, **meta}
        return HeightMap(heights, self.pitch, mask=self.mask, meta=merged, validate=False)

    def filled(self, value: float = 0.0) -> np.ndarray:
        """Heights with masked cells replaced by `value`."""
        return np.where(self.mask, self.heights, value)

    def crop(self, row: int, col: int, rows: int, cols: int, **meta: Any) -> "HeightMap":
        """Sub-window [row:row+rows, col:col+cols] as a new map."""
        if row < 0 or col < 0 or row + rows > self.rows or col + cols > self.cols:
            raise GridShapeError(
                "Crop window outside the map",
                {"row": row, "col": col, "rows": rows, "cols": cols, "shape": self.shape},
            )
        return HeightMap(
            self.heights[row:row + rows, col:col + cols],
            self.pitch,
            mask=self.mask[row:row + rows, col:col + cols],
            meta={**self.meta, **meta},
            validate=False,
        )

    def __repr__(self) -> str:
        return (
            f"HeightMap({self.rows}x{self.cols}, pitch={self.pitch:g} um, "
            f"masked={self.mask_fraction:.2%}, meta={self.meta})"
        )
