"""
Tilt correction and spike removal for height maps.
"""

import logging
from typing import Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import lstsq

from fractomatch.errors import HeightMapError, UnderdeterminedPlaneError
from fractomatch.surface.heightmap import HeightMap

logger = logging.getLogger("fractomatch.surface")

MAD_SCALE = 1.4826
DESPIKE_WINDOWS = (3, 5, 7)
# rows of windows processed per chunk; bounds the (chunk, cols, w, w) buffer
_CHUNK_ROWS = 128


def fit_plane(height_map: HeightMap) -> Tuple[np.ndarray, np.ndarray]:
    """
    Least-squares plane z = c0 + c1*x + c2*y over unmasked cells.

    Coordinates are physical (um). Returns the coefficients and the plane
    evaluated on the full grid.
    """
    valid = height_map.mask
    if int(valid.sum()) < 3:
        raise UnderdeterminedPlaneError(
            "Plane fit needs at least three unmasked cells", {"valid": int(valid.sum())}
        )

    yy, xx = np.indices(height_map.shape, dtype=np.float64)
    xx *= height_map.pitch
    yy *= height_map.pitch
    design = np.column_stack([np.ones(int(valid.sum())), xx[valid], yy[valid]])
    coeffs, _, _, _ = lstsq(design, height_map.heights[valid])
    plane = coeffs[0] + coeffs[1] * xx + coeffs[2] * yy
    return coeffs, plane


def detrend_plane(height_map: HeightMap) -> HeightMap:
    """Subtract the best-fit plane; the unmasked mean of the result is zero."""
    coeffs, plane = fit_plane(height_map)
    residual = height_map.heights - plane
    residual -= np.nanmean(residual[height_map.mask])
    tilt = float(np.hypot(coeffs[1], coeffs[2]) * 1000.0)
    return height_map.with_heights(residual, detrended=True, tilt_um_per_mm=tilt)


def despike(height_map: HeightMap, window: int = 5, z_thresh: float = 6.0) -> HeightMap:
    """
    Replace spike cells by their window median.

    A cell is a spike when |h - median| > z_thresh * 1.4826 * MAD, with the
    median and the median absolute deviation taken over the window centred on
    the cell (reflective padding at the borders, masked cells ignored).
    """
    if window not in DESPIKE_WINDOWS:
        raise HeightMapError("Despike window must be 3, 5 or 7", {"window": window})
    if not z_thresh > 0:
        raise HeightMapError("Despike threshold must be positive", {"z_thresh": z_thresh})

    spikes, medians = find_spikes(height_map, window, z_thresh)
    count = int(spikes.sum())
    if count == 0:
        return height_map.with_heights(height_map.heights, spikes_replaced=0)

    cleaned = np.where(spikes, medians, height_map.heights)
    logger.debug("Despike replaced %d cells", count)
    return height_map.with_heights(cleaned, spikes_replaced=count)


def find_spikes(height_map: HeightMap, window: int, z_thresh: float) -> Tuple[np.ndarray, np.ndarray]:
    """Boolean spike mask and the per-cell window medians."""
    half = window // 2
    padded = np.pad(height_map.heights, half, mode="reflect")
    has_nan = not bool(height_map.mask.all())
    median = np.nanmedian if has_nan else np.median

    medians = np.empty(height_map.shape)
    mads = np.empty(height_map.shape)
    for start in range(0, height_map.rows, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, height_map.rows)
        windows = sliding_window_view(padded[start:stop + 2 * half], (window, window))
        med = median(windows, axis=(-2, -1))
        mad = median(np.abs(windows - med[..., None, None]), axis=(-2, -1))
        medians[start:stop] = med
        mads[start:stop] = mad

    with np.errstate(invalid="ignore"):
        deviation = np.abs(height_map.heights - medians)
        spikes = deviation > z_thresh * MAD_SCALE * mads
    spikes &= height_map.mask & np.isfinite(medians)
    return spikes, medians


def height_map_stats(height_map: HeightMap) -> Dict[str, float]:
    """Report quantities: size, mask %, RMS about the mean, tilt of the best plane."""
    values = height_map.heights[height_map.mask]
    rms = float(np.sqrt(np.mean((values - values.mean()) ** 2))) if values.size else 0.0
    tilt = 0.0
    if values.size >= 3:
        coeffs, _ = fit_plane(height_map)
        tilt = float(np.hypot(coeffs[1], coeffs[2]) * 1000.0)
    return {
        "rows": height_map.rows,
        "cols": height_map.cols,
        "mask_percent": 100.0 * height_map.mask_fraction,
        "rms_um": rms,
        "tilt_um_per_mm": tilt,
    }
