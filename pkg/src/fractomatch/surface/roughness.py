"""
Height-height correlation and self-affine analysis.

delta_h(dx) = sqrt(<[h(x + dx, y) - h(x, y)]^2>) averaged over every row and
position. On a self-affine surface it grows as dx**H; the lag where it departs
from that power law marks the scale at which the surface becomes individual.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from fractomatch.errors import RoughnessError
from fractomatch.surface.heightmap import HeightMap

logger = logging.getLogger("fractomatch.surface")

TRANSITION_TOLERANCE = 0.10
MIN_FIT_LAGS = 5


class RoughnessCurve:
    """delta_h against lag, with the optional self-affine fit results."""

    def __init__(
        self,
        lags: Sequence[float],
        values: Sequence[float],
        fitted_exponent: Optional[float] = None,
        transition_scale: Optional[float] = None,
        absent_lags: Optional[List[float]] = None,
    ):
        self.lags = np.asarray(lags, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        self.fitted_exponent = fitted_exponent
        self.transition_scale = transition_scale
        self.absent_lags = list(absent_lags or [])

        if self.lags.shape != self.values.shape or self.lags.ndim != 1:
            raise RoughnessError("lags and values must be 1D arrays of equal length")
        if np.any(self.lags <= 0) or np.any(np.diff(self.lags) <= 0):
            raise RoughnessError("lags must be positive and strictly increasing")
        if np.any(self.values < 0):
            raise RoughnessError("delta_h values must be non-negative")

    def with_fit(self, exponent: float, transition_scale: Optional[float]) -> "RoughnessCurve":
        return RoughnessCurve(self.lags, self.values, exponent, transition_scale, self.absent_lags)

    def __len__(self) -> int:
        return len(self.lags)


def height_height_correlation(height_map: HeightMap, max_lag: float) -> RoughnessCurve:
    """
    Compute delta_h for every integer-pixel lag up to max_lag (um).

    Pairs touching a masked cell are excluded. Lags with no valid pair are
    listed in `absent_lags` instead of being reported as zero.
    """
    span = height_map.cols * height_map.pitch / 2.0
    if not max_lag < span:
        raise RoughnessError(
            "max_lag must be below half the image width", {"max_lag": max_lag, "limit": span}
        )

    heights = height_map.heights
    valid = height_map.mask
    max_pixels = int(np.floor(max_lag / height_map.pitch + 1e-9))

    lags, values, absent = [], [], []
    for lag in range(1, max_pixels + 1):
        pair_valid = valid[:, lag:] & valid[:, :-lag]
        count = int(pair_valid.sum())
        dx = lag * height_map.pitch
        if count == 0:
            absent.append(dx)
            continue
        diff = heights[:, lag:] - heights[:, :-lag]
        values.append(float(np.sqrt(np.mean(diff[pair_valid] ** 2))))
        lags.append(dx)

    if not lags:
        raise RoughnessError("No lag has a valid pixel pair", {"max_lag": max_lag})
    return RoughnessCurve(lags, values, absent_lags=absent)


def fit_self_affine(
    curve: RoughnessCurve,
    fit_range: Tuple[float, float],
    tolerance: float = TRANSITION_TOLERANCE,
) -> Tuple[float, Optional[float]]:
    """
    Fit the roughness exponent and locate the transition scale.

    Args:
        curve: delta_h curve
        fit_range: [lo, hi] lag interval (um) assumed self-affine
        tolerance: departure from the power law, in natural-log units

    Returns:
        (exponent, transition_scale); transition_scale is None when the curve
        never departs from the fitted power law above fit_range
    """
    lo, hi = fit_range
    in_range = (curve.lags >= lo) & (curve.lags <= hi)
    if int(in_range.sum()) < MIN_FIT_LAGS:
        raise RoughnessError(
            f"Fit range must contain at least {MIN_FIT_LAGS} lags",
            {"fit_range": fit_range, "lags_in_range": int(in_range.sum())},
        )
    if np.any(curve.values[in_range] <= 0):
        raise RoughnessError("delta_h must be positive inside the fit range", {"fit_range": fit_range})

    log_lags = np.log(curve.lags[in_range])
    log_values = np.log(curve.values[in_range])
    slope, intercept = np.polyfit(log_lags, log_values, 1)

    transition = None
    above = np.flatnonzero(curve.lags > hi)
    for index in above:
        value = curve.values[index]
        if value <= 0:
            transition = float(curve.lags[index])
            break
        predicted = intercept + slope * np.log(curve.lags[index])
        if abs(np.log(value) - predicted) > tolerance:
            transition = float(curve.lags[index])
            break

    logger.debug("Self-affine fit: exponent=%.4f transition=%s", slope, transition)
    return float(slope), transition


def analyze_roughness(
    height_map: HeightMap,
    max_lag: float,
    fit_range: Tuple[float, float],
) -> RoughnessCurve:
    """delta_h curve with the self-affine fit attached."""
    curve = height_height_correlation(height_map, max_lag)
    exponent, transition = fit_self_affine(curve, fit_range)
    return curve.with_fit(exponent, transition)
