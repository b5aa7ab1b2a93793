"""
Decision-threshold calibration from true non-match log-odds.
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from fractomatch.errors import CalibrationError
from fractomatch.matchkit.model import MatchModel
from fractomatch.matchkit.scoring import posterior_match
from fractomatch.spectral.correlation import PairObservation

logger = logging.getLogger("fractomatch.matchkit")

MIN_CALIBRATION_SCORES = 20
DEFAULT_BOOTSTRAP = 2000

Score = Union[float, PairObservation]


def _as_scores(model: Optional[MatchModel], items: Sequence[Score]) -> np.ndarray:
    values = []
    for item in items:
        if isinstance(item, PairObservation):
            if model is None:
                raise CalibrationError("Scoring observations needs a model")
            values.append(posterior_match(model, item)[1])
        else:
            values.append(float(item))
    return np.asarray(values, dtype=np.float64)


def calibrate_threshold(
    model: Optional[MatchModel],
    nonmatch_scores: Sequence[Score],
    alpha: float = 1e-4,
    confidence: float = 0.95,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: Optional[int] = None,
) -> float:
    """
    Log-odds threshold for a target false-alarm probability.

    A normal distribution is fitted to the non-match log-odds; the threshold is
    the upper `confidence` bootstrap percentile of its (1 - alpha) quantile.

    Args:
        model: Used to score nonmatch_scores given as PairObservations
        nonmatch_scores: True non-match log-odds (or observations), at least 20
        alpha: False-alarm probability
        confidence: Level of the bootstrap upper bound
        n_boot: Bootstrap resamples
        seed: Bootstrap seed

    Returns:
        Threshold on the log-odds scale
    """
    if not 0.0 < alpha < 1.0:
        raise CalibrationError("alpha must lie strictly between 0 and 1", {"alpha": alpha})
    if not 0.0 < confidence < 1.0:
        raise CalibrationError("confidence must lie strictly between 0 and 1", {"confidence": confidence})
    if n_boot < 1:
        raise CalibrationError("At least one bootstrap resample is needed", {"n_boot": n_boot})

    scores = _as_scores(model, nonmatch_scores)
    n = scores.size
    if n < MIN_CALIBRATION_SCORES:
        raise CalibrationError("Too few non-match scores", {"n": n, "min": MIN_CALIBRATION_SCORES})
    if not np.all(np.isfinite(scores)):
        raise CalibrationError("Non-match scores must be finite")
    if np.std(scores, ddof=1) == 0.0:
        raise CalibrationError("Non-match scores have zero variance")

    z = float(stats.norm.ppf(1.0 - alpha))
    rng = np.random.default_rng(seed)
    resamples = scores[rng.integers(0, n, size=(n_boot, n))]
    quantiles = resamples.mean(axis=1) + z * resamples.std(axis=1, ddof=1)
    threshold = float(np.percentile(quantiles, 100.0 * confidence))

    logger.info(
        "calibrated threshold %.6g (alpha=%g, confidence=%g, n=%d, point estimate %.6g)",
        threshold, alpha, confidence, n, float(scores.mean() + z * scores.std(ddof=1)),
    )
    return threshold
