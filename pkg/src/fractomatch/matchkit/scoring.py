"""
Posterior probabilities, log-odds and decisions for new pairs.
"""

import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, logit

from fractomatch.errors import ModelError
from fractomatch.matchkit.model import MatchModel
from fractomatch.models import ClassificationRecord, Decision
from fractomatch.mxdist.densities import mxt_logpdf
from fractomatch.spectral.correlation import PairObservation

POSTERIOR_FLOOR = float(np.finfo(np.float64).tiny)
POSTERIOR_CEILING = float(np.nextafter(1.0, 0.0))


def clamp_posterior(logodds: float) -> float:
    return float(min(POSTERIOR_CEILING, max(POSTERIOR_FLOOR, float(expit(logodds)))))


def probability_to_logodds(probability: float) -> float:
    if not 0.0 < probability < 1.0:
        raise ModelError("Probability threshold must lie strictly between 0 and 1", {"probability": probability})
    return float(logit(probability))


def _columns(model: MatchModel, image_indices: Optional[Sequence[int]]) -> List[int]:
    if image_indices is None:
        return list(range(model.q))
    columns = [int(i) for i in image_indices]
    if not columns:
        raise ModelError("Subset needs at least one image")
    if any(b - a != 1 for a, b in zip(columns, columns[1:])):
        raise ModelError("Subset images must be consecutive", {"images": columns})
    if columns[0] < 0 or columns[-1] >= model.q:
        raise ModelError("Subset images out of range", {"images": columns, "q": model.q})
    return columns


def _log_likelihoods(model: MatchModel, observation: PairObservation, columns: List[int]) -> Tuple[float, float]:
    model.check_observation(observation)
    z = observation.z[:, columns]
    match_params = model.match_params.restrict(columns)
    nonmatch_params = model.nonmatch_params.restrict(columns)
    return mxt_logpdf(z, match_params), mxt_logpdf(z, nonmatch_params)


def _posterior(model: MatchModel, observation: PairObservation, columns: List[int]) -> Tuple[float, float]:
    log_f1, log_f2 = _log_likelihoods(model, observation, columns)
    logodds = (log_f1 - log_f2) + math.log(model.prior_match / (1.0 - model.prior_match))
    return clamp_posterior(logodds), logodds


def posterior_match(model: MatchModel, observation: PairObservation) -> Tuple[float, float]:
    """
    P(match | X) = p f1(X) / (p f1(X) + (1 - p) f2(X)), in log space.

    Returns:
        (posterior, logodds)
    """
    return _posterior(model, observation, _columns(model, None))


def likelihood_ratio(model: MatchModel, observation: PairObservation) -> float:
    """Prior-free log10 likelihood ratio f1(X) / f2(X)."""
    log_f1, log_f2 = _log_likelihoods(model, observation, _columns(model, None))
    return (log_f1 - log_f2) / math.log(10.0)


def _decide(
    model: MatchModel,
    observation: PairObservation,
    columns: List[int],
    threshold: Optional[float],
    use_calibrated: bool,
) -> ClassificationRecord:
    posterior, logodds = _posterior(model, observation, columns)
    if threshold is None:
        threshold = model.threshold_logodds if use_calibrated else 0.0
    decision = Decision.MATCH if logodds > threshold else Decision.NON_MATCH
    return ClassificationRecord(
        pair_id=observation.key,
        logodds=logodds,
        posterior=posterior,
        decision=decision,
        threshold=threshold,
        label=observation.label,
    )


def classify(
    model: MatchModel,
    observation: PairObservation,
    threshold_logodds: Optional[float] = None,
    use_calibrated: bool = False,
) -> ClassificationRecord:
    """
    Match iff logodds > threshold; a tie is a non-match.

    The threshold defaults to 0 (posterior 0.5), or to the model's
    calibrated threshold when use_calibrated is set.
    """
    return _decide(model, observation, _columns(model, None), threshold_logodds, use_calibrated)


def classify_subset(
    model: MatchModel,
    observation: PairObservation,
    image_indices: Sequence[int],
    threshold_logodds: Optional[float] = None,
    use_calibrated: bool = False,
) -> ClassificationRecord:
    """Classify using only a consecutive run of images, with both densities marginalised to it."""
    return _decide(model, observation, _columns(model, image_indices), threshold_logodds, use_calibrated)


def score_many(
    model: MatchModel,
    observations: Iterable[PairObservation],
    threshold_logodds: Optional[float] = None,
    use_calibrated: bool = False,
) -> List[ClassificationRecord]:
    """Classification records sorted by pair_id."""
    ordered = sorted(observations, key=lambda obs: obs.key)
    return [classify(model, obs, threshold_logodds, use_calibrated) for obs in ordered]
