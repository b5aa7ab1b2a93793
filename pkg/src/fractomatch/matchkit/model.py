"""
Two-class match / non-match model and its training.
"""

import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from fractomatch.emfit import FitConfig, FitReport, fit_mxt
from fractomatch.errors import DegenerateFitError, FitError, ModelError, ShapeMismatchError
from fractomatch.mxdist.params import MxVtParams
from fractomatch.spectral.bands import BandPlan
from fractomatch.spectral.correlation import PairObservation

logger = logging.getLogger("fractomatch.matchkit")

DEFAULT_PRIOR = 0.5


class MatchModel:
    """Fitted match (f1) and non-match (f2) MxVt densities with a shared nu, prior and threshold."""

    def __init__(
        self,
        match_params: MxVtParams,
        nonmatch_params: MxVtParams,
        band_plan: BandPlan,
        k: int,
        prior_match: float = DEFAULT_PRIOR,
        threshold_logodds: float = 0.0,
        provenance: Optional[Dict[str, Any]] = None,
    ):
        self.match_params = match_params
        self.nonmatch_params = nonmatch_params
        self.band_plan = band_plan
        self.k = int(k)
        self.prior_match = float(prior_match)
        self.threshold_logodds = float(threshold_logodds)
        self.provenance = dict(provenance or {})
        self._validate()

    def _validate(self) -> None:
        a, b = self.match_params, self.nonmatch_params
        if (a.p, a.q) != (b.p, b.q):
            raise ModelError("Class parameters differ in shape", {"match": (a.p, a.q), "nonmatch": (b.p, b.q)})
        if a.nu != b.nu:
            raise ModelError("Both classes must share nu", {"match": a.nu, "nonmatch": b.nu})
        if a.q != self.k:
            raise ModelError("Model q must equal the images per surface", {"q": a.q, "k": self.k})
        if self.band_plan.p != a.p:
            raise ModelError("Band plan does not match p", {"bands": self.band_plan.p, "p": a.p})
        if not 0.0 < self.prior_match < 1.0:
            raise ModelError("Prior must lie strictly between 0 and 1", {"prior": self.prior_match})
        if not np.isfinite(self.threshold_logodds):
            raise ModelError("Threshold must be finite", {"threshold": self.threshold_logodds})

    @property
    def p(self) -> int:
        return self.match_params.p

    @property
    def q(self) -> int:
        return self.match_params.q

    @property
    def nu(self) -> float:
        return self.match_params.nu

    @property
    def separates(self) -> bool:
        """True when every band's match mean exceeds its non-match mean."""
        return bool(np.all(self.match_params.row_means > self.nonmatch_params.row_means))

    def with_prior(self, prior_match: float) -> "MatchModel":
        return MatchModel(
            self.match_params, self.nonmatch_params, self.band_plan, self.k,
            prior_match, self.threshold_logodds, self.provenance,
        )

    def with_threshold(self, threshold_logodds: float) -> "MatchModel":
        return MatchModel(
            self.match_params, self.nonmatch_params, self.band_plan, self.k,
            self.prior_match, threshold_logodds, self.provenance,
        )

    def restrict(self, columns: Sequence[int]) -> "MatchModel":
        """Model marginalised onto a consecutive run of image columns."""
        columns = list(columns)
        return MatchModel(
            self.match_params.restrict(columns),
            self.nonmatch_params.restrict(columns),
            self.band_plan,
            len(columns),
            self.prior_match,
            self.threshold_logodds,
            {**self.provenance, "columns": columns},
        )

    def check_observation(self, observation: PairObservation) -> None:
        if observation.shape != (self.p, self.q):
            raise ShapeMismatchError(
                "Observation shape does not match the model",
                {"pair_id": observation.key, "observation": observation.shape, "model": (self.p, self.q)},
            )

    def __repr__(self) -> str:
        return (
            f"MatchModel(p={self.p}, q={self.q}, nu={self.nu:g}, prior={self.prior_match:g}, "
            f"threshold={self.threshold_logodds:.6g})"
        )


def _check_training_set(match_obs: Sequence[PairObservation], nonmatch_obs: Sequence[PairObservation]) -> BandPlan:
    for name, group in (("match", match_obs), ("non-match", nonmatch_obs)):
        if len(group) < 2:
            raise FitError(f"The {name} class needs at least two observations", {"n": len(group)})
    everything = list(match_obs) + list(nonmatch_obs)
    shapes = {obs.shape for obs in everything}
    if len(shapes) != 1:
        raise ShapeMismatchError("Training observations differ in shape", {"shapes": sorted(shapes)})
    plans = {(tuple(obs.band_plan.bands), obs.band_plan.angular_sector) for obs in everything}
    if len(plans) != 1:
        raise ShapeMismatchError("Training observations use different band plans")
    return everything[0].band_plan


def _fit_class(
    name: str,
    observations: Sequence[PairObservation],
    config: FitConfig,
    allow_degenerate: bool,
) -> FitReport:
    report = fit_mxt(observations, config)
    logger.info(
        "%s class: n=%d iterations=%d converged=%s rho=%.4f",
        name, report.n_obs, report.iterations, report.converged, report.params.rho,
    )
    if report.degenerate:
        if not allow_degenerate:
            raise DegenerateFitError(f"Degenerate {name} fit", {"n": report.n_obs})
        logger.warning("Degenerate %s fit accepted", name)
    return report


def train(
    match_obs: Sequence[PairObservation],
    nonmatch_obs: Sequence[PairObservation],
    config: Optional[FitConfig] = None,
    prior: float = DEFAULT_PRIOR,
    allow_degenerate: bool = True,
    name: str = "",
) -> MatchModel:
    """
    Fit f1 on true matches and f2 on true non-matches with a common nu.

    Args:
        match_obs: Match observations (>= 2)
        nonmatch_obs: Non-match observations (>= 2)
        config: EM settings (nu shared by both classes)
        prior: Prior probability of a match
        allow_degenerate: Accept degenerate fits with a warning instead of raising
        name: Training-set identifier stored in the provenance

    Returns:
        MatchModel with threshold 0 (posterior 0.5)
    """
    config = config or FitConfig()
    plan = _check_training_set(match_obs, nonmatch_obs)

    match_report = _fit_class("match", match_obs, config, allow_degenerate)
    nonmatch_report = _fit_class("non-match", nonmatch_obs, config, allow_degenerate)

    provenance = {
        "training_set": name,
        "n_match": len(match_obs),
        "n_nonmatch": len(nonmatch_obs),
        "match_fit": match_report.summary(),
        "nonmatch_fit": nonmatch_report.summary(),
    }
    model = MatchModel(
        match_report.params,
        nonmatch_report.params,
        plan,
        k=match_report.params.q,
        prior_match=prior,
        provenance=provenance,
    )
    if not model.separates:
        raise ModelError(
            "Match means do not exceed non-match means in every band",
            {
                "match": model.match_params.row_means.tolist(),
                "nonmatch": model.nonmatch_params.row_means.tolist(),
            },
        )
    return model
