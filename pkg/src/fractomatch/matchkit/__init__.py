"""
Two-class match model: training, scoring, calibration and model files.
"""

from fractomatch.matchkit.calibration import calibrate_threshold
from fractomatch.matchkit.model import MatchModel, train
from fractomatch.matchkit.persistence import load_model, save_model
from fractomatch.matchkit.report import write_report
from fractomatch.matchkit.scoring import (
    classify,
    classify_subset,
    likelihood_ratio,
    posterior_match,
    probability_to_logodds,
    score_many,
)

__all__ = [
    "MatchModel",
    "train",
    "posterior_match",
    "classify",
    "classify_subset",
    "likelihood_ratio",
    "score_many",
    "probability_to_logodds",
    "calibrate_threshold",
    "save_model",
    "load_model",
    "write_report",
]
