"""
fractomatch - Fracture-surface matching from banded spectral correlations

Compares base and tip fracture-surface topographies through Fisher-z
transformed band correlations of their amplitude spectra and classifies
pairs as match / non-match with two matrix-variate t densities.
"""

__version__ = "0.1.0"

from fractomatch.config import RunConfig
from fractomatch.matchkit import MatchModel, classify, posterior_match, train
from fractomatch.spectral import BandPlan, PairObservation

__all__ = [
    "RunConfig",
    "BandPlan",
    "PairObservation",
    "MatchModel",
    "train",
    "posterior_match",
    "classify",
    "__version__",
]
