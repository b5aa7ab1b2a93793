"""
Matrix-variate normal and t distributions with AR(1) column structure.
"""

from fractomatch.mxdist.ar1 import Ar1Matrix, ar1_build
from fractomatch.mxdist.densities import (
    conditional_weights,
    mxn_logpdf,
    mxt_logpdf,
    mxt_logpdf_batch,
    wishart_conditional,
)
from fractomatch.mxdist.params import MxVtParams
from fractomatch.mxdist.sampling import mxt_sample, sample_mxt_raw
from fractomatch.mxdist.special import multigamma_ln

__all__ = [
    "Ar1Matrix",
    "ar1_build",
    "MxVtParams",
    "multigamma_ln",
    "mxn_logpdf",
    "mxt_logpdf",
    "mxt_logpdf_batch",
    "conditional_weights",
    "wishart_conditional",
    "mxt_sample",
    "sample_mxt_raw",
]
