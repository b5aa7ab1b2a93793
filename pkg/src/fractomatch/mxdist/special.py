"""
Special functions used by the matrix-variate densities.
"""

import numpy as np
from scipy import special

from fractomatch.errors import DistributionError


def multigamma_ln(a: float, p: int) -> float:
    """
    ln Gamma_p(a) = p(p-1)/4 ln(pi) + sum_{j=1..p} ln Gamma(a + (1-j)/2).

    Raises:
        DistributionError: a <= (p - 1) / 2 (pole) or p < 1
    """
    if p < 1:
        raise DistributionError("Multivariate gamma needs p >= 1", {"p": p})
    if not np.isfinite(a) or a <= (p - 1) / 2.0:
        raise DistributionError("Multivariate gamma argument at or below its pole", {"a": a, "p": p})
    return float(special.multigammaln(a, p))
