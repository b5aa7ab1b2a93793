"""
Seeded MxVt sampling through the normal-Wishart construction.

S ~ W_p(nu + p - 1, Sigma^-1), then X | S ~ N_{p,q}(M, S^-1, Omega).
"""

from typing import List, Optional

import numpy as np
from scipy import stats

from fractomatch.errors import DistributionError
from fractomatch.mxdist.params import MxVtParams


def sample_mxt_raw(
    M: np.ndarray,
    Sigma: np.ndarray,
    Omega: np.ndarray,
    nu: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Draw n matrices with an arbitrary column scale Omega.

    Returns:
        (n, p, q) array
    """
    M = np.asarray(M, dtype=np.float64)
    p, q = M.shape
    if n < 0:
        raise DistributionError("Sample size must be >= 0", {"n": n})
    if n == 0:
        return np.empty((0, p, q))
    df = nu + p - 1
    if df < p:
        raise DistributionError("Wishart degrees of freedom below dimension", {"df": df, "p": p})

    try:
        sigma_inv = np.linalg.inv(np.asarray(Sigma, dtype=np.float64))
        omega_factor = np.linalg.cholesky(np.asarray(Omega, dtype=np.float64))
    except np.linalg.LinAlgError as e:
        raise DistributionError("Sampling scales must be positive definite") from e

    precisions = stats.wishart(df=df, scale=sigma_inv).rvs(size=n, random_state=rng)
    precisions = np.asarray(precisions, dtype=np.float64).reshape(n, p, p)
    noise = rng.standard_normal((n, p, q))

    factors = np.linalg.cholesky(precisions)
    row_factors = np.swapaxes(np.linalg.inv(factors), -1, -2)
    return M + row_factors @ noise @ omega_factor.T


def mxt_sample(params: MxVtParams, n: int, seed: Optional[int] = None) -> List[np.ndarray]:
    """n independent draws from MxVt(params), reproducible under seed."""
    rng = np.random.default_rng(seed)
    draws = sample_mxt_raw(params.M, params.Sigma, params.Omega, params.nu, n, rng)
    return [draw for draw in draws]
