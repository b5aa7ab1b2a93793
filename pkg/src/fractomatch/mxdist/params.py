"""
Parameters of the constrained matrix-variate t distribution.
"""

from typing import Optional, Sequence

import numpy as np

from fractomatch.errors import DistributionError
from fractomatch.mxdist.ar1 import Ar1Matrix

ROW_CONSTANT_TOL = 1e-12


class MxVtParams:
    """
    MxVt(M, Sigma, Omega = AR1(rho), nu) with a row-constant mean.

    Sigma is the p x p row scale, Omega the q x q AR(1) column correlation.
    Fitted parameters carry Sigma[0, 0] = 1 (see is_anchored); un-anchored
    values are accepted so that scale-equivalent data can be simulated.
    """

    def __init__(self, M: np.ndarray, Sigma: np.ndarray, rho: float, nu: float):
        self.M = np.array(M, dtype=np.float64)
        self.Sigma = np.array(Sigma, dtype=np.float64)
        self.rho = float(rho)
        self.nu = float(nu)
        self._validate()
        self.M.setflags(write=False)
        self.Sigma.setflags(write=False)
        self._omega = Ar1Matrix(self.q, self.rho)

    def _validate(self) -> None:
        if self.M.ndim != 2:
            raise DistributionError("M must be a p x q matrix", {"shape": self.M.shape})
        p, q = self.M.shape
        if self.Sigma.shape != (p, p):
            raise DistributionError("Sigma must be p x p", {"p": p, "shape": self.Sigma.shape})
        if not np.all(np.isfinite(self.M)) or not np.all(np.isfinite(self.Sigma)):
            raise DistributionError("Parameters must be finite")
        if not np.allclose(self.Sigma, self.Sigma.T, rtol=0.0, atol=1e-12):
            raise DistributionError("Sigma must be symmetric")
        try:
            np.linalg.cholesky(self.Sigma)
        except np.linalg.LinAlgError as e:
            raise DistributionError("Sigma is not positive definite") from e
        if not np.isfinite(self.rho) or abs(self.rho) >= 1.0:
            raise DistributionError("rho must satisfy |rho| < 1", {"rho": self.rho})
        if not np.isfinite(self.nu) or self.nu < 1.0:
            raise DistributionError("nu must be >= 1", {"nu": self.nu})
        spread = np.ptp(self.M, axis=1)
        if np.any(spread > ROW_CONSTANT_TOL * np.maximum(1.0, np.abs(self.M).max(axis=1))):
            raise DistributionError("Every row of M must be constant", {"row_spread": spread.tolist()})

    @classmethod
    def from_row_means(
        cls,
        row_means: Sequence[float],
        q: int,
        Sigma: np.ndarray,
        rho: float,
        nu: float,
    ) -> "MxVtParams":
        means = np.asarray(row_means, dtype=np.float64).reshape(-1, 1)
        return cls(np.repeat(means, q, axis=1), Sigma, rho, nu)

    @property
    def p(self) -> int:
        return self.M.shape[0]

    @property
    def q(self) -> int:
        return self.M.shape[1]

    @property
    def row_means(self) -> np.ndarray:
        return self.M[:, 0].copy()

    @property
    def omega(self) -> Ar1Matrix:
        return self._omega

    @property
    def Omega(self) -> np.ndarray:
        return self._omega.matrix

    @property
    def is_anchored(self) -> bool:
        """True when Sigma[0, 0] == 1 exactly."""
        return bool(self.Sigma[0, 0] == 1.0)

    def restrict(self, columns: Sequence[int]) -> "MxVtParams":
        """Marginal on a consecutive run of columns: M and Omega restricted, same Sigma, rho, nu."""
        omega = self._omega.restrict(columns)
        columns = list(columns)
        return MxVtParams(self.M[:, columns], self.Sigma, omega.rho, self.nu)

    def replace(
        self,
        M: Optional[np.ndarray] = None,
        Sigma: Optional[np.ndarray] = None,
        rho: Optional[float] = None,
        nu: Optional[float] = None,
    ) -> "MxVtParams":
        return MxVtParams(
            self.M if M is None else M,
            self.Sigma if Sigma is None else Sigma,
            self.rho if rho is None else rho,
            self.nu if nu is None else nu,
        )

    def __repr__(self) -> str:
        return (
            f"MxVtParams(p={self.p}, q={self.q}, row_means={np.round(self.row_means, 4).tolist()}, "
            f"rho={self.rho:.4f}, nu={self.nu:g})"
        )
