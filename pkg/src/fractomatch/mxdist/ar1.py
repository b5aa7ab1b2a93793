"""
AR(1) column correlation matrices with analytic inverse and log-determinant.
"""

import numpy as np
from scipy.linalg import toeplitz

from fractomatch.errors import DistributionError


class Ar1Matrix:
    """Omega[i, j] = rho ** |i - j| (unit diagonal)."""

    def __init__(self, q: int, rho: float):
        if q < 1:
            raise DistributionError("AR(1) dimension must be >= 1", {"q": q})
        if not np.isfinite(rho) or abs(rho) >= 1.0:
            raise DistributionError("AR(1) parameter must satisfy |rho| < 1", {"rho": rho})
        self.q = int(q)
        self.rho = float(rho)

    @property
    def matrix(self) -> np.ndarray:
        return toeplitz(self.rho ** np.arange(self.q))

    @property
    def logdet(self) -> float:
        return (self.q - 1) * float(np.log1p(-self.rho * self.rho))

    @property
    def inverse(self) -> np.ndarray:
        """Tridiagonal inverse: diagonal (1, 1 + rho^2, ..., 1), off-diagonal -rho, over 1 - rho^2."""
        q, rho = self.q, self.rho
        if q == 1:
            return np.ones((1, 1))
        diag = np.full(q, 1.0 + rho * rho)
        diag[0] = diag[-1] = 1.0
        inv = np.diag(diag) + np.diag(np.full(q - 1, -rho), 1) + np.diag(np.full(q - 1, -rho), -1)
        return inv / (1.0 - rho * rho)

    def restrict(self, columns) -> "Ar1Matrix":
        """Sub-matrix on a consecutive run of indices; again AR(1) with the same rho."""
        columns = list(columns)
        if not columns or any(b - a != 1 for a, b in zip(columns, columns[1:])):
            raise DistributionError("AR(1) restriction needs consecutive indices", {"columns": columns})
        if columns[0] < 0 or columns[-1] >= self.q:
            raise DistributionError("Column index out of range", {"columns": columns, "q": self.q})
        return Ar1Matrix(len(columns), self.rho)

    def __repr__(self) -> str:
        return f"Ar1Matrix(q={self.q}, rho={self.rho:.6g})"


def ar1_build(q: int, rho: float) -> Ar1Matrix:
    return Ar1Matrix(q, rho)
