"""
EM fitting of the constrained matrix-variate t distribution.

Constraints: row-constant mean, Sigma[0, 0] = 1, AR(1) column correlation,
fixed degrees of freedom. Each iteration is a rho update on the observed
log-likelihood followed by one E-step and conditional M-steps for the mean
and Sigma, so the observed log-likelihood never decreases.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import minimize_scalar

from fractomatch.errors import FitError
from fractomatch.mxdist.ar1 import Ar1Matrix
from fractomatch.mxdist.densities import conditional_weights, mxt_logpdf_batch
from fractomatch.mxdist.params import MxVtParams
from fractomatch.spectral.correlation import PairObservation

logger = logging.getLogger("fractomatch.emfit")

RHO_LIMIT = 0.9999
RHO_XATOL = 1e-6

Observation = Union[np.ndarray, PairObservation]


class FitConfig(BaseModel):
    """EM settings; nu is fixed and scanned externally."""
    model_config = ConfigDict(extra="forbid")

    nu: float = Field(default=10.0, ge=1.0)
    max_iter: int = Field(default=500, ge=1)
    tol: float = Field(default=1e-8, gt=0.0)
    rho_search: Tuple[float, float] = (-0.99, 0.99)
    ridge: float = Field(default=1e-8, gt=0.0)
    slack: float = Field(default=1e-8, ge=0.0)

    @field_validator("rho_search")
    @classmethod
    def _check_rho_search(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if not (-RHO_LIMIT < lo < hi < RHO_LIMIT):
            raise ValueError(f"rho_search must lie inside (-{RHO_LIMIT}, {RHO_LIMIT}) with lo < hi")
        return float(lo), float(hi)

    @model_validator(mode="after")
    def _check_nu(self) -> "FitConfig":
        if not np.isfinite(self.nu):
            raise ValueError("nu must be finite")
        return self


class FitReport:
    """Result of one EM fit."""

    def __init__(
        self,
        params: MxVtParams,
        loglik_trace: List[float],
        iterations: int,
        converged: bool,
        n_obs: int,
        ridge_engaged: bool = False,
        degenerate: bool = False,
        issues: Optional[List[str]] = None,
    ):
        self.params = params
        self.loglik_trace = list(loglik_trace)
        self.iterations = iterations
        self.converged = converged
        self.n_obs = n_obs
        self.ridge_engaged = ridge_engaged
        self.degenerate = degenerate
        self.issues = list(issues or [])

    @property
    def loglik(self) -> float:
        return self.loglik_trace[-1]

    def is_monotone(self, slack: float = 1e-8) -> bool:
        trace = np.asarray(self.loglik_trace)
        return bool(np.all(np.diff(trace) >= -slack))

    def summary(self) -> dict:
        return {
            "n_obs": self.n_obs,
            "iterations": self.iterations,
            "converged": self.converged,
            "loglik": self.loglik,
            "ridge_engaged": self.ridge_engaged,
            "degenerate": self.degenerate,
            "issues": list(self.issues),
        }

    def __repr__(self) -> str:
        return (
            f"FitReport(n={self.n_obs}, iterations={self.iterations}, converged={self.converged}, "
            f"loglik={self.loglik:.6f}, {self.params!r})"
        )


def stack_observations(data: Sequence[Observation]) -> np.ndarray:
    """(n, p, q) array from matrices or PairObservations; shapes must agree."""
    matrices = [obs.z if isinstance(obs, PairObservation) else np.asarray(obs, dtype=np.float64) for obs in data]
    if not matrices:
        raise FitError("No observations to fit")
    shapes = {m.shape for m in matrices}
    if len(shapes) != 1:
        raise FitError("Observations do not share one shape", {"shapes": sorted(shapes)})
    stacked = np.stack(matrices).astype(np.float64)
    if stacked.ndim != 3:
        raise FitError("Observations must be p x q matrices", {"shape": stacked.shape})
    if not np.all(np.isfinite(stacked)):
        raise FitError("Observations contain non-finite values")
    return stacked


def _canonical_order(data: np.ndarray) -> np.ndarray:
    flat = data.reshape(data.shape[0], -1)
    order = np.lexsort(flat.T[::-1])
    return data[order]


def _loglik(data: np.ndarray, M: np.ndarray, Sigma: np.ndarray, rho: float, nu: float) -> float:
    omega = Ar1Matrix(data.shape[2], rho).matrix
    return float(np.sum(mxt_logpdf_batch(data, M, Sigma, omega, nu)))


def profile_loglik_rho(
    data: Sequence[Observation],
    M: np.ndarray,
    Sigma: np.ndarray,
    nu: float,
    rho: float,
) -> float:
    """Sum of MxVt log-densities with Omega = AR1(q, rho) and everything else held fixed."""
    stacked = stack_observations(data)
    return _loglik(stacked, np.asarray(M, dtype=np.float64), np.asarray(Sigma, dtype=np.float64), rho, nu)


def _apply_ridge(Sigma: np.ndarray, ridge: float) -> Tuple[np.ndarray, bool]:
    values, vectors = np.linalg.eigh(Sigma)
    if values.min() >= ridge:
        return Sigma, False
    values = np.maximum(values, ridge)
    floored = (vectors * values) @ vectors.T
    return _anchor(floored), True


def _anchor(Sigma: np.ndarray) -> np.ndarray:
    anchored = Sigma / Sigma[0, 0]
    anchored = 0.5 * (anchored + anchored.T)
    anchored[0, 0] = 1.0
    return anchored


def _initial_values(data: np.ndarray, config: FitConfig) -> Tuple[np.ndarray, np.ndarray, float, bool]:
    n, p, q = data.shape
    m = data.mean(axis=(0, 2))
    residual = data - m[:, None]
    pooled = np.sum(residual @ np.swapaxes(residual, -1, -2), axis=0) / (n * q)
    pooled = 0.5 * (pooled + pooled.T)

    ridge_engaged = False
    if pooled[0, 0] <= 0.0:
        pooled = pooled + config.ridge * np.eye(p)
        ridge_engaged = True
    Sigma, floored = _apply_ridge(_anchor(pooled), config.ridge)

    denominator = float(np.sum(residual * residual))
    if denominator > 0.0:
        rho = float(np.sum(residual[:, :, 1:] * residual[:, :, :-1])) / denominator
    else:
        rho = 0.0
    lo, hi = config.rho_search
    rho = float(np.clip(rho, lo, hi))
    return m, Sigma, rho, ridge_engaged or floored


def _update_mean(data: np.ndarray, weights: np.ndarray, omega_inverse: np.ndarray) -> np.ndarray:
    ones = np.ones(data.shape[2])
    projected = data @ (omega_inverse @ ones) / float(ones @ omega_inverse @ ones)
    A = np.sum(weights, axis=0)
    b = np.sum(weights @ projected[:, :, None], axis=0)[:, 0]
    return np.linalg.solve(A, b)


def _update_sigma(weights: np.ndarray, nu: float) -> np.ndarray:
    """Maximise (n k / 2) ln|Sigma| - tr(Sigma A) / 2 subject to Sigma[0, 0] = 1."""
    n, p, _ = weights.shape
    kappa = nu + p - 1
    A = np.sum(weights, axis=0)
    A = 0.5 * (A + A.T)
    if p == 1:
        schur = A[0, 0]
    else:
        schur = A[0, 0] - A[0, 1:] @ np.linalg.solve(A[1:, 1:], A[1:, 0])
    lam = n * kappa - schur
    shifted = A.copy()
    shifted[0, 0] += lam
    Sigma = n * kappa * np.linalg.inv(shifted)
    Sigma = 0.5 * (Sigma + Sigma.T)
    Sigma[0, 0] = 1.0
    return Sigma


def fit_mxt(data: Sequence[Observation], config: FitConfig = None) -> FitReport:
    """
    Maximum-likelihood fit of MxVt(M, Sigma, AR1(rho), nu) with nu fixed.

    Args:
        data: n >= 2 matrices (or PairObservations) of one shape p x q, n q > p
        config: EM settings

    Returns:
        FitReport with anchored, row-constant parameters

    Raises:
        FitError: too few observations, mixed shapes, or non-identifiable input
    """
    config = config or FitConfig()
    stacked = stack_observations(data)
    n, p, q = stacked.shape
    if n < 2:
        raise FitError("At least two observations are needed", {"n": n})
    if q < 2:
        raise FitError("At least two columns are needed for the AR(1) structure", {"q": q})
    if n * q <= p:
        raise FitError("Mean and covariance are not identifiable (n*q <= p)", {"n": n, "p": p, "q": q})

    stacked = _canonical_order(stacked)
    degenerate = bool(np.all(stacked == stacked[0]))
    if degenerate:
        logger.warning("All %d observations are identical; fit is degenerate", n)

    nu = config.nu
    m, Sigma, rho, ridge_engaged = _initial_values(stacked, config)
    M = np.repeat(m[:, None], q, axis=1)
    current = _loglik(stacked, M, Sigma, rho, nu)
    trace = [current]
    issues: List[str] = []
    converged = False
    iterations = 0

    for iteration in range(1, config.max_iter + 1):
        iterations = iteration
        previous = current
        state = (M, Sigma, rho)

        result = minimize_scalar(
            lambda r: -_loglik(stacked, M, Sigma, r, nu),
            bounds=config.rho_search,
            method="bounded",
            options={"xatol": RHO_XATOL},
        )
        if np.isfinite(result.fun) and -result.fun >= current:
            rho = float(result.x)
            current = -float(result.fun)

        omega_inverse = Ar1Matrix(q, rho).inverse
        weights = conditional_weights(stacked, M, Sigma, omega_inverse, nu)
        m = _update_mean(stacked, weights, omega_inverse)
        M = np.repeat(m[:, None], q, axis=1)
        weights = conditional_weights(stacked, M, Sigma, omega_inverse, nu)
        Sigma = _update_sigma(weights, nu)
        Sigma, floored = _apply_ridge(Sigma, config.ridge)
        if floored and not ridge_engaged:
            logger.warning("Sigma eigenvalue floor engaged at iteration %d", iteration)
        ridge_engaged = ridge_engaged or floored

        current = _loglik(stacked, M, Sigma, rho, nu)
        if current < previous - config.slack:
            message = f"log-likelihood decreased at iteration {iteration}: {previous:.12g} -> {current:.12g}"
            logger.warning(message)
            issues.append(message)
            M, Sigma, rho = state
            current = previous
            break

        trace.append(current)
        logger.debug("iteration %d loglik %.12g rho %.6f", iteration, current, rho)
        if abs(current - previous) <= config.tol * max(1.0, abs(previous)):
            converged = True
            break

    if not converged and not issues:
        logger.warning("EM stopped after %d iterations without converging", iterations)

    params = MxVtParams(M, Sigma, rho, nu)
    return FitReport(
        params=params,
        loglik_trace=trace,
        iterations=iterations,
        converged=converged,
        n_obs=n,
        ridge_engaged=ridge_engaged,
        degenerate=degenerate,
        issues=issues,
    )
