"""
Matrix-variate normal and t log-densities.

All determinants come from Cholesky factors. For X ~ MxVt(M, Sigma, Omega, nu)
with Y = L_Sigma^-1 (X - M) L_Omega^-T the density kernel is
|I_p + Y Y^T|^(-(nu + p + q - 1) / 2), evaluated as |I_q + Y^T Y| when q < p.
"""

from typing import Tuple

import numpy as np
from scipy.linalg import solve_triangular

from fractomatch.errors import DistributionError
from fractomatch.mxdist.params import MxVtParams
from fractomatch.mxdist.special import multigamma_ln

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_PI = float(np.log(np.pi))


def _cholesky(matrix: np.ndarray, name: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise DistributionError(f"{name} is not positive definite", {"shape": np.shape(matrix)}) from e


def _logdet_from_cholesky(factor: np.ndarray) -> np.ndarray:
    return 2.0 * np.sum(np.log(np.diagonal(factor, axis1=-2, axis2=-1)), axis=-1)


def _whiten(X: np.ndarray, M: np.ndarray, ls: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """L_Sigma^-1 (X - M) L_Omega^-T for a single matrix or a stack."""
    ls_inv = solve_triangular(ls, np.eye(ls.shape[0]), lower=True)
    lo_inv = solve_triangular(lo, np.eye(lo.shape[0]), lower=True)
    return ls_inv @ (X - M) @ lo_inv.T


def _check_shapes(X: np.ndarray, M: np.ndarray, Sigma: np.ndarray, Omega: np.ndarray) -> None:
    p, q = M.shape
    if X.shape[-2:] != (p, q):
        raise DistributionError("X and M shapes differ", {"X": X.shape, "M": M.shape})
    if Sigma.shape != (p, p) or Omega.shape != (q, q):
        raise DistributionError(
            "Covariance shapes do not match M",
            {"M": M.shape, "Sigma": Sigma.shape, "Omega": Omega.shape},
        )


def mxn_logpdf(X: np.ndarray, M: np.ndarray, Sigma: np.ndarray, Omega: np.ndarray) -> float:
    """
    Matrix-variate normal log-density N_{p,q}(M, Sigma, Omega).

    Equal to the pq-variate normal log-density of vec(X) with covariance
    kron(Omega, Sigma).
    """
    X, M = np.asarray(X, dtype=np.float64), np.asarray(M, dtype=np.float64)
    Sigma, Omega = np.asarray(Sigma, dtype=np.float64), np.asarray(Omega, dtype=np.float64)
    _check_shapes(X, M, Sigma, Omega)
    p, q = M.shape
    ls = _cholesky(Sigma, "Sigma")
    lo = _cholesky(Omega, "Omega")
    Y = _whiten(X, M, ls, lo)
    quad = float(np.sum(Y * Y))
    return float(
        -0.5 * quad
        - 0.5 * p * q * LOG_2PI
        - 0.5 * p * _logdet_from_cholesky(lo)
        - 0.5 * q * _logdet_from_cholesky(ls)
    )


def mxt_log_normaliser(p: int, q: int, nu: float, logdet_sigma: float, logdet_omega: float) -> float:
    return (
        multigamma_ln((nu + p + q - 1) / 2.0, p)
        - 0.5 * p * q * LOG_PI
        - multigamma_ln((nu + p - 1) / 2.0, p)
        - 0.5 * p * logdet_omega
        - 0.5 * q * logdet_sigma
    )


def mxt_logpdf_batch(
    data: np.ndarray,
    M: np.ndarray,
    Sigma: np.ndarray,
    Omega: np.ndarray,
    nu: float,
) -> np.ndarray:
    """
    MxVt log-densities of a stack of matrices with an arbitrary column scale Omega.

    Args:
        data: (n, p, q) array
        M: p x q mean
        Sigma: p x p row scale
        Omega: q x q column scale
        nu: degrees of freedom

    Returns:
        (n,) array of log-densities
    """
    data = np.asarray(data, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    Sigma, Omega = np.asarray(Sigma, dtype=np.float64), np.asarray(Omega, dtype=np.float64)
    if data.ndim != 3:
        raise DistributionError("Expected an (n, p, q) stack", {"shape": data.shape})
    _check_shapes(data, M, Sigma, Omega)
    if not np.isfinite(nu) or nu <= 0:
        raise DistributionError("nu must be positive", {"nu": nu})
    p, q = M.shape

    ls = _cholesky(Sigma, "Sigma")
    lo = _cholesky(Omega, "Omega")
    Y = _whiten(data, M, ls, lo)
    if q < p:
        inner = np.eye(q) + np.swapaxes(Y, -1, -2) @ Y
    else:
        inner = np.eye(p) + Y @ np.swapaxes(Y, -1, -2)
    try:
        logdet_inner = _logdet_from_cholesky(np.linalg.cholesky(inner))
    except np.linalg.LinAlgError as e:
        raise DistributionError("Determinant argument is not positive definite") from e

    const = mxt_log_normaliser(p, q, nu, float(_logdet_from_cholesky(ls)), float(_logdet_from_cholesky(lo)))
    return const - 0.5 * (nu + p + q - 1) * logdet_inner


def mxt_logpdf(X: np.ndarray, params: MxVtParams) -> float:
    """Log-density of one p x q matrix under MxVt(M, Sigma, AR1(rho), nu)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (params.p, params.q):
        raise DistributionError(
            "X shape does not match the parameters", {"X": X.shape, "params": (params.p, params.q)}
        )
    return float(mxt_logpdf_batch(X[None, :, :], params.M, params.Sigma, params.Omega, params.nu)[0])


def conditional_weights(
    data: np.ndarray,
    M: np.ndarray,
    Sigma: np.ndarray,
    omega_inverse: np.ndarray,
    nu: float,
) -> np.ndarray:
    """E[S | X_i] = (nu + p + q - 1) [(X_i - M) Omega^-1 (X_i - M)^T + Sigma]^-1 for a stack."""
    p, q = M.shape
    R = np.asarray(data, dtype=np.float64) - M
    inner = R @ omega_inverse @ np.swapaxes(R, -1, -2) + Sigma
    inner = 0.5 * (inner + np.swapaxes(inner, -1, -2))
    try:
        factor = np.linalg.cholesky(inner)
    except np.linalg.LinAlgError as e:
        raise DistributionError("Conditional Wishart scale is not positive definite") from e
    eye = np.broadcast_to(np.eye(p), inner.shape)
    factor_inv = np.linalg.solve(factor, eye)
    scale = np.swapaxes(factor_inv, -1, -2) @ factor_inv
    return (nu + p + q - 1) * scale


def wishart_conditional(X: np.ndarray, params: MxVtParams) -> Tuple[float, np.ndarray]:
    """
    S | X ~ W_p(nu + p + q - 1, [(X - M) Omega^-1 (X - M)^T + Sigma]^-1).

    Returns:
        (df, scale); E[S | X] = df * scale
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (params.p, params.q):
        raise DistributionError(
            "X shape does not match the parameters", {"X": X.shape, "params": (params.p, params.q)}
        )
    df = params.nu + params.p + params.q - 1
    weights = conditional_weights(X[None, :, :], params.M, params.Sigma, params.omega.inverse, params.nu)
    return float(df), weights[0] / df
