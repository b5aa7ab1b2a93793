"""Tests for the constrained MxVt EM fitter."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.optimize import minimize

from fractomatch.emfit import FitConfig, FitReport, fit_mxt, profile_loglik_rho, stack_observations
from fractomatch.errors import FitError
from fractomatch.mxdist import Ar1Matrix, MxVtParams, mxt_sample, sample_mxt_raw
from fractomatch.mxdist.densities import mxt_logpdf_batch

TRUE_SIGMA = np.array([[1.0, 0.3], [0.3, 0.5]])
TRUE_MEANS = (1.2, 0.8)


def _simulate(n, q=9, rho=0.6, nu=10.0, seed=0):
    params = MxVtParams.from_row_means(TRUE_MEANS, q, TRUE_SIGMA, rho, nu)
    return mxt_sample(params, n, seed=seed)


def _assert_valid(report):
    params = report.params
    assert report.is_monotone(1e-8)
    assert params.Sigma[0, 0] == 1.0
    assert np.all(np.linalg.eigvalsh(params.Sigma) > 0)
    assert np.ptp(params.M, axis=1).max() == 0.0
    assert abs(params.rho) < 1.0


class TestFitConfig:
    def test_defaults(self):
        config = FitConfig()
        assert config.nu == 10.0
        assert config.rho_search == (-0.99, 0.99)

    def test_rho_search_inside_unit_interval(self):
        with pytest.raises(ValidationError):
            FitConfig(rho_search=(-1.0, 0.5))

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            FitConfig(learning_rate=0.1)

    def test_nu_lower_bound(self):
        with pytest.raises(ValidationError):
            FitConfig(nu=0.5)


class TestInputChecks:
    def test_single_observation(self):
        with pytest.raises(FitError):
            fit_mxt([np.zeros((2, 3))])

    def test_not_identifiable(self, rng):
        with pytest.raises(FitError):
            fit_mxt([rng.standard_normal((4, 1)) for _ in range(2)])
        with pytest.raises(FitError):
            fit_mxt([rng.standard_normal((5, 2)) for _ in range(2)])

    def test_mixed_shapes(self, rng):
        with pytest.raises(FitError):
            stack_observations([rng.standard_normal((2, 3)), rng.standard_normal((2, 4))])

    def test_non_finite(self):
        with pytest.raises(FitError):
            stack_observations([np.full((2, 3), np.nan), np.zeros((2, 3))])


class TestFit:
    def test_constraints_and_monotone_trace(self):
        report = fit_mxt(_simulate(120, seed=1))
        _assert_valid(report)
        assert report.converged
        assert report.n_obs == 120
        assert report.loglik >= report.loglik_trace[0]

    def test_order_does_not_matter(self):
        data = _simulate(60, seed=2)
        forward = fit_mxt(data)
        backward = fit_mxt(data[::-1])
        np.testing.assert_array_equal(forward.params.M, backward.params.M)
        np.testing.assert_array_equal(forward.params.Sigma, backward.params.Sigma)
        assert forward.params.rho == backward.params.rho
        assert forward.loglik_trace == backward.loglik_trace

    def test_scale_exchange_gives_same_anchored_sigma(self):
        q, c = 9, 3.0
        omega = Ar1Matrix(q, 0.6).matrix
        M = np.repeat(np.array(TRUE_MEANS)[:, None], q, axis=1)
        plain = sample_mxt_raw(M, TRUE_SIGMA, omega, 10.0, 500, np.random.default_rng(4))
        swapped = sample_mxt_raw(M, c * TRUE_SIGMA, omega / c, 10.0, 500, np.random.default_rng(4))
        first = fit_mxt(list(plain)).params
        second = fit_mxt(list(swapped)).params
        np.testing.assert_allclose(first.Sigma, second.Sigma, atol=1e-2)
        assert first.rho == pytest.approx(second.rho, abs=1e-2)

    def test_identical_copies_flagged(self):
        X = np.array([[0.5, 0.6, 0.4], [0.2, 0.1, 0.3]])
        report = fit_mxt([X.copy() for _ in range(4)], FitConfig(max_iter=50))
        assert report.degenerate
        assert np.all(np.isfinite(report.params.Sigma))
        means = report.params.row_means
        assert np.all(means >= X.min(axis=1) - 1e-12)
        assert np.all(means <= X.max(axis=1) + 1e-12)

    def test_single_band(self):
        data = [X[:1] for X in _simulate(80, q=5, seed=6)]
        report = fit_mxt(data)
        _assert_valid(report)
        assert report.params.p == 1

    def test_rho_maximises_profile(self):
        data = _simulate(200, seed=8)
        params = fit_mxt(data, FitConfig(tol=1e-12, max_iter=5000)).params

        def profile(r):
            return profile_loglik_rho(data, params.M, params.Sigma, params.nu, r)

        coarse = np.linspace(-0.99, 0.99, 2001)
        step = coarse[1] - coarse[0]
        centre = coarse[int(np.argmax([profile(r) for r in coarse]))]
        fine = np.linspace(centre - step, centre + step, 2001)
        best = fine[int(np.argmax([profile(r) for r in fine]))]
        assert abs(best - params.rho) < 1e-4

    def test_report_issues_default_to_empty(self):
        report = fit_mxt(_simulate(40, seed=3))
        bare = FitReport(report.params, [report.loglik], 1, True, 40)
        assert bare.issues == []
        assert bare.summary()["issues"] == []

    def test_summary(self):
        report = fit_mxt(_simulate(40, seed=3))
        summary = report.summary()
        assert summary["n_obs"] == 40
        assert summary["loglik"] == report.loglik


def _negative_loglik(theta, data, nu):
    m1, m2, a, log_b, atanh_rho = theta
    lower = np.array([[1.0, 0.0], [a, np.exp(log_b)]])
    sigma = lower @ lower.T
    q = data.shape[2]
    M = np.repeat(np.array([[m1], [m2]]), q, axis=1)
    omega = Ar1Matrix(q, np.tanh(atanh_rho)).matrix
    return -float(np.sum(mxt_logpdf_batch(data, M, sigma, omega, nu)))


@pytest.mark.slow
class TestRecovery:
    def test_matches_direct_optimisation(self):
        data = np.stack(_simulate(60, q=3, seed=21))
        report = fit_mxt(list(data), FitConfig(tol=1e-14, max_iter=5000))
        start = np.array([data[:, 0].mean(), data[:, 1].mean(), 0.0, 0.0, 0.0])
        options = {"xatol": 1e-9, "fatol": 1e-12, "maxiter": 40000, "maxfev": 40000}
        direct = minimize(_negative_loglik, start, args=(data, 10.0), method="Nelder-Mead", options=options)
        direct = minimize(_negative_loglik, direct.x, args=(data, 10.0), method="Nelder-Mead", options=options)
        m1, m2, a, log_b, atanh_rho = direct.x
        assert report.loglik >= -direct.fun - 1e-6
        np.testing.assert_allclose(report.params.row_means, [m1, m2], atol=1e-3)
        assert report.params.Sigma[0, 1] == pytest.approx(a, abs=1e-3)
        assert report.params.rho == pytest.approx(np.tanh(atanh_rho), abs=1e-3)

    def test_recovers_parameters(self):
        passed = 0
        for seed in range(10):
            report = fit_mxt(_simulate(500, seed=100 + seed))
            _assert_valid(report)
            params = report.params
            if (
                np.all(np.abs(params.row_means - TRUE_MEANS) <= 0.05)
                and abs(params.Sigma[0, 1] - 0.3) <= 0.05
                and abs(params.rho - 0.6) <= 0.05
            ):
                passed += 1
        assert passed >= 9
