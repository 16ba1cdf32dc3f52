import math

import numpy as np
import pytest

from core.covariance import (
    covariance_report, cross_tail_check, fluctuation_scan, predicted_cross_matrix, predicted_slope, sample_cov,
)
from core.errors import RegressionError
from core.models import ParamClass, ParamLabel, TailProfile
from core.simulate import simulate_sre
from core.tails import diagonal_spec_from_alphas, hill_plateau, tail_profile

from tests.conftest import make_path, make_spec


def _profile(alphas):
    return TailProfile(alpha=list(alphas), param_class=ParamClass(labels={ParamLabel.GENERAL}))


class TestSampleCov:
    def test_iid_noise(self):
        path = simulate_sre(make_spec(np.zeros((2, 2))), 200_000, burnin=0, seed=1)
        np.testing.assert_allclose(sample_cov(path), np.eye(2), atol=0.05)

    def test_diagonal_fixed_point(self):
        spec = make_spec(np.diag([0.5, 0.6]), C=[[1.0, 0.3], [0.3, 1.0]])
        gamma = sample_cov(simulate_sre(spec, 200_000, burnin=10_000, seed=2))
        expected = np.array([[1 / 0.75, 0.3 / 0.7], [0.3 / 0.7, 1 / 0.64]])
        np.testing.assert_allclose(gamma, expected, rtol=0.05)

    def test_single_row(self):
        x = np.array([[2.0, -3.0]])
        np.testing.assert_array_equal(sample_cov(make_path(x)), np.outer(x[0], x[0]))

    def test_symmetric(self):
        gamma = sample_cov(make_path(np.random.default_rng(3).standard_normal((100, 3))))
        np.testing.assert_array_equal(gamma, gamma.T)


class TestCrossTails:
    def test_predicted_matrix(self):
        pred = predicted_cross_matrix(_profile([3.0, 4.0]))
        np.testing.assert_allclose(pred, [[1.5, 12 / 7], [12 / 7, 2.0]])

    def test_common_driver_products(self):
        # X_1 = U^{-1/3}, X_2 = U^{-1/4}: every product is exactly Pareto with index a_i a_j / (a_i + a_j)
        u = np.random.default_rng(4).uniform(size=100_000)
        path = make_path(np.column_stack([u ** (-1 / 3), u ** (-1 / 4)]))
        report = cross_tail_check(path, _profile([3.0, 4.0]), k=1000)
        assert len(report.checks) == 3
        assert all(check.within_band for check in report.checks)
        assert report.alpha_cross_emp[0, 1] == pytest.approx(12 / 7, abs=0.2)

    @pytest.mark.slow
    def test_simulated_cross_product(self):
        spec = diagonal_spec_from_alphas([3.0, 4.0])
        x = simulate_sre(spec, 500_000, burnin=10_000, seed=16).data
        assert hill_plateau(np.abs(x[:, 0] * x[:, 1])).alpha == pytest.approx(12 / 7, abs=0.6)

    def test_profile_length(self):
        with pytest.raises(ValueError):
            cross_tail_check(make_path(np.ones((10, 2))), _profile([3.0]), k=2)


class TestFluctuation:
    @pytest.mark.parametrize("alpha_ij, expected", [(1.5, -1 / 3), (3.0, -0.5), (2.0, -0.5), (0.8, 0.25),
                                                     (math.inf, -0.5)])
    def test_predicted_slope(self, alpha_ij, expected):
        assert predicted_slope(alpha_ij) == pytest.approx(expected)

    def test_single_point_grid(self, diag_spec):
        with pytest.raises(RegressionError):
            fluctuation_scan(diag_spec, tail_profile(diag_spec), [1000])

    def test_small_samples_rejected(self, diag_spec):
        with pytest.raises(ValueError):
            fluctuation_scan(diag_spec, tail_profile(diag_spec), [100, 1000])
        with pytest.raises(ValueError):
            fluctuation_scan(diag_spec, tail_profile(diag_spec), [1000, 2000], reps=10)

    @pytest.mark.slow
    def test_light_tails_follow_clt_rate(self, diag_spec):
        fits = fluctuation_scan(diag_spec, tail_profile(diag_spec), [1000, 4000, 16000, 64000], reps=100,
                                seed=5, burnin=1000)
        assert [(f.i, f.j) for f in fits] == [(0, 0), (0, 1), (1, 1)]
        for fit in fits:
            assert fit.predicted_slope == -0.5
            assert fit.slope == pytest.approx(-0.5, abs=0.15)
            assert len(fit.points) == 4

    @pytest.mark.slow
    def test_heavy_tail_rate(self, alpha3_spec):
        # alpha_11 = 3 / 2: spread shrinks like n^{1/1.5 - 1}
        fits = fluctuation_scan(alpha3_spec, tail_profile(alpha3_spec), [2000, 8000, 32000, 128000], reps=100,
                                seed=17, burnin=10_000)
        assert len(fits) == 1
        assert fits[0].alpha_cross == pytest.approx(1.5)
        assert fits[0].predicted_slope == pytest.approx(-1 / 3)
        assert fits[0].slope == pytest.approx(-1 / 3, abs=0.15)


def test_report_with_spec(diag_spec):
    path = simulate_sre(diag_spec, 20_000, burnin=1000, seed=6)
    report = covariance_report(path, diag_spec, tail_profile(diag_spec), k=200)
    np.testing.assert_allclose(report.gamma_stationary, np.diag([1 / 0.75, 1 / 0.64]), atol=1e-12)
    data = report.to_dict()
    assert set(data) >= {"gamma", "gamma_stationary", "alpha_cross_pred", "alpha_cross_emp", "checks"}


def test_report_without_stationary_covariance():
    spec = make_spec(1.2 * np.eye(2))
    path = make_path(np.random.default_rng(7).standard_normal((100, 2)))
    report = covariance_report(path, spec)
    assert report.gamma_stationary is None
    assert "alpha_cross_emp" not in report.to_dict()
