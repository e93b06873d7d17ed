import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from stochsearch.logconcave import (
    MLEDoesNotExist,
    evaluate_fit,
    fit_logconcave,
    profile_fit,
    profile_loglik,
    recenter_to_mean_zero,
    segment_integrals,
    segment_mass,
)
from stochsearch.model import Estimate, RegressionProblem

from oracles import slsqp_oracle


class TestSegmentIntegrals:
    @pytest.mark.parametrize("a, b", [(0.0, 0.0), (-1.0, 2.0), (3.0, -4.0), (0.5, 0.5 + 1e-9), (1.0, 1.05), (-30.0, 0.0)])
    def test_against_quadrature(self, a, b):
        i0, i_t = segment_integrals(np.array([a]), np.array([b]))
        f = lambda u: math.exp((1 - u) * a + u * b)
        assert i0[0] == pytest.approx(integrate.quad(f, 0, 1, epsabs=1e-14)[0], rel=1e-12)
        assert i_t[0] == pytest.approx(integrate.quad(lambda u: u * f(u), 0, 1, epsabs=1e-14)[0], rel=1e-11)
        assert segment_mass(np.array([a]), np.array([b]))[0] == pytest.approx(i0[0], rel=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-40, 40), st.floats(-1, 1))
    def test_continuity_across_series_branch(self, a, d):
        # integrand grows monotonically in b, so i0 must too
        i_lo = segment_integrals(np.array([a]), np.array([a + d]))[0][0]
        i_hi = segment_integrals(np.array([a]), np.array([a + d + 1e-3]))[0][0]
        assert i_hi >= i_lo * (1 - 1e-13)


class TestUniform:
    def test_unit_interval(self):
        fit = fit_logconcave([0.0, 1.0])
        np.testing.assert_allclose(fit.knots, [0.0, 1.0])
        np.testing.assert_allclose(fit.phi, [0.0, 0.0], atol=1e-8)
        assert fit.loglik == pytest.approx(0.0, abs=1e-8)
        assert fit.mean == pytest.approx(0.5, abs=1e-8)

    def test_width_two(self):
        fit = fit_logconcave([0.0, 2.0])
        np.testing.assert_allclose(fit.phi, [-math.log(2)] * 2, atol=1e-8)
        assert fit.loglik == pytest.approx(-2 * math.log(2), abs=1e-8)

    def test_two_knot_brute_force(self):
        # two-knot concave phi: any line a + s*y on [0, 2], normalized
        def loglik(s):
            a = -math.log(2.0) if s == 0 else math.log(s / math.expm1(2 * s))
            return 2 * a + 2 * s
        grid = np.linspace(-2, 2, 4001)
        best = grid[np.argmax([loglik(s) for s in grid])]
        assert best == pytest.approx(0.0, abs=1e-3)
        assert fit_logconcave([0.0, 2.0]).loglik == pytest.approx(loglik(0.0), abs=1e-8)

    def test_evaluate(self):
        fit = fit_logconcave([0.0, 1.0])
        out = evaluate_fit(fit, 0.5)
        assert out["density"] == pytest.approx(1.0, abs=1e-8)
        assert out["cdf"] == pytest.approx(0.5, abs=1e-8)
        below = evaluate_fit(fit, -0.1)
        assert below["density"] == 0.0 and below["cdf"] == 0.0
        assert evaluate_fit(fit_logconcave([0.0, 2.0]), 2.0)["cdf"] == pytest.approx(1.0, abs=1e-9)


class TestDegenerate:
    @pytest.mark.parametrize("r", [[1.0], [2.0, 2.0, 2.0]])
    def test_no_mle(self, r):
        with pytest.raises(MLEDoesNotExist):
            fit_logconcave(r)

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            fit_logconcave([0.0, np.nan, 1.0])


@pytest.fixture(scope="module")
def normal_fit():
    r = np.random.default_rng(2024).standard_normal(500)
    return r, fit_logconcave(r)


class TestNormalSample:
    def test_normalized(self, normal_fit):
        _, fit = normal_fit
        assert fit.integral == pytest.approx(1.0, abs=1e-6)
        x = np.linspace(fit.knots[0], fit.knots[-1], 200_001)
        assert integrate.trapezoid(fit.density(x), x) == pytest.approx(1.0, abs=1e-6)

    def test_concave(self, normal_fit):
        _, fit = normal_fit
        assert np.all(np.diff(fit.slopes) <= 1e-9)
        assert np.all(np.diff(fit.knots) > 0)

    def test_beats_fitted_normal(self, normal_fit):
        r, fit = normal_fit
        competitor = stats.norm(r.mean(), r.std()).logpdf(r).sum()
        assert fit.loglik >= competitor

    def test_mean_matches_sample_mean(self, normal_fit):
        # a first-order condition of the MLE: fitted mean = sample mean
        r, fit = normal_fit
        assert fit.mean / fit.integral == pytest.approx(r.mean(), abs=1e-4)

    def test_support_is_data_range(self, normal_fit):
        r, fit = normal_fit
        assert fit.knots[0] == r.min() and fit.knots[-1] == r.max()

    def test_cdf_monotone(self, normal_fit):
        _, fit = normal_fit
        F = fit.cdf(np.linspace(-5, 5, 2001))
        assert np.all(np.diff(F) >= -1e-15)
        assert F[-1] == pytest.approx(fit.integral, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_matches_generic_optimizer(seed):
    r = np.random.default_rng(seed).gamma(2.0, size=12)
    assert fit_logconcave(r, tol=1e-10).loglik == pytest.approx(slsqp_oracle(r), abs=1e-6)


def test_ties_weighted_like_repeats():
    rng = np.random.default_rng(7)
    r = np.round(rng.standard_normal(300), 1)
    fit = fit_logconcave(r)
    assert fit.integral == pytest.approx(1.0, abs=1e-6)
    assert fit.loglik == pytest.approx(np.sum(fit.log_density(r)), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-100, 100), st.floats(0.01, 100))
def test_affine_equivariance(seed, shift, scale):
    r = np.random.default_rng(seed).standard_normal(60)
    base = fit_logconcave(r)
    moved = fit_logconcave(shift + scale * r)
    np.testing.assert_allclose(moved.knots, shift + scale * base.knots, rtol=1e-9, atol=1e-9 * (1 + abs(shift)))
    np.testing.assert_allclose(moved.phi, base.phi - math.log(scale), atol=1e-6)
    assert moved.loglik == pytest.approx(base.loglik - r.size * math.log(scale), abs=1e-6)
    assert moved.mean == pytest.approx(shift * base.integral + scale * base.mean, abs=1e-6 * (1 + abs(shift) + scale))


class TestRecenter:
    def test_uniform(self):
        fit, theta = recenter_to_mean_zero(fit_logconcave([0.0, 1.0]), np.array([3.0, 0.0]), 0)
        np.testing.assert_allclose(fit.knots, [-0.5, 0.5], atol=1e-8)
        np.testing.assert_allclose(theta, [3.5, 0.0], atol=1e-8)

    def test_identity_on_centered(self):
        fit = fit_logconcave([-1.0, 1.0])
        shifted, theta = recenter_to_mean_zero(fit, np.array([2.0]), 0)
        np.testing.assert_allclose(shifted.knots, fit.knots, atol=1e-12)
        np.testing.assert_allclose(theta, [2.0], atol=1e-12)

    def test_mean_zero_and_estimate_input(self, normal_fit):
        r, fit = normal_fit
        est = Estimate(np.array([0.0, 1.0]), np.eye(2), 2, False)
        shifted, new = recenter_to_mean_zero(fit, est, 1)
        assert shifted.mean == pytest.approx(0.0, abs=1e-6)
        assert isinstance(new, Estimate)
        assert new.theta[1] == pytest.approx(1.0 + fit.mean / fit.integral)

    def test_requires_intercept(self):
        with pytest.raises(ValueError):
            recenter_to_mean_zero(fit_logconcave([0.0, 1.0]), np.zeros(1), None)


class TestProfile:
    def test_two_point(self):
        p = RegressionProblem(np.ones((2, 1)), [0.0, 1.0], intercept_col=0)
        assert profile_loglik(p, [0.0]) == pytest.approx(0.0, abs=1e-8)
        for c in (-3.0, 0.7, 12.0):
            assert profile_loglik(p, [c]) == pytest.approx(0.0, abs=1e-8)

    def test_all_equal_residuals(self):
        p = RegressionProblem(np.ones((3, 1)), [1.0, 1.0, 1.0], intercept_col=0)
        with pytest.raises(MLEDoesNotExist, match="at this eta"):
            profile_fit(p, [0.0])

    def test_far_eta_loses(self):
        wins = 0
        for seed in range(40):
            rng = np.random.default_rng(seed)
            X = np.column_stack([rng.uniform(-1, 1, 200), np.ones(200)])
            theta = np.array([1.0, -1.0])
            p = RegressionProblem(X, X @ theta + rng.standard_normal(200), intercept_col=1)
            wins += profile_loglik(p, theta) > profile_loglik(p, theta + 5.0)
        assert wins >= 38
