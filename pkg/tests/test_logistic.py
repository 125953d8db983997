import numpy as np
import pytest

from curemix import (
    EPANECHNIKOV,
    SingularDesignError,
    fit_fractional_logistic,
    phi,
    sigmoid,
    silverman_bandwidth,
    trim_by_index_density,
)


def irls_logistic(design, responses, tol=1e-12, max_iter=500):
    """Independent iteratively-reweighted least-squares oracle."""
    gamma = np.zeros(design.shape[1])
    for _ in range(max_iter):
        eta = design @ gamma
        p = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(p * (1.0 - p), 1e-12)
        target = eta + (responses - p) / w
        wx = design * w[:, None]
        new = np.linalg.solve(design.T @ wx, wx.T @ target)
        if np.max(np.abs(new - gamma)) < tol:
            return new
        gamma = new
    return gamma


def bernoulli_objective(design, responses, gamma, trim=None):
    p = np.clip(sigmoid(design @ gamma), 1e-12, 1 - 1e-12)
    ll = responses * np.log(p) + (1 - responses) * np.log(1 - p)
    return float(np.sum(ll if trim is None else trim * ll))


class TestSigmoid:
    def test_center(self):
        assert sigmoid(0.0) == 0.5
        assert phi is sigmoid

    def test_complement_identity(self, rng):
        u = rng.uniform(-30, 30, 1000)
        assert np.max(np.abs(sigmoid(u) - (1.0 - sigmoid(-u)))) < 1e-15

    def test_extreme_arguments_stable(self):
        hi = sigmoid(700.0)
        lo = sigmoid(-700.0)
        assert np.isfinite(hi) and np.isfinite(lo)
        assert abs(hi - 1.0) <= 1e-300
        assert 0.0 <= lo < 1e-300
        assert np.all(np.isfinite(sigmoid(np.array([-745.0, 745.0]))))


class TestFractionalLogistic:
    def test_intercept_only_half_responses(self):
        design = np.ones((20, 1))
        fit = fit_fractional_logistic(design, np.full(20, 0.5))
        assert fit.converged
        assert fit.gamma[0] == pytest.approx(0.0, abs=1e-12)

    def test_intercept_only_closed_form(self):
        design = np.ones((40, 1))
        responses = np.full(40, 0.75)
        fit = fit_fractional_logistic(design, responses)
        assert fit.gamma[0] == pytest.approx(np.log(3.0), abs=1e-10)

    @pytest.mark.parametrize("seed", range(50))
    def test_binary_matches_irls_oracle(self, seed):
        rng = np.random.default_rng([606, seed])
        n, p = rng.integers(40, 120), rng.integers(1, 4)
        design = np.column_stack([np.ones(n), rng.standard_normal((n, p))])
        truth = rng.uniform(-1, 1, p + 1)
        responses = (rng.random(n) < sigmoid(design @ truth)).astype(float)
        if responses.min() == responses.max():
            responses[0] = 1.0 - responses[0]
        fit = fit_fractional_logistic(design, responses)
        oracle = irls_logistic(design, responses)
        assert np.max(np.abs(fit.gamma - oracle)) < 1e-8

    def test_local_maximum_against_random_cloud(self, rng):
        n = 80
        design = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        responses = rng.uniform(0.05, 0.95, n)
        fit = fit_fractional_logistic(design, responses)
        best = bernoulli_objective(design, responses, fit.gamma)
        cloud = fit.gamma + 0.2 * rng.standard_normal((1000, 3))
        values = [bernoulli_objective(design, responses, g) for g in cloud]
        assert best >= max(values)

    def test_gradient_small_at_optimum(self, rng):
        n = 60
        design = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        responses = rng.uniform(0.1, 0.9, n)
        fit = fit_fractional_logistic(design, responses)
        assert fit.converged
        probs = sigmoid(design @ fit.gamma)
        grad = design.T @ (responses - probs)
        assert np.max(np.abs(grad)) < 1e-8

    def test_column_rescaling_equivariance(self, rng):
        n = 100
        design = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        responses = rng.uniform(0.1, 0.9, n)
        fit = fit_fractional_logistic(design, responses)
        scaled = design.copy()
        scaled[:, 1] *= 4.0
        fit_scaled = fit_fractional_logistic(scaled, responses)
        assert fit_scaled.gamma[1] == pytest.approx(fit.gamma[1] / 4.0, abs=1e-8)
        p0 = sigmoid(design @ fit.gamma)
        p1 = sigmoid(scaled @ fit_scaled.gamma)
        assert np.max(np.abs(p0 - p1)) < 1e-8

    def test_zero_trim_weights_drop_subjects(self, rng):
        n = 50
        design = np.column_stack([np.ones(n), rng.standard_normal(n)])
        responses = rng.uniform(0.1, 0.9, n)
        fit_base = fit_fractional_logistic(design, responses)
        junk_design = np.vstack([design, [[1.0, 50.0], [1.0, -50.0]]])
        junk_resp = np.concatenate([responses, [1.0, 0.0]])
        trim = np.concatenate([np.ones(n), [0.0, 0.0]])
        fit_trim = fit_fractional_logistic(junk_design, junk_resp, trim_weights=trim)
        assert np.max(np.abs(fit_trim.gamma - fit_base.gamma)) < 1e-10

    def test_neg_hessian_symmetric_psd(self, rng):
        n = 60
        design = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
        fit = fit_fractional_logistic(design, rng.uniform(0, 1, n))
        h = fit.neg_hessian
        assert np.allclose(h, h.T)
        assert np.all(np.linalg.eigvalsh(h) >= -1e-10)

    def test_separation_flagged(self):
        x = np.linspace(-2, 2, 30)
        design = np.column_stack([np.ones(30), x])
        responses = (x > 0).astype(float)
        with pytest.warns(RuntimeWarning, match="separation"):
            fit = fit_fractional_logistic(design, responses)
        assert fit.separation
        assert not fit.converged

    def test_rank_deficient_design_raises(self, rng):
        n = 30
        col = rng.standard_normal(n)
        design = np.column_stack([np.ones(n), col, 2.0 * col])
        with pytest.raises(SingularDesignError):
            fit_fractional_logistic(design, rng.uniform(0, 1, n))

    def test_responses_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            fit_fractional_logistic(np.ones((3, 1)), np.array([0.2, 1.2, 0.4]))


class TestTrimByIndexDensity:
    def test_zero_threshold_keeps_all(self, rng):
        vals = rng.standard_normal(40)
        assert np.all(trim_by_index_density(vals, 0.5, threshold=0.0) == 1.0)

    def test_threshold_above_max_density_drops_all(self, rng):
        vals = rng.standard_normal(40)
        assert np.all(trim_by_index_density(vals, 0.5, threshold=10.0) == 0.0)

    def test_matches_direct_kde_oracle(self):
        rng = np.random.default_rng(17)
        vals = rng.standard_normal(100)
        b = silverman_bandwidth(vals)
        c = 0.01
        # direct double-loop kernel density estimate
        dens = np.array([
            np.mean([EPANECHNIKOV.evaluate((vj - vi) / b) / b for vj in vals])
            for vi in vals
        ])
        expected = (dens >= c).astype(float)
        got = trim_by_index_density(vals, b, threshold=c)
        assert np.array_equal(got, expected)
        # interior is kept, the far tail is down-weighted
        assert np.all(got[np.abs(vals) < 1.5] == 1.0)
        extreme = np.abs(vals) > 3.0
        if extreme.any():
            assert np.all(got[extreme] == 0.0)
