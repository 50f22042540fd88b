"""Estimator tests: closed forms, solver contracts, and frozen fixtures.

The adversarial-training fixtures were produced by an offline exhaustive
grid/ternary search over the convex objective; their objective values are
embedded as literals and the solver must reproduce them.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from advreg import (
    BiasVarianceTerms,
    SolverError,
    adv_train_fit,
    adv_train_objective,
    bias_variance_terms,
    lasso_fit,
    lasso_objective,
    min_norm_fit,
    projector_decomposition,
    ridge_fit,
)
from advreg.datamodels import equicorrelated_sigma
from advreg.norms import INF


class TestProjectorDecomposition:
    def test_ranks(self):
        rng = np.random.default_rng(40)
        assert projector_decomposition(rng.standard_normal((20, 50))).rank == 20
        assert projector_decomposition(rng.standard_normal((50, 20))).rank == 20
        X = rng.standard_normal((30, 10))
        X = np.hstack([X, X[:, :4]])  # duplicated columns
        assert projector_decomposition(X).rank == 10

    def test_projectors_match_dense_algebra(self):
        rng = np.random.default_rng(41)
        X = rng.standard_normal((15, 40))
        dec = projector_decomposition(X)
        Phi = dec.Phi
        assert_allclose(Phi, Phi.T, atol=1e-12)
        assert_allclose(Phi @ Phi, Phi, atol=1e-10)
        assert_allclose(dec.Phi + dec.Pi, np.eye(40), atol=1e-12)
        v = rng.standard_normal(40)
        assert_allclose(dec.apply_phi(v), Phi @ v, rtol=0, atol=1e-10)
        assert_allclose(dec.apply_pi(v), v - Phi @ v, rtol=0, atol=1e-10)
        # row-space projector reproduces X
        assert_allclose(X @ Phi, X, atol=1e-10)

    def test_sample_covariance_and_pinv(self):
        rng = np.random.default_rng(42)
        X = rng.standard_normal((25, 12))
        dec = projector_decomposition(X)
        S = X.T @ X / 25
        assert_allclose(dec.Sigma_hat, S, atol=1e-12)
        assert_allclose(dec.Sigma_hat_pinv, np.linalg.pinv(S), rtol=1e-9)
        v = rng.standard_normal(12)
        assert_allclose(dec.apply_sigma_hat_pinv(v), np.linalg.pinv(S) @ v, rtol=1e-9)
        assert_allclose(dec.trace_sigma_hat_pinv(), np.trace(np.linalg.pinv(S)), rtol=1e-9)
        eigs = dec.sigma_hat_pinv_eigenvalues()
        assert eigs.size == 12
        assert_allclose(eigs, np.sort(1.0 / np.linalg.eigvalsh(S)), rtol=1e-9)

    def test_min_norm_solution_matches_pinv(self):
        rng = np.random.default_rng(43)
        X = rng.standard_normal((10, 30))
        y = rng.standard_normal(10)
        dec = projector_decomposition(X)
        assert_allclose(dec.min_norm_solution(y), np.linalg.pinv(X) @ y, rtol=1e-9, atol=1e-12)


class TestMinNorm:
    def test_interpolates_when_overparameterized(self):
        rng = np.random.default_rng(50)
        X = rng.standard_normal((12, 40))
        y = rng.standard_normal(12)
        fit = min_norm_fit(X, y)
        assert_allclose(X @ fit.beta_hat, y, rtol=0, atol=1e-9)
        assert fit.estimator == "min_norm"
        assert fit.diagnostics.objective < 1e-18

    def test_smallest_norm_among_interpolators(self):
        rng = np.random.default_rng(51)
        X = rng.standard_normal((12, 40))
        y = rng.standard_normal(12)
        beta = min_norm_fit(X, y).beta_hat
        dec = projector_decomposition(X)
        for _ in range(20):
            other = beta + dec.apply_pi(rng.standard_normal(40))
            assert_allclose(X @ other, y, atol=1e-8)
            assert np.linalg.norm(other) >= np.linalg.norm(beta)

    def test_matches_lstsq_when_underparameterized(self):
        rng = np.random.default_rng(52)
        X = rng.standard_normal((40, 12))
        y = rng.standard_normal(40)
        fit = min_norm_fit(X, y)
        ref = np.linalg.lstsq(X, y, rcond=None)[0]
        assert_allclose(fit.beta_hat, ref, rtol=1e-9)
        assert fit.diagnostics.residual < 1e-10

    def test_noise_decomposition_identity(self):
        # beta_hat = Phi beta + pinv(X) eps, exactly, for y = X beta + eps
        rng = np.random.default_rng(53)
        X = rng.standard_normal((18, 45))
        beta = rng.standard_normal(45)
        eps = rng.standard_normal(18)
        fit = min_norm_fit(X, X @ beta + eps)
        dec = projector_decomposition(X)
        expected = dec.apply_phi(beta) + (1.0 / 18) * dec.apply_sigma_hat_pinv(X.T @ eps)
        assert_allclose(fit.beta_hat, expected, rtol=1e-8, atol=1e-10)

    def test_zero_design(self):
        fit = min_norm_fit(np.zeros((5, 7)), np.ones(5))
        assert_allclose(fit.beta_hat, np.zeros(7))
        assert "rank-zero" in fit.diagnostics.note


class TestRidge:
    def test_identity_design_fixture(self):
        X = np.eye(2)
        y = np.array([1.0, 0.0])
        fit = ridge_fit(X, y, 0.5)
        assert_allclose(fit.beta_hat, [0.5, 0.0], rtol=1e-12, atol=1e-15)

    def test_primal_dual_agree(self):
        rng = np.random.default_rng(60)
        X = rng.standard_normal((20, 55))
        y = rng.standard_normal(20)
        fit = ridge_fit(X, y, 0.3)  # dual path (m > n)
        direct = np.linalg.solve(X.T @ X + 20 * 0.3 * np.eye(55), X.T @ y)
        assert_allclose(fit.beta_hat, direct, rtol=1e-9)
        assert fit.diagnostics.residual < 1e-9

    def test_zero_penalty_is_min_norm(self):
        rng = np.random.default_rng(61)
        X = rng.standard_normal((10, 25))
        y = rng.standard_normal(10)
        assert_allclose(ridge_fit(X, y, 0.0).beta_hat, min_norm_fit(X, y).beta_hat, rtol=1e-12)

    def test_norm_shrinks_with_penalty(self):
        rng = np.random.default_rng(62)
        X = rng.standard_normal((30, 12))
        y = rng.standard_normal(30)
        norms = [np.linalg.norm(ridge_fit(X, y, d).beta_hat) for d in (0.0, 0.1, 1.0, 10.0, 1e4)]
        assert all(a >= b for a, b in zip(norms, norms[1:]))
        assert norms[-1] < 1e-3 * norms[0]

    def test_rejects_negative_penalty(self):
        with pytest.raises(ValueError):
            ridge_fit(np.eye(2), np.ones(2), -0.1)


class TestLasso:
    def test_orthogonal_design_soft_threshold(self):
        X = np.sqrt(3.0) * np.eye(3)
        y = np.sqrt(3.0) * np.array([1.0, 0.5, -0.2])
        fit = lasso_fit(X, y, 0.4)
        assert_allclose(fit.beta_hat, [0.8, 0.3, 0.0], rtol=1e-10, atol=1e-12)
        assert fit.diagnostics.residual <= 1e-8

    def test_stationarity_on_random_problems(self):
        rng = np.random.default_rng(70)
        for n, m in [(40, 25), (25, 60)]:
            X = rng.standard_normal((n, m))
            beta = np.zeros(m)
            beta[: m // 5] = rng.standard_normal(m // 5)
            y = X @ beta + 0.1 * rng.standard_normal(n)
            fit = lasso_fit(X, y, 0.2, tol=1e-9)
            assert fit.diagnostics.residual <= 1e-9
            # convexity: no random perturbation improves the objective
            base = lasso_objective(X, y, fit.beta_hat, 0.2)
            assert_allclose(fit.diagnostics.objective, base, rtol=1e-12)
            for _ in range(50):
                trial = fit.beta_hat + 1e-3 * rng.standard_normal(m)
                assert lasso_objective(X, y, trial, 0.2) >= base - 1e-12

    def test_large_penalty_gives_zero(self):
        rng = np.random.default_rng(71)
        X = rng.standard_normal((30, 10))
        y = rng.standard_normal(30)
        thresh = 2.0 / 30 * np.max(np.abs(X.T @ y))
        fit = lasso_fit(X, y, 1.01 * thresh)
        assert_allclose(fit.beta_hat, np.zeros(10), atol=1e-12)
        assert np.any(lasso_fit(X, y, 0.9 * thresh).beta_hat != 0.0)

    def test_solver_error_carries_best_iterate(self):
        rng = np.random.default_rng(72)
        X = rng.standard_normal((20, 40))
        y = rng.standard_normal(20)
        with pytest.raises(SolverError) as info:
            lasso_fit(X, y, 0.05, tol=1e-16, max_sweeps=3)
        assert info.value.best is not None
        assert info.value.best.beta_hat.shape == (40,)


ONE_POINT = (np.array([[1.0]]), np.array([1.0]))
# X, y, delta, {attack order p: (objective, minimizer or None)}
OVERDET = (
    np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
    np.array([1.0, 0.5, 1.2]),
    0.4,
    {
        INF: (0.3414, np.array([0.85, 0.35])),
        2.0: (0.21401527500128834, np.array([0.75461, 0.44539])),
        1.0: (0.1644, np.array([0.7, 0.5])),
    },
)


class TestAdvTrain:
    @pytest.mark.parametrize("p", [1.0, 2.0, INF])
    def test_single_point_small_penalty(self, p):
        X, y = ONE_POINT
        fit = adv_train_fit(X, y, 0.5, p, seed=3)
        assert_allclose(fit.diagnostics.objective, 0.25, rtol=1e-6)
        assert_allclose(fit.beta_hat, [1.0], rtol=1e-3)

    @pytest.mark.parametrize("p", [1.0, 2.0, INF])
    def test_single_point_zero_certificate(self, p):
        X, y = ONE_POINT
        fit = adv_train_fit(X, y, 2.0, p, seed=3)
        assert fit.beta_hat[0] == 0.0
        assert fit.diagnostics.objective == 1.0
        assert "zero-certificate" in fit.diagnostics.note

    def test_three_point_scalar_fixture(self):
        X = np.array([[1.0], [2.0], [-1.0]])
        y = np.array([2.0, 3.0, 0.5])
        fit = adv_train_fit(X, y, 0.7, 2.0, seed=5)
        assert_allclose(fit.diagnostics.objective, 3.4657387580302506, rtol=1e-6)
        assert_allclose(fit.beta_hat, [0.781585], rtol=1e-3)

    @pytest.mark.parametrize("p", [INF, 2.0, 1.0])
    def test_overdetermined_fixtures(self, p):
        X, y, delta, oracle = OVERDET
        target, minimizer = oracle[p]
        fit = adv_train_fit(X, y, delta, p, seed=7)
        assert fit.diagnostics.objective <= target * (1.0 + 1e-3)
        assert fit.diagnostics.objective >= target * (1.0 - 1e-4)
        assert_allclose(fit.beta_hat, minimizer, atol=5e-3)

    def test_interpolating_fixture(self):
        X = np.eye(2)
        y = np.array([1.0, 0.5])
        for p, target in [(INF, 0.2025), (2.0, 0.1125)]:
            fit = adv_train_fit(X, y, 0.3, p, seed=9)
            assert_allclose(fit.diagnostics.objective, target, rtol=1e-4)

    def test_zero_penalty_is_min_norm(self):
        rng = np.random.default_rng(80)
        X = rng.standard_normal((8, 20))
        y = rng.standard_normal(8)
        fit = adv_train_fit(X, y, 0.0, 2.0)
        assert_allclose(fit.beta_hat, min_norm_fit(X, y).beta_hat, rtol=1e-12)

    def test_objective_is_convex(self):
        rng = np.random.default_rng(81)
        X = rng.standard_normal((12, 7))
        y = rng.standard_normal(12)
        for p in (1.0, 1.5, 2.0, INF):
            for _ in range(50):
                a = rng.standard_normal(7)
                b = rng.standard_normal(7)
                mid = adv_train_objective(X, y, (a + b) / 2, 0.6, p)
                avg = (adv_train_objective(X, y, a, 0.6, p) + adv_train_objective(X, y, b, 0.6, p)) / 2
                assert mid <= avg + 1e-12 * (1.0 + avg)

    @pytest.mark.parametrize("p", [INF, 2.0, 1.0])
    def test_local_and_baseline_optimality(self, p):
        rng = np.random.default_rng(82)
        X = rng.standard_normal((15, 6))
        y = X @ rng.standard_normal(6) + 0.3 * rng.standard_normal(15)
        delta = 0.25
        fit = adv_train_fit(X, y, delta, p, seed=11)
        val = fit.diagnostics.objective
        assert_allclose(val, adv_train_objective(X, y, fit.beta_hat, delta, p), rtol=1e-12)
        for baseline in (min_norm_fit(X, y).beta_hat, ridge_fit(X, y, delta).beta_hat, np.zeros(6)):
            assert val <= adv_train_objective(X, y, baseline, delta, p) * (1.0 + 1e-9)
        scale = max(np.max(np.abs(fit.beta_hat)), 0.1)
        for _ in range(200):
            trial = fit.beta_hat + 1e-3 * scale * rng.standard_normal(6)
            assert adv_train_objective(X, y, trial, delta, p) >= val * (1.0 - 1e-4)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(83)
        X = rng.standard_normal((10, 14))
        y = rng.standard_normal(10)
        a = adv_train_fit(X, y, 0.3, 2.0, seed=21)
        b = adv_train_fit(X, y, 0.3, 2.0, seed=21)
        assert np.array_equal(a.beta_hat, b.beta_hat)

    def test_rejects_negative_budget(self):
        with pytest.raises(ValueError):
            adv_train_fit(*ONE_POINT, -0.5, 2.0)


class TestBiasVariance:
    def test_matches_pinv_based_formulas(self):
        # independent route: write both noise averages through pinv(X) directly
        rng = np.random.default_rng(90)
        n, m = 25, 40
        X = rng.standard_normal((n, m))
        beta = rng.standard_normal(m)
        Sigma, _, _ = equicorrelated_sigma(m, 0.3)
        sigma2 = 0.7
        terms = bias_variance_terms(X, beta, sigma2, Sigma)
        P = np.linalg.pinv(X)
        Phi = P @ X
        bias_vec = (np.eye(m) - Phi) @ beta
        assert_allclose(terms.bias_risk, bias_vec @ Sigma @ bias_vec, rtol=1e-9)
        assert_allclose(terms.variance_risk, sigma2 * np.trace(P.T @ Sigma @ P), rtol=1e-9)
        assert_allclose(terms.bias_norm_sq, float((Phi @ beta) @ (Phi @ beta)), rtol=1e-9)
        assert_allclose(terms.variance_norm_sq, sigma2 * np.trace(P @ P.T), rtol=1e-9)
        assert_allclose(terms.expected_risk, terms.bias_risk + terms.variance_risk + sigma2, rtol=1e-12)
        assert_allclose(terms.expected_norm_sq, terms.bias_norm_sq + terms.variance_norm_sq, rtol=1e-12)

    def test_structured_covariance_agrees_with_dense(self):
        from advreg.datamodels import EquicorrelatedModel, realize_truth

        truth = realize_truth(EquicorrelatedModel(m=30, rho=0.4, r2=2.0, sigma2=1.0), seed=4)
        rng = np.random.default_rng(91)
        X, _ = truth.sample_points(20, rng)
        dense = bias_variance_terms(X, truth.beta, truth.sigma2, truth.Sigma)
        structured = bias_variance_terms(X, truth.beta, truth.sigma2, truth.cov)
        assert_allclose(structured.expected_risk, dense.expected_risk, rtol=1e-10)
        assert_allclose(structured.variance_risk, dense.variance_risk, rtol=1e-10)

    def test_monte_carlo_confirms_noise_average(self):
        rng = np.random.default_rng(92)
        n, m = 30, 50
        X = rng.standard_normal((n, m))
        beta = rng.standard_normal(m) / np.sqrt(m)
        sigma2 = 0.5
        Sigma = np.eye(m)
        dec = projector_decomposition(X)
        terms = bias_variance_terms(X, beta, sigma2, Sigma, decomposition=dec)
        reps = 4000
        risks = np.empty(reps)
        norms = np.empty(reps)
        for k in range(reps):
            eps = np.sqrt(sigma2) * rng.standard_normal(n)
            bh = min_norm_fit(X, X @ beta + eps, decomposition=dec).beta_hat
            err = bh - beta
            risks[k] = err @ err + sigma2
            norms[k] = bh @ bh
        for sample, predicted in [(risks, terms.expected_risk), (norms, terms.expected_norm_sq)]:
            se = sample.std(ddof=1) / np.sqrt(reps)
            assert abs(sample.mean() - predicted) < 4.0 * se
