"""Predictor assembly, conditional likelihood, score and fitting."""

import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import digamma

import garnn
from garnn import (DispersionOverflowError, DomainError, FitError, GarnnSpec,
                   NetSpec, NetWeights, ParamVector, SeriesFrame,
                   conditional_loglik, estimate_gamma_dispersion,
                   estimate_sigma2, eta_at, fit, profile_k, score)
from garnn.optimize import OptimizerControls


def poisson_frame(n=60, seed=0, covariate=True):
    rng = np.random.default_rng(seed)
    y = rng.poisson(2.0, n).astype(float)
    if covariate:
        X = np.column_stack([np.ones(n),
                             np.cos(2 * np.pi * np.arange(1, n + 1) / 12)])
    else:
        X = np.ones((n, 1))
    return SeriesFrame.from_series(y, X)


def random_theta(spec, rng, scale=0.4):
    return ParamVector(rng.uniform(-0.5, 0.5, spec.n_covariates),
                       NetWeights(rng.uniform(-scale, scale,
                                              (spec.net.nodes, spec.net.lags)),
                                  rng.uniform(-scale, scale, spec.net.nodes)))


class TestEta:
    def test_intercept_only(self):
        frame = poisson_frame(covariate=False)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 2), 1)
        theta = ParamVector([0.7], NetWeights(np.zeros((2, 1)), np.zeros(2)))
        for t in (2, 10, 60):
            assert eta_at(spec, frame, theta, t) == pytest.approx(0.7, abs=1e-15)

    def test_no_nodes_is_linear_predictor(self):
        frame = poisson_frame()
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 2)
        theta = ParamVector([0.3, -0.2], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        for t in (2, 17, 40):
            expected = frame.X[t - 1] @ theta.coef
            assert eta_at(spec, frame, theta, t) == pytest.approx(expected, abs=1e-15)

    def test_matches_scalar_recomputation(self):
        rng = np.random.default_rng(4)
        frame = poisson_frame(seed=2)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(3, 2), 2)
        theta = random_theta(spec, rng)
        for t in (4, 30, 60):
            raw = float(frame.X[t - 1] @ theta.coef)
            for i in range(2):
                g = sum(theta.net.input_weights[i, j - 1] * frame.z[t - 1 - j]
                        for j in range(1, 4))
                raw += theta.net.output_weights[i] * math.tanh(g)
            assert eta_at(spec, frame, theta, t) == pytest.approx(raw, abs=1e-12)

    def test_out_of_range(self):
        frame = poisson_frame()
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(2, 1), 2)
        theta = random_theta(spec, np.random.default_rng(0))
        with pytest.raises(DomainError):
            eta_at(spec, frame, theta, 2)  # conditioning is 2, first valid t is 3
        with pytest.raises(DomainError):
            eta_at(spec, frame, theta, 61)


class TestConditionalLoglik:
    def test_empty_sum(self):
        y = np.array([1.0, 2.0, 0.0])
        frame = SeriesFrame.from_series(y, np.ones((3, 1)))
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 1), 1, cond_len=3)
        theta = ParamVector([0.0], NetWeights([[0.3]], [0.2]))
        assert conditional_loglik(spec, frame, theta) == 0.0

    def test_all_zero_counts(self):
        y = np.array([1.0, 0.0, 0.0, 0.0])
        frame = SeriesFrame.from_series(y, np.ones((4, 1)))
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 1)
        theta = ParamVector([0.0], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        assert conditional_loglik(spec, frame, theta) == pytest.approx(-3.0, abs=1e-14)

    def test_matches_per_term_oracle(self):
        rng = np.random.default_rng(8)
        frame = poisson_frame(seed=5)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(2, 3), 2)
        theta = random_theta(spec, rng)
        mus = garnn.fitted_values(spec, frame, theta)
        oracle = sum(garnn.Poisson().loglik_term(yv, mv)
                     for yv, mv in zip(frame.y[2:], mus))
        assert conditional_loglik(spec, frame, theta) == pytest.approx(oracle,
                                                                       abs=1e-10)

    def test_node_permutation_invariance(self):
        rng = np.random.default_rng(9)
        frame = poisson_frame(seed=6)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(2, 4), 2)
        theta = random_theta(spec, rng)
        perm = rng.permutation(4)
        permuted = ParamVector(theta.coef,
                               NetWeights(theta.net.input_weights[perm],
                                          theta.net.output_weights[perm]))
        assert conditional_loglik(spec, frame, theta) == pytest.approx(
            conditional_loglik(spec, frame, permuted), rel=1e-14)

    def test_domain_error_surfaces(self):
        y = np.array([1.0, 2.0, 3.0, 1.0])
        frame = SeriesFrame.from_series(y, np.ones((4, 1)))
        spec = GarnnSpec.create(garnn.Gamma(), NetSpec(1, 0), 1)
        theta = ParamVector([-1.0], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        with pytest.raises(DomainError):
            conditional_loglik(spec, frame, theta)  # reciprocal eta <= 0


def family_instances():
    return [
        (garnn.Poisson(), None,
         lambda rng, n: rng.poisson(2.5, n).astype(float)),
        (garnn.Binomial(6), None,
         lambda rng, n: rng.binomial(6, 0.45, n).astype(float)),
        (garnn.NegativeBinomial(1.5), None,
         lambda rng, n: rng.negative_binomial(1.5, 0.4, n).astype(float)),
        (garnn.Normal(), None,
         lambda rng, n: rng.normal(0.5, 1.5, n)),
        (garnn.Gamma(), None,
         lambda rng, n: rng.gamma(2.0, 1.2, n)),
        (garnn.Gamma(), garnn.Log(),
         lambda rng, n: rng.gamma(2.0, 1.2, n)),
    ]


class TestScore:
    def test_zero_residuals_give_zero_score(self):
        # saturated single-coefficient model: eta_t = log(y_t) exactly
        y = np.array([2.0, 3.0, 1.0, 4.0])
        X = np.log(y).reshape(-1, 1)
        frame = SeriesFrame.from_series(y, X)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 1)
        theta = ParamVector([1.0], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        assert_allclose(score(spec, frame, theta), np.zeros(1), atol=1e-12)

    def test_glm_block_matches_textbook_score(self):
        # with no nodes the score is X'(y - mu) for the canonical pair
        rng = np.random.default_rng(10)
        frame = poisson_frame(seed=3)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 2)
        theta = ParamVector([0.2, -0.3], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        mu = np.exp(frame.X[1:] @ theta.coef)
        expected = frame.X[1:].T @ (frame.y[1:] - mu)
        assert_allclose(score(spec, frame, theta), expected, rtol=1e-12)

    @pytest.mark.parametrize("family,link,draw", family_instances(),
                             ids=["poisson", "binomial", "negbinomial",
                                  "normal", "gamma-reciprocal", "gamma-log"])
    def test_matches_finite_differences(self, family, link, draw):
        rng = np.random.default_rng(hash(family.name) % 1000)
        worst = 0.0
        for rep in range(10):
            n = 50
            y = draw(rng, n)
            X = np.column_stack([np.ones(n), rng.uniform(-0.5, 0.5, n)])
            frame = SeriesFrame.from_series(y, X)
            nodes = int(rng.integers(0, 3))
            spec = GarnnSpec.create(family, NetSpec(int(rng.integers(1, 3)), nodes),
                                    2, link=link)
            if family.name == "gamma" and spec.link.name == "reciprocal":
                theta = ParamVector([0.8, 0.02],
                                    NetWeights(rng.uniform(-0.4, 0.4,
                                                           (nodes, spec.net.lags)),
                                               rng.uniform(-0.03, 0.03, nodes)))
            else:
                theta = random_theta(spec, rng)
            analytic = score(spec, frame, theta)
            numeric = garnn.finite_diff_grad(
                lambda x: conditional_loglik(spec, frame,
                                             ParamVector.unflatten(x, spec)),
                theta.flatten(), step=1e-6)
            rel = np.max(np.abs(analytic - numeric)) / max(
                1.0, np.max(np.abs(analytic)))
            worst = max(worst, rel)
        assert worst < 1e-6


class TestFit:
    def test_stationary_init_returns_immediately(self):
        y = np.array([2.0, 3.0, 1.0, 4.0])
        X = np.log(y).reshape(-1, 1)
        frame = SeriesFrame.from_series(y, X)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 1)
        init = ParamVector([1.0], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        res = fit(spec, frame, init=init)
        assert res.iterations <= 1
        assert_allclose(res.theta.coef, [1.0], atol=1e-9)

    def test_intercept_poisson_recovery(self):
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 1)
        gen = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 1)
        truth = ParamVector([math.log(2.0)],
                            NetWeights(np.zeros((0, 1)), np.zeros(0)))
        frame = garnn.simulate(gen, truth, n=2000, burn_in=0, seed=77)
        res = fit(spec, frame)
        # closed-form oracle: intercept-only Poisson MLE is log(mean)
        y_eff = frame.y[1:]
        assert res.theta.coef[0] == pytest.approx(math.log(np.mean(y_eff)),
                                                  abs=1e-7)
        se = 1.0 / math.sqrt(np.sum(y_eff))  # inverse Fisher information
        assert abs(res.theta.coef[0] - math.log(2.0)) < 3 * se + 1e-9

    def test_aic_identity(self):
        frame = poisson_frame(seed=13)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 1), 2)
        res = fit(spec, frame, restarts=2)
        assert res.aic == -2.0 * res.loglik + 2.0 * res.n_params_total
        assert res.n_params_total == 2 + 1 * (1 + 1)

    def test_normal_dispersion_counted_in_aic(self):
        rng = np.random.default_rng(3)
        n = 80
        y = rng.normal(1.0, 2.0, n)
        frame = SeriesFrame.from_series(y, np.ones((n, 1)))
        spec = GarnnSpec.create(garnn.Normal(), NetSpec(1, 0), 1)
        res = fit(spec, frame)
        assert res.n_params_total == 2  # intercept + sigma^2
        assert res.dispersion == pytest.approx(np.mean((y[1:] - np.mean(y[1:])) ** 2),
                                               rel=1e-6)

    def test_too_few_observations(self):
        y = np.array([1.0, 2.0, 1.0, 3.0])
        X = np.ones((4, 1))
        frame = SeriesFrame.from_series(y, X)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 3), 1)
        with pytest.raises(FitError):
            fit(spec, frame)

    def test_monotone_objective_trace(self):
        frame = poisson_frame(seed=21)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 2), 2)
        res = fit(spec, frame, restarts=1,
                  controls=OptimizerControls(max_iterations=200))
        objective = res.optimizer.trace.objective
        assert all(b <= a + 1e-12 for a, b in zip(objective, objective[1:]))

    def test_glm_equivalence_small(self):
        # independent IRLS oracle, written from the textbook update
        rng = np.random.default_rng(31)
        n = 150
        X = np.column_stack([np.ones(n), rng.uniform(-1, 1, n)])
        y = rng.poisson(np.exp(0.4 + 0.9 * X[:, 1])).astype(float)
        frame = SeriesFrame.from_series(y, X)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 2)
        res = fit(spec, frame)

        Xe, ye = X[1:], y[1:]
        beta = np.zeros(2)
        for _ in range(60):
            eta = Xe @ beta
            mu = np.exp(eta)
            w = mu  # (dmu/deta)^2 / V for the log link
            z = eta + (ye - mu) / mu
            beta_new = np.linalg.solve(Xe.T @ (w[:, None] * Xe), Xe.T @ (w * z))
            if np.max(np.abs(beta_new - beta)) < 1e-13:
                beta = beta_new
                break
            beta = beta_new
        assert np.max(np.abs(res.theta.coef - beta)) < 1e-6


class TestDispersion:
    def test_sigma2_trivials(self):
        assert estimate_sigma2([1.0, -1.0]) == pytest.approx(1.0)
        assert estimate_sigma2(np.zeros(5)) == 0.0
        with pytest.raises(DomainError):
            estimate_sigma2([])

    def test_sigma2_is_loglik_maximizer(self):
        # golden-section search over the normal log-likelihood in sigma^2
        rng = np.random.default_rng(17)
        resid = rng.normal(0.0, 1.7, 200)

        def negll(s2):
            return 0.5 * len(resid) * math.log(2 * math.pi * s2) + \
                np.sum(resid ** 2) / (2 * s2)

        lo, hi = 1e-3, 50.0
        inv_phi = (math.sqrt(5) - 1) / 2
        a, b = lo, hi
        c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
        for _ in range(200):
            if negll(c) < negll(d):
                b = d
            else:
                a = c
            c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
        golden = (a + b) / 2
        assert estimate_sigma2(resid) == pytest.approx(golden, abs=1e-8)

    def test_gamma_dispersion_bracket_exists(self):
        # the left side decreases from +inf toward 0, so roots exist for
        # any positive right-hand side
        xs = np.logspace(-6, 6, 25)
        g = np.log(xs) - digamma(xs)
        assert np.all(np.diff(g) < 0)
        assert g[0] > 1e5 and g[-1] < 1e-5

    def test_gamma_dispersion_matches_bisection_oracle(self):
        # rhs = 1: bisect log(x) - digamma(x) - 1 directly
        lo, hi = 1e-8, 10.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if math.log(mid) - digamma(mid) - 1.0 > 0:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        nu = estimate_gamma_dispersion(1.0, 2)  # rhs = 2*1/2 = 1
        assert 1.0 / nu == pytest.approx(root, rel=1e-9)

    def test_gamma_dispersion_residual(self):
        for dev, n_eff in [(3.0, 10), (0.04, 25), (40.0, 7)]:
            nu = estimate_gamma_dispersion(dev, n_eff)
            x = 1.0 / nu
            assert abs(math.log(x) - digamma(x) - 2.0 * dev / n_eff) < 1e-10

    def test_zero_deviance_overflows(self):
        with pytest.raises(DispersionOverflowError):
            estimate_gamma_dispersion(0.0, 10)


class TestProfileK:
    def test_single_grid_point(self):
        frame = poisson_frame(seed=2)
        spec = GarnnSpec.create(garnn.NegativeBinomial(1.0), NetSpec(1, 0), 2)
        k_hat, res = profile_k(spec, frame, [2.5], restarts=1)
        assert k_hat == 2.5
        assert res.loglik < 0

    def test_requires_negative_binomial(self):
        frame = poisson_frame(seed=2)
        spec = GarnnSpec.create(garnn.Poisson(), NetSpec(1, 0), 2)
        with pytest.raises(DomainError):
            profile_k(spec, frame, [1.0])

    def test_matches_independent_per_k_maximizer(self):
        # brute-force profile curve: maximize the likelihood at every grid
        # point with scipy's optimizer and compare the argmax location
        from scipy.optimize import minimize

        gen = GarnnSpec.create(garnn.NegativeBinomial(2.0), NetSpec(1, 0), 1)
        truth = ParamVector([math.log(3.0)], NetWeights(np.zeros((0, 1)), np.zeros(0)))
        frame = garnn.simulate(gen, truth, n=600, burn_in=0, seed=5)
        spec = GarnnSpec.create(garnn.NegativeBinomial(1.0), NetSpec(1, 0), 1)
        grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0]
        k_hat, _ = profile_k(spec, frame, grid, restarts=1)

        def profile_ll(k):
            spec_k = dataclasses.replace(spec, family=garnn.NegativeBinomial(k))
            out = minimize(
                lambda b: -conditional_loglik(
                    spec_k, frame,
                    ParamVector(b, NetWeights(np.zeros((0, 1)), np.zeros(0)))),
                x0=np.array([1.0]), method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-12})
            return -out.fun

        curve = [profile_ll(k) for k in grid]
        best = grid[int(np.argmax(curve))]
        idx_hat, idx_best = grid.index(k_hat), grid.index(best)
        assert abs(idx_hat - idx_best) <= 1
