import math

import numpy as np
import pytest

from chainvol import garchx as g
from chainvol.errors import ValidationError
from chainvol.garchx import ArmaGarchXParams, FitConfig, ModelSpec


def garch_params(**kw):
    base = dict(mu=0.0, alpha0=0.05, alpha1=0.10, beta=0.85, nu=8.0, xi=1.0)
    base.update(kw)
    return ArmaGarchXParams(**base)


class TestFilter:
    def test_iid_reduction(self):
        rng = np.random.default_rng(0)
        y = rng.normal(0.3, 1.0, size=200)
        params = garch_params(mu=0.3, alpha0=2.0, alpha1=0.0, beta=0.0)
        spec = ModelSpec(0, 0, 0, "normal")
        u, sigma2 = g.filter_model(y, None, params, spec)
        assert np.allclose(u, y - 0.3)
        assert np.allclose(sigma2, 2.0)

    def test_hand_unrolled_length_five(self):
        # ARMA(1,1)-GARCH(1,1), recursion unrolled term by term
        y = np.array([0.1, -0.2, 0.05, 0.3, -0.1])
        params = garch_params(mu=0.01, phi=[0.5], theta=[0.3], alpha0=0.02, alpha1=0.1, beta=0.8)
        spec = ModelSpec(1, 1, 0, "normal")
        u, sigma2 = g.filter_model(y, None, params, spec)

        s_init = np.var(y)
        exp_u = np.zeros(5)
        exp_s = np.zeros(5)
        exp_s[0] = 0.02 + 0.8 * s_init
        exp_u[0] = y[0] - 0.01
        for t in range(1, 5):
            exp_s[t] = 0.02 + 0.1 * exp_u[t - 1] ** 2 + 0.8 * exp_s[t - 1]
            exp_u[t] = y[t] - (0.01 + 0.5 * y[t - 1] + 0.3 * exp_u[t - 1])
        assert np.allclose(u, exp_u, atol=1e-14)
        assert np.allclose(sigma2, exp_s, atol=1e-14)

    def test_constant_regressor_equals_shifted_intercept(self):
        rng = np.random.default_rng(1)
        y = rng.normal(size=300)
        c = 0.7
        bx = 0.04
        with_x = garch_params(alpha0=0.02, beta_x=[bx])
        without = garch_params(alpha0=0.02 + bx * c)
        x = np.full((1, 300), c)
        _, s2_x = g.filter_model(y, x, with_x, ModelSpec(0, 0, 1, "normal"))
        _, s2_0 = g.filter_model(y, None, without, ModelSpec(0, 0, 0, "normal"))
        assert np.allclose(s2_x, s2_0, atol=1e-12)

    def test_variance_floored(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=100)
        # strongly negative exogenous coefficient drives raw variance negative
        params = garch_params(alpha0=1e-10, alpha1=0.0, beta=0.0, beta_x=[-5.0])
        x = np.ones((1, 100))
        _, sigma2 = g.filter_model(x[0] * 0 + y, x, params, ModelSpec(0, 0, 1, "normal"))
        assert np.all(sigma2 >= g.SIGMA2_MIN)

    def test_too_short_series(self):
        with pytest.raises(ValidationError):
            g.filter_model(np.zeros(2), None, garch_params(phi=[0.1, 0.1]), ModelSpec(2, 0, 0, "normal"))


class TestNegLogLikelihood:
    def test_gaussian_closed_form(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=500)
        params = garch_params(mu=0.0, alpha0=1.0, alpha1=0.0, beta=0.0)
        nll = g.neg_log_likelihood(y, None, params, ModelSpec(0, 0, 0, "normal"))
        expected = 0.5 * len(y) * math.log(2 * math.pi) + 0.5 * float(np.sum(y**2))
        assert nll == pytest.approx(expected, rel=1e-12)

    def test_true_params_beat_perturbed(self):
        spec = ModelSpec(0, 0, 0, "normal")
        true = garch_params()
        shifted = garch_params(alpha1=0.10 + 0.3, beta=0.55)  # keep persistence < 1
        wins = 0
        for seed in range(20):
            y, _, _ = g.simulate(true, spec, None, 5000, seed)
            if g.neg_log_likelihood(y, None, true, spec) <= g.neg_log_likelihood(
                y, None, shifted, spec
            ):
                wins += 1
        assert wins >= 19  # >= 95% of 20 seeds

    def test_invalid_params_penalized_not_raised(self):
        y = np.random.default_rng(4).normal(size=100)
        bad = garch_params(alpha1=0.6, beta=0.6)  # persistence >= 1
        assert g.neg_log_likelihood(y, None, bad, ModelSpec(0, 0, 0, "normal")) == g.PENALTY_NLL

    def _fd_gradient(self, f, v, h):
        grad = np.zeros_like(v)
        for i in range(v.size):
            e = np.zeros_like(v)
            e[i] = h
            grad[i] = (f(v + e) - f(v - e)) / (2 * h)
        return grad

    def test_finite_difference_richardson_consistency(self):
        spec = ModelSpec(1, 1, 0, "skewt")
        true = garch_params(phi=[0.2], theta=[0.1], nu=6.0, xi=1.2)
        y, _, _ = g.simulate(true, spec, None, 2000, 11)

        def f(v):
            return g.neg_log_likelihood(y, None, g.unpack_params(v, spec), spec)

        rng = np.random.default_rng(5)
        v0 = g.pack_params(true, spec)
        for _ in range(5):
            v = v0 + rng.normal(scale=0.05, size=v0.size)
            g1 = self._fd_gradient(f, v, 1e-5)
            g2 = self._fd_gradient(f, v, 2e-5)
            scale = np.maximum(np.abs(g1), 1.0)
            assert np.max(np.abs(g1 - g2) / scale) < 1e-3


class TestReductionChain:
    def test_garchx_with_zero_beta_x_equals_garch(self):
        rng = np.random.default_rng(6)
        y = rng.normal(size=400)
        x = rng.normal(size=(2, 400))
        with_x = garch_params(beta_x=[0.0, 0.0])
        plain = garch_params()
        nll_x = g.neg_log_likelihood(y, x, with_x, ModelSpec(0, 0, 2, "normal"))
        nll_0 = g.neg_log_likelihood(y, None, plain, ModelSpec(0, 0, 0, "normal"))
        assert abs(nll_x - nll_0) < 1e-12

    def test_skewt_with_unit_xi_equals_student_t(self):
        rng = np.random.default_rng(7)
        y = rng.normal(size=300)
        params = garch_params(nu=6.0, xi=1.0)
        nll_skew = g.neg_log_likelihood(y, None, params, ModelSpec(0, 0, 0, "skewt"))
        nll_t = g.neg_log_likelihood(y, None, params, ModelSpec(0, 0, 0, "t"))
        assert abs(nll_skew - nll_t) < 1e-10

    def test_student_t_approaches_gaussian_for_huge_nu(self):
        rng = np.random.default_rng(8)
        y = rng.normal(size=500)
        params = garch_params(nu=1e6)
        nll_t = g.neg_log_likelihood(y, None, params, ModelSpec(0, 0, 0, "t"))
        nll_n = g.neg_log_likelihood(y, None, params, ModelSpec(0, 0, 0, "normal"))
        assert abs(nll_t - nll_n) / len(y) < 1e-3


class TestSimulate:
    def test_deterministic(self):
        params = garch_params(nu=6.0, xi=1.2)
        spec = ModelSpec(1, 1, 0, "skewt")
        params = garch_params(phi=[0.3], theta=[0.2], nu=6.0, xi=1.2)
        y1, _, _ = g.simulate(params, spec, None, 500, seed=99)
        y2, _, _ = g.simulate(params, spec, None, 500, seed=99)
        assert np.array_equal(y1, y2)

    def test_constant_variance_lln(self):
        params = garch_params(alpha0=0.04, alpha1=0.0, beta=0.0)
        y, u, _ = g.simulate(params, ModelSpec(0, 0, 0, "normal"), None, 100_000, seed=1)
        assert np.var(u) == pytest.approx(0.04, rel=0.05)

    def test_unconditional_variance(self):
        params = garch_params(alpha0=0.05, alpha1=0.1, beta=0.85)
        _, u, _ = g.simulate(params, ModelSpec(0, 0, 0, "normal"), None, 100_000, seed=2)
        assert np.var(u) == pytest.approx(0.05 / (1 - 0.95), rel=0.10)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValidationError):
            g.simulate(garch_params(alpha0=-1.0), ModelSpec(0, 0, 0, "normal"), None, 10, 0)


class TestFit:
    def test_garch_recovery_smoke(self):
        spec = ModelSpec(0, 0, 0, "normal")
        true = garch_params()
        y, _, _ = g.simulate(true, spec, None, 10_000, seed=0)
        result = g.fit(y, None, spec, FitConfig(restarts=2, seed=0))
        assert result.converged
        assert result.params.alpha1 + result.params.beta == pytest.approx(0.95, abs=0.05)

    def test_iid_input_gives_small_arch(self):
        spec = ModelSpec(0, 0, 0, "normal")
        hits = 0
        for seed in range(5):
            y = np.random.default_rng(seed).normal(size=3000)
            result = g.fit(y, None, spec, FitConfig(restarts=1, seed=seed))
            hits += result.params.alpha1 < 0.05
        assert hits >= 4

    def test_refit_is_fixed_point(self):
        spec = ModelSpec(0, 0, 0, "normal")
        y, _, _ = g.simulate(garch_params(), spec, None, 3000, seed=3)
        first = g.fit(y, None, spec, FitConfig(restarts=1, seed=0))
        nll_at_fit = g.neg_log_likelihood(y, None, first.params, spec)
        assert -first.loglik == pytest.approx(nll_at_fit, abs=1e-9)
        again = g.fit(y, None, spec, FitConfig(restarts=1, seed=1))
        assert again.loglik == pytest.approx(first.loglik, abs=1e-4)

    def test_exogenous_standardization_recorded(self):
        spec = ModelSpec(0, 0, 1, "normal")
        rng = np.random.default_rng(9)
        x = np.abs(rng.normal(5.0, 2.0, size=(1, 2000)))
        true = garch_params(beta_x=[0.0])
        y, _, _ = g.simulate(true, ModelSpec(0, 0, 0, "normal"), None, 2000, seed=4)
        result = g.fit(y, x, spec, FitConfig(restarts=1, seed=0))
        assert result.x_mean.shape == (1,)
        z = result.transform_x(x)
        assert abs(z.mean()) < 1e-9

    def test_too_few_observations(self):
        with pytest.raises(ValidationError):
            g.fit(np.zeros(10), None, ModelSpec(0, 0, 0, "normal"), FitConfig())

    def test_std_resid_definition(self):
        spec = ModelSpec(0, 0, 0, "normal")
        y, _, _ = g.simulate(garch_params(), spec, None, 1000, seed=5)
        result = g.fit(y, None, spec, FitConfig(restarts=1, seed=0))
        assert np.allclose(result.std_resid, result.resid / result.sigma)
        assert np.all(result.sigma > 0)


class TestForecast:
    def test_constant_variance(self):
        params = garch_params(alpha0=0.09, alpha1=0.0, beta=0.0)
        mean, sigma = g.forecast_one(
            params, ModelSpec(0, 0, 0, "normal"), np.zeros(5), np.zeros(5), np.ones(5), None
        )
        assert sigma == pytest.approx(0.3, abs=1e-12)
        assert mean == 0.0

    def test_recursion_consistency_with_filter(self):
        rng = np.random.default_rng(10)
        y = rng.normal(size=200)
        x = rng.normal(size=(1, 200))
        params = garch_params(mu=0.02, phi=[0.3], theta=[0.1], beta_x=[0.01])
        spec = ModelSpec(1, 1, 1, "normal")
        u, sigma2 = g.filter_model(y, x, params, spec)
        mean, sigma = g.forecast_one(
            params, spec, y[:-1], u[:-1], sigma2[:-1], x[:, -1]
        )
        assert sigma**2 == pytest.approx(sigma2[-1], abs=1e-12)
        assert mean == pytest.approx(y[-1] - u[-1], abs=1e-12)

    def test_hand_unrolled_one_step(self):
        y = np.array([0.1, -0.2, 0.05, 0.3, -0.1])
        params = garch_params(mu=0.01, phi=[0.5], theta=[0.3], alpha0=0.02, alpha1=0.1, beta=0.8)
        spec = ModelSpec(1, 1, 0, "normal")
        u, sigma2 = g.filter_model(y, None, params, spec)
        mean, sigma = g.forecast_one(params, spec, y, u, sigma2, None)
        assert mean == pytest.approx(0.01 + 0.5 * y[-1] + 0.3 * u[-1], abs=1e-14)
        assert sigma**2 == pytest.approx(
            0.02 + 0.1 * u[-1] ** 2 + 0.8 * sigma2[-1], abs=1e-14
        )

    def test_missing_regressors_rejected(self):
        params = garch_params(beta_x=[0.1])
        with pytest.raises(ValidationError):
            g.forecast_one(
                params, ModelSpec(0, 0, 1, "normal"), np.zeros(5), np.zeros(5), np.ones(5),
                np.zeros(3),
            )


class TestSerialization:
    def test_params_round_trip(self):
        params = garch_params(phi=[0.2, -0.1], theta=[0.05], beta_x=[0.3, -0.2], nu=5.5, xi=0.9)
        back = ArmaGarchXParams.from_dict(params.to_dict())
        assert back.to_dict() == params.to_dict()

    def test_pack_unpack_round_trip(self):
        spec = ModelSpec(2, 1, 2, "skewt")
        params = garch_params(phi=[0.2, -0.1], theta=[0.05], beta_x=[0.3, -0.2], nu=5.5, xi=0.9)
        back = g.unpack_params(g.pack_params(params, spec), spec)
        for key, value in params.to_dict().items():
            assert np.allclose(value, back.to_dict()[key], atol=1e-9), key

    def test_fit_result_json(self):
        spec = ModelSpec(0, 0, 0, "normal")
        y, _, _ = g.simulate(garch_params(), spec, None, 500, seed=6)
        result = g.fit(y, None, spec, FitConfig(restarts=1, seed=0))
        doc = result.to_dict()
        assert doc["spec"]["distribution"] == "normal"
        assert doc["aic"] == pytest.approx(2 * spec.n_params - 2 * result.loglik)


def test_aic_grid():
    spec_dist = "normal"
    y, _, _ = g.simulate(garch_params(), ModelSpec(0, 0, 0, spec_dist), None, 1000, seed=7)
    rows = g.aic_grid(y, None, [(0, 0), (1, 0)], spec_dist, k=0, config=FitConfig(restarts=1))
    assert len(rows) == 2
    assert all("aic" in r for r in rows)
