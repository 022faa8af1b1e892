import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idprank.dirichlet import sample_weight_pair, weight_moments
from idprank.idp import (
    DEFAULT_S,
    Approx,
    Outcome,
    PosteriorBounds,
    TestConfig,
    choose_s,
    classify,
    g_values,
    idp_decide,
    imprecision_after_one_pair,
    interval_width,
    lower_prob,
    moments_lower,
    moments_upper,
    normal_approx_prob,
    posterior_mean_bounds,
    posterior_probs,
    posterior_samples,
    predictive_bounds,
    upper_prob,
)
from idprank.ranks import TieMode, u_statistic, win_matrix
from idprank.streams import generator

from _oracles import g_draws, sample_var_se, trace_moments

S = DEFAULT_S
# P[B1 B2 > 1/4] for independent Beta(1, sqrt(2) - 1), by quadrature
P_STAR_C025 = 0.7273792634302623

samples = st.lists(st.integers(-4, 4), min_size=1, max_size=7)


def dense_moments(x, y, s, ties=TieMode.MIDRANK, upper=False):
    a = win_matrix(x, y, ties)
    if upper:
        aug = np.ones((a.shape[0] + 1, a.shape[1] + 1))
        aug[1:, 1:] = a
        a = aug
    mw = weight_moments(s, len(x), augmented=upper)
    mv = weight_moments(s, len(y), augmented=upper)
    return trace_moments(a, mw.second, mv.second, mw.mean, mv.mean)


class TestPredictiveBounds:
    def test_tail_event_above_all_data(self):
        data = [0.3, -1.2, 2.0, 0.7]
        n = len(data)
        assert predictive_bounds(data, 1.0, [0.0] * n, 0.0, 1.0) == (0.0, pytest.approx(1 / (1 + n)))

    def test_prior_is_vacuous(self):
        assert predictive_bounds([], S, [], 0.0, 1.0) == (0.0, 1.0)

    def test_bootstrap_limit_collapses(self):
        lo, up = predictive_bounds([1, 2, 3], 0.0, [0.2, 0.9, 0.4], -1.0, 5.0)
        assert lo == up == pytest.approx(0.5)

    def test_rejects_inverted_range(self):
        with pytest.raises(ValueError):
            predictive_bounds([1], 1.0, [0.5], 1.0, 0.0)

    def test_rejects_values_outside_range(self):
        with pytest.raises(ValueError):
            predictive_bounds([1], 1.0, [2.0], 0.0, 1.0)


class TestPosteriorMeanBounds:
    def test_single_win(self):
        lo, up = posterior_mean_bounds([1], [2], S)
        assert lo == pytest.approx(0.5, abs=1e-12)
        assert up == pytest.approx(1.0, abs=1e-12)

    def test_single_loss(self):
        lo, up = posterior_mean_bounds([2], [1], S)
        assert lo == 0.0
        assert up == pytest.approx(0.5, abs=1e-12)

    @given(samples, samples)
    def test_s_zero_collapses_to_u_over_n1n2(self, x, y):
        lo, up = posterior_mean_bounds(x, y, 0.0)
        assert lo == up == pytest.approx(u_statistic(x, y) / (len(x) * len(y)))

    @given(samples, samples, st.floats(0, 10))
    def test_width_identity(self, x, y, s):
        lo, up = posterior_mean_bounds(x, y, s)
        n1, n2 = len(x), len(y)
        assert up - lo == pytest.approx(s * (s + n1 + n2) / ((s + n1) * (s + n2)), abs=1e-12)
        assert 0.0 <= lo <= up <= 1.0 + 1e-12

    @given(samples, samples, st.floats(0, 5), st.floats(0, 5))
    def test_nested_in_s(self, x, y, s1, s2):
        s1, s2 = sorted((s1, s2))
        lo1, up1 = posterior_mean_bounds(x, y, s1)
        lo2, up2 = posterior_mean_bounds(x, y, s2)
        assert lo2 <= lo1 + 1e-12 and up1 <= up2 + 1e-12

    @pytest.mark.parametrize("n", [1, 5, 20, 100, 1000])
    def test_width_vanishes_like_one_over_n(self, n):
        w = interval_width(S, n, n)
        assert w < 2 * S * (2 * n + S) / n**2
        assert w * n == pytest.approx(2 * S, rel=2 / n + 0.5 * S / n)


class TestMoments:
    def test_lower_single_win(self):
        mu, var = moments_lower([1], [2], S)
        assert mu == pytest.approx(0.5, abs=1e-14)
        assert var == pytest.approx((2 - math.sqrt(2)) ** 2 - 0.25, abs=1e-14)
        assert var == pytest.approx(0.09315, abs=1e-5)

    @pytest.mark.parametrize("s", [0.0, S, 3.0])
    def test_lower_all_losses_is_degenerate(self, s):
        assert moments_lower([2], [1], s) == (0.0, 0.0)
        assert moments_lower([5, 6], [1, 2, 3], s) == (0.0, 0.0)

    @settings(max_examples=60)
    @given(samples, samples, st.sampled_from([0.0, S, 1.0, 2.5]), st.sampled_from(list(TieMode)))
    def test_closed_forms_match_trace_formula(self, x, y, s, ties):
        for upper, fn in ((False, moments_lower), (True, moments_upper)):
            mu, var = fn(x, y, s, ties)
            ref_mu, ref_var = dense_moments(x, y, s, ties, upper)
            assert mu == pytest.approx(ref_mu, abs=1e-12)
            assert var == pytest.approx(max(ref_var, 0.0), abs=1e-12)

    @given(samples, samples, st.floats(0, 5))
    def test_upper_mean_equals_upper_bound(self, x, y, s):
        assert moments_upper(x, y, s)[0] == pytest.approx(posterior_mean_bounds(x, y, s)[1], abs=1e-12)

    @given(samples, samples)
    def test_s_zero_upper_equals_lower_exactly(self, x, y):
        assert moments_upper(x, y, 0.0) == moments_lower(x, y, 0.0)

    def test_against_sampling_oracle(self):
        x, y = [0.1, 1.2, -0.5], [0.4, 0.0, 1.5]
        low, up = g_draws(x, y, S, 1_000_000, np.random.default_rng(2024))
        for draws, (mu, var) in ((low, moments_lower(x, y, S)), (up, moments_upper(x, y, S))):
            assert abs(draws.mean() - mu) < 4 * draws.std() / 1000
            assert abs(draws.var() - var) < 4 * sample_var_se(draws)

    def test_upper_single_loss_against_oracle(self):
        mu, var = moments_upper([2], [1], S)
        assert mu == pytest.approx(0.5, abs=1e-12)
        _, up = g_draws([2], [1], S, 1_000_000, np.random.default_rng(8))
        assert abs(up.var() - var) < 4 * sample_var_se(up)


class TestMonteCarloProbabilities:
    def test_c_zero_gives_one(self):
        cfg = TestConfig(c=0.0, mc_samples=2000)
        assert lower_prob([1, 2, 5], [0, 3], cfg).estimate == 1.0
        assert upper_prob([5, 6], [1], cfg).estimate == 1.0

    def test_c_one_gives_zero(self):
        assert lower_prob([1, 2], [3, 4], TestConfig(c=1.0, mc_samples=2000)).estimate == 0.0

    def test_single_win_against_quadrature(self):
        est, se = lower_prob([1], [2], TestConfig(c=0.25))
        assert abs(est - P_STAR_C025) < 4 * se

    def test_standard_error(self):
        est, se = lower_prob([1, 3], [2, 4], TestConfig(mc_samples=1000))
        assert se == pytest.approx(math.sqrt(est * (1 - est) / 1000))

    def test_s_zero_upper_equals_lower_bitwise(self):
        cfg = TestConfig(s=0.0, mc_samples=5000, seed=3)
        x, y = [0.1, 0.5, 1.2, 2.0], [0.3, 0.9, 1.7]
        assert lower_prob(x, y, cfg) == upper_prob(x, y, cfg)
        lo, up = posterior_samples(x, y, cfg)
        assert np.array_equal(lo, up)

    @pytest.mark.parametrize("shards", [2, 3, 8])
    def test_shard_invariance(self, shards):
        cfg = TestConfig(mc_samples=10_000, seed=17)
        x, y = [0.1, 0.5, 1.2, 2.0, -0.3], [0.3, 0.9, 1.7]
        assert posterior_probs(x, y, cfg, shards=shards) == posterior_probs(x, y, cfg)
        lo1, up1 = posterior_samples(x, y, cfg)
        lo2, up2 = posterior_samples(x, y, cfg, shards=shards)
        assert np.array_equal(lo1, lo2) and np.array_equal(up1, up2)

    def test_rng_overrides_config_seed(self):
        cfg = TestConfig(mc_samples=500, seed=1)
        x, y = [0.0, 1.0, 2.0], [0.5, 1.5]
        assert posterior_samples(x, y, cfg, rng=1)[0].tolist() == posterior_samples(x, y, cfg)[0].tolist()
        assert posterior_samples(x, y, cfg, rng=2)[0].tolist() != posterior_samples(x, y, cfg)[0].tolist()

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            lower_prob([], [1.0], TestConfig())

    def test_duality_strict_no_ties(self):
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=6), rng.normal(size=4)
        w1, w2 = sample_weight_pair(S, 6, 4, generator(5), 3000)
        _, up_xy = g_values(win_matrix(x, y, TieMode.STRICT), w1, w2)
        low_yx, _ = g_values(win_matrix(y, x, TieMode.STRICT), w2, w1)
        np.testing.assert_allclose(up_xy, 1.0 - low_yx, rtol=0, atol=1e-12)
        # event-level version: P_up[g > c](x, y) = P[g_low(y, x) < 1 - c]
        c = 0.5
        assert np.count_nonzero(up_xy > c) == np.count_nonzero(1.0 - low_yx > c)

    @pytest.mark.parametrize("seed", range(4))
    def test_nesting_in_s(self, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=8), rng.normal(0.4, size=8)
        a = posterior_probs(x, y, TestConfig(s=0.2, mc_samples=20000, seed=seed))
        b = posterior_probs(x, y, TestConfig(s=1.0, mc_samples=20000, seed=seed))
        tol = 4 * (a[0].se + b[0].se + 1e-9)
        assert b[0].estimate <= a[0].estimate + tol
        assert b[1].estimate >= a[1].estimate - 4 * (a[1].se + b[1].se + 1e-9)
        na = normal_approx_prob(x, y, TestConfig(s=0.2))
        nb = normal_approx_prob(x, y, TestConfig(s=1.0))
        assert nb[0] <= na[0] + 1e-12 and nb[1] >= na[1] - 1e-12


class TestPosteriorSamples:
    def test_pairs_are_ordered_and_bounded(self):
        lo, up = posterior_samples([0.2, 1.1, 1.4], [0.5, 0.9], TestConfig(mc_samples=5000))
        assert lo.shape == up.shape == (5000,)
        assert np.all(lo <= up + 1e-15)
        assert np.all((lo >= 0) & (up <= 1 + 1e-12))

    def test_mean_matches_closed_form(self):
        x, y = [0.2, 1.1, 1.4, -0.7], [0.5, 0.9, 0.1]
        lo, up = posterior_samples(x, y, TestConfig(mc_samples=50_000, seed=4))
        for draws, (mu, _) in ((lo, moments_lower(x, y)), (up, moments_upper(x, y))):
            assert abs(draws.mean() - mu) < 4 * draws.std() / math.sqrt(draws.size)


class TestNormalApprox:
    def test_mean_at_threshold(self):
        x, y = [0.0, 1.0, 2.0], [0.5, 1.5, 2.5, 3.0]
        mu, _ = moments_lower(x, y)
        lo, _ = normal_approx_prob(x, y, TestConfig(c=mu))
        assert lo == pytest.approx(0.5, abs=1e-12)

    def test_degenerate_lower(self):
        lo, up = normal_approx_prob([2], [1], TestConfig(c=0.3))
        assert lo == 0.0
        assert 0.0 < up < 1.0

    def test_agrees_with_monte_carlo_at_n200(self):
        rng = np.random.default_rng(200)
        x, y = rng.normal(size=200), rng.normal(size=200)
        mu, _ = moments_lower(x, y)
        cfg = TestConfig(c=0.5, mc_samples=20000)
        lo_mc, up_mc = posterior_probs(x, y, cfg)
        lo_n, up_n = normal_approx_prob(x, y, cfg)
        assert abs(lo_mc.estimate - lo_n) < 0.02
        assert abs(up_mc.estimate - up_n) < 0.02


class TestChooseS:
    def test_half(self):
        assert choose_s(0.5) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
        assert choose_s(0.5) == pytest.approx(0.414214, abs=1e-6)

    def test_three_quarters(self):
        assert choose_s(0.75) == pytest.approx(1.0, abs=1e-12)

    def test_small_rho_goes_to_zero(self):
        assert choose_s(1e-10) < 1e-9

    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_out_of_range(self, rho):
        with pytest.raises(ValueError):
            choose_s(rho)

    @pytest.mark.parametrize("rho", np.linspace(0.01, 0.99, 99))
    def test_inverse(self, rho):
        assert imprecision_after_one_pair(choose_s(rho)) == pytest.approx(rho, abs=1e-12)

    def test_matches_width_after_one_pair(self):
        assert interval_width(choose_s(0.5), 1, 1) == pytest.approx(0.5, abs=1e-12)


class TestDecision:
    @pytest.mark.parametrize(
        "lo, up, outcome",
        [(0.98, 0.99, Outcome.GREATER), (0.40, 0.97, Outcome.INDETERMINATE), (0.10, 0.60, Outcome.NOT_GREATER)],
    )
    def test_classify(self, lo, up, outcome):
        assert classify(lo, up, 0.05) is outcome

    def test_threshold_is_strict(self):
        assert classify(0.95, 0.95, 0.05) is Outcome.NOT_GREATER

    def test_actions(self):
        assert Outcome.GREATER.action is True
        assert Outcome.NOT_GREATER.action is False
        assert Outcome.INDETERMINATE.action is None

    def test_clear_win(self):
        d = idp_decide(np.arange(30.0), np.arange(30.0) + 40, TestConfig(mc_samples=2000))
        assert d.outcome is Outcome.GREATER
        assert isinstance(d.bounds, PosteriorBounds)

    def test_normal_mode_has_zero_se(self):
        d = idp_decide([0.1, 0.4, 2.0], [0.3, 3.3], TestConfig(approx=Approx.NORMAL))
        assert d.bounds.lower_prob_se == d.bounds.upper_prob_se == 0.0
        assert d.bounds.lower_prob <= d.bounds.upper_prob

    def test_bounds_ordering(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            x, y = rng.normal(size=6), rng.normal(0.3, size=7)
            b = idp_decide(x, y, TestConfig(mc_samples=2000)).bounds
            assert b.lower_mean <= b.upper_mean
            assert b.lower_prob <= b.upper_prob + 4 * (b.lower_prob_se + b.upper_prob_se)
            assert b.upper_mean - b.lower_mean == pytest.approx(interval_width(S, 6, 7), abs=1e-12)

    @pytest.mark.parametrize(
        "kwargs", [dict(gamma=0.0), dict(gamma=1.0), dict(c=1.5), dict(mc_samples=99), dict(s=-1.0), dict(seed=-3)]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            TestConfig(**kwargs)
