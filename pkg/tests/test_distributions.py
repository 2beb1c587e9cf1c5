"""Distribution-function tests: frozen values, quadrature oracles, closure laws."""

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import ndtr

from bbsinfer.distributions import (
    BbsParams,
    Gbs2Params,
    bbs_cdf,
    bbs_logpdf,
    bbs_moment,
    bbs_pdf,
    bbs_quantile,
    bbs_sample,
    gbs2_cdf,
    gbs2_pdf,
    gbs2_quantile,
    gbs2_sample,
    validate_sample,
)

ALPHAS = (0.3, 0.5, 2.0)
GAMMAS = (-2.0, -1.0, 0.0, 1.0, 2.0)


def quad_pdf(p, lo=0.0, hi=np.inf):
    """Adaptive-quadrature oracle for integrals of the BBS density.

    Works on the u = log(x / beta) line; |u| = 60 already holds all the mass
    to double precision, and keeps x = beta e^u representable.
    """
    value, _ = integrate.quad(
        lambda u: bbs_pdf(p.beta * np.exp(u), p) * p.beta * np.exp(u),
        np.log(lo / p.beta) if lo > 0 else -60.0,
        np.log(hi / p.beta) if np.isfinite(hi) else 60.0,
        epsabs=1e-12, epsrel=1e-10, limit=200, points=[0.0],
    )
    return value


def bs_pdf(x, alpha, beta):
    """Plain Birnbaum-Saunders density, written independently."""
    t = (np.sqrt(x / beta) - np.sqrt(beta / x)) / alpha
    phi = np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi)
    return x ** -1.5 * (x + beta) * phi / (2 * alpha * np.sqrt(beta))


class TestBbsPdf:
    def test_reduces_to_bs_at_x_equals_beta(self):
        # t = 0 there, so the density is 2 phi(0)
        p = BbsParams(0.5, 1.0, 0.0)
        assert bbs_pdf(1.0, p) == pytest.approx(2 * stats.norm.pdf(0.0), abs=1e-12)

    def test_frozen_value_bimodal_case(self):
        # phi(1) / Phi(1), frozen from direct evaluation and cross-checked
        # against the quadrature-normalized density below
        p = BbsParams(0.5, 1.0, -1.0)
        assert bbs_pdf(1.0, p) == pytest.approx(0.2875999709391784, rel=1e-10)
        assert quad_pdf(p) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("alpha,beta", [(0.3, 0.7), (0.5, 1.0), (2.0, 3.5)])
    def test_gamma_zero_is_bs_density(self, alpha, beta):
        p = BbsParams(alpha, beta, 0.0)
        grid = np.linspace(0.05, 8.0, 160) * beta
        gap = np.max(np.abs(bbs_pdf(grid, p) - bs_pdf(grid, alpha, beta)))
        assert gap < 1e-12

    def test_domain_errors(self):
        p = BbsParams(0.5, 1.0, 0.0)
        for bad in (0.0, -1.0, np.nan, np.inf):
            with pytest.raises(ValueError):
                bbs_pdf(bad, p)

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_normalization(self, alpha, gamma):
        assert quad_pdf(BbsParams(alpha, 1.0, gamma)) == pytest.approx(1.0, abs=1e-8)

    def test_scale_closure(self):
        p = BbsParams(0.5, 1.0, -1.0)
        scaled = BbsParams(0.5, 3.0, -1.0)
        x = np.linspace(0.2, 9.0, 40)
        np.testing.assert_allclose(
            bbs_pdf(x, scaled), bbs_pdf(x / 3.0, p) / 3.0, rtol=1e-12)


class TestBbsCdf:
    @pytest.mark.parametrize("alpha,gamma", [(0.5, 0.0), (0.3, -1.5), (2.0, 2.0)])
    def test_half_at_beta(self, alpha, gamma):
        assert bbs_cdf(2.5, BbsParams(alpha, 2.5, gamma)) == pytest.approx(0.5, abs=1e-14)

    def test_limits(self):
        p = BbsParams(0.5, 1.0, -1.0)
        assert bbs_cdf(1e-12, p) < 1e-12
        assert bbs_cdf(1e12, p) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("gamma", (-1.0, 0.0, 1.0))
    def test_matches_quadrature_of_pdf(self, alpha, gamma):
        p = BbsParams(alpha, 1.0, gamma)
        for x in (0.3, 0.8, 1.0, 1.7, 4.2):
            assert bbs_cdf(x, p) == pytest.approx(quad_pdf(p, hi=x), abs=1e-8)

    def test_continuity_at_beta(self):
        p = BbsParams(0.4, 1.3, -0.7)
        eps = 1e-11
        left = bbs_cdf(p.beta - eps, p)
        right = bbs_cdf(p.beta + eps, p)
        assert left == pytest.approx(0.5, abs=1e-9)
        assert right == pytest.approx(0.5, abs=1e-9)

    def test_derivative_is_pdf(self):
        p = BbsParams(0.6, 1.1, -0.9)
        h = 1e-6
        for x in (0.4, 0.9, 1.5, 3.0):
            deriv = (bbs_cdf(x + h, p) - bbs_cdf(x - h, p)) / (2 * h)
            assert deriv == pytest.approx(bbs_pdf(x, p), rel=1e-6)

    def test_reciprocity_closure(self):
        p = BbsParams(0.5, 2.0, -1.0)
        inv = BbsParams(0.5, 0.5, -1.0)
        for x in (0.1, 0.5, 2.0, 5.0):
            assert bbs_cdf(x, inv) == pytest.approx(1.0 - bbs_cdf(1.0 / x, p), abs=1e-12)

    def test_monotone(self):
        p = BbsParams(0.5, 1.0, 1.5)
        grid = np.geomspace(0.01, 100.0, 300)
        values = bbs_cdf(grid, p)
        assert np.all(np.diff(values) >= 0)


class TestBbsQuantile:
    def test_median_is_beta(self):
        for gamma in GAMMAS:
            assert bbs_quantile(0.5, BbsParams(0.5, 2.2, gamma)) == pytest.approx(2.2, rel=1e-12)

    def test_frozen_value_against_bisection(self):
        p = BbsParams(0.5, 1.0, 0.0)
        value = bbs_quantile(0.975, p)
        assert value == pytest.approx(2.571484234244308, rel=1e-9)
        # independent bisection oracle on the cdf
        lo, hi = 1e-6, 100.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if bbs_cdf(mid, p) < 0.975:
                lo = mid
            else:
                hi = mid
        assert value == pytest.approx(0.5 * (lo + hi), rel=1e-10)

    @pytest.mark.parametrize("alpha,gamma", [(0.5, 0.0), (0.3, -1.0), (2.0, 1.0), (0.5, 2.0)])
    def test_round_trip(self, alpha, gamma):
        p = BbsParams(alpha, 1.4, gamma)
        probs = np.arange(0.01, 1.0, 0.01)
        np.testing.assert_allclose(bbs_cdf(bbs_quantile(probs, p), p), probs, atol=1e-10)

    def test_extreme_gamma_round_trip(self):
        # log-space complements keep the tails alive out to |gamma| = 30
        for gamma in (-30.0, 30.0):
            p = BbsParams(0.5, 1.0, gamma)
            for prob in (0.01, 0.5, 0.99):
                assert bbs_cdf(bbs_quantile(prob, p), p) == pytest.approx(prob, abs=1e-9)

    def test_domain_errors(self):
        p = BbsParams(0.5, 1.0, 0.0)
        for bad in (0.0, 1.0, -0.2, 1.4):
            with pytest.raises(ValueError):
                bbs_quantile(bad, p)


class _StubRng:
    """Deterministic stand-in for a Generator: U -> 0, S -> +1."""

    def random(self, n):
        return np.zeros(n)

    def integers(self, low, high, size):
        return np.ones(size, dtype=int)


class TestBbsSample:
    def test_zero_uniform_maps_to_beta(self):
        p = BbsParams(0.5, 3.7, -1.2)
        x = bbs_sample(5, p, _StubRng())
        np.testing.assert_allclose(x, 3.7, rtol=1e-12)

    def test_kolmogorov_smirnov(self):
        p = BbsParams(0.5, 1.0, -1.0)
        rng = np.random.default_rng(20240811)
        x = bbs_sample(100_000, p, rng)
        assert np.all(x > 0)
        d = stats.kstest(x, lambda v: bbs_cdf(v, p)).statistic
        assert d < 1.63 / np.sqrt(100_000)  # 1% critical value

    def test_scale_closure_two_sample(self):
        rng = np.random.default_rng(7)
        p = BbsParams(0.5, 1.0, -1.0)
        scaled = BbsParams(0.5, 2.5, -1.0)
        x = 2.5 * bbs_sample(4000, p, rng)
        y = bbs_sample(4000, scaled, rng)
        assert stats.ks_2samp(x, y).pvalue > 0.001

    def test_deterministic_given_stream(self):
        p = BbsParams(0.5, 1.0, 0.5)
        a = bbs_sample(10, p, np.random.default_rng(3))
        b = bbs_sample(10, p, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)


class TestBbsMoment:
    def test_bs_mean(self):
        # gamma = 0 reduces to BS with mean beta (1 + alpha^2 / 2)
        assert bbs_moment(1, BbsParams(0.5, 1.0, 0.0)) == pytest.approx(1.125, rel=1e-9)

    def test_scaling(self):
        m1 = bbs_moment(1, BbsParams(0.5, 1.0, -1.0))
        m3 = bbs_moment(1, BbsParams(0.5, 3.0, -1.0))
        assert m3 == pytest.approx(3.0 * m1, rel=1e-9)

    def test_against_representation_oracle(self):
        # independent oracle: expectation over the truncated-normal
        # representation T = S (Y - gamma)
        p = BbsParams(0.5, 1.0, -1.0)

        def x_of_t(t):
            h = 0.5 * p.alpha * t
            return p.beta * (h + np.sqrt(h * h + 1.0)) ** 2

        def integrand(y):
            t = y - p.gamma
            w = stats.norm.pdf(y) / ndtr(-p.gamma)
            return 0.5 * (x_of_t(t) + x_of_t(-t)) * w

        oracle, _ = integrate.quad(integrand, p.gamma, np.inf, epsabs=1e-12)
        assert bbs_moment(1, p) == pytest.approx(oracle, abs=1e-6)

    def test_monte_carlo_cross_check(self):
        p = BbsParams(0.5, 1.0, -1.0)
        rng = np.random.default_rng(99)
        x = bbs_sample(1_000_000, p, rng)
        se = x.std() / 1000.0
        assert bbs_moment(1, p) == pytest.approx(float(x.mean()), abs=4 * se)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            bbs_moment(5, BbsParams(0.5, 1.0, 0.0))


class _StubNormalRng:
    def standard_normal(self, n):
        return np.zeros(n)


class TestGbs2:
    def test_cdf_half_and_median_at_beta(self):
        q = Gbs2Params(5.0, 1.0, 5.0)
        assert gbs2_cdf(1.0, q) == pytest.approx(0.5, abs=1e-14)
        assert gbs2_quantile(0.5, q) == pytest.approx(1.0, rel=1e-12)

    def test_pdf_at_beta(self):
        # 2 nu phi(0) / (alpha beta)
        q = Gbs2Params(5.0, 1.0, 5.0)
        expected = 2 * 5.0 * stats.norm.pdf(0.0) / (5.0 * 1.0)
        assert gbs2_pdf(1.0, q) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("alpha", (2.0, 5.0))
    @pytest.mark.parametrize("nu", (2.0, 5.0))
    def test_normalization(self, alpha, nu):
        q = Gbs2Params(alpha, 1.0, nu)
        value, _ = integrate.quad(
            lambda u: gbs2_pdf(np.exp(u), q) * np.exp(u),
            -60.0, 60.0, epsabs=1e-12, limit=200, points=[0.0])
        assert value == pytest.approx(1.0, abs=1e-8)

    def test_cdf_is_integral_of_pdf(self):
        q = Gbs2Params(2.0, 1.5, 3.0)
        for x in (0.8, 1.5, 2.4):
            value, _ = integrate.quad(lambda v: gbs2_pdf(v, q), 1e-9, x, limit=200)
            assert gbs2_cdf(x, q) == pytest.approx(value, abs=1e-8)

    def test_quantile_round_trip(self):
        q = Gbs2Params(5.0, 2.0, 5.0)
        probs = np.arange(0.01, 1.0, 0.01)
        np.testing.assert_allclose(gbs2_cdf(gbs2_quantile(probs, q), q), probs, atol=1e-10)

    def test_sampler_zero_maps_to_beta(self):
        q = Gbs2Params(5.0, 4.2, 5.0)
        np.testing.assert_allclose(gbs2_sample(3, q, _StubNormalRng()), 4.2, rtol=1e-12)

    def test_sampler_ks(self):
        q = Gbs2Params(5.0, 1.0, 5.0)
        rng = np.random.default_rng(1234)
        x = gbs2_sample(100_000, q, rng)
        d = stats.kstest(x, lambda v: gbs2_cdf(v, q)).statistic
        assert d < 1.63 / np.sqrt(100_000)

    def test_bimodal_flag(self):
        assert Gbs2Params(5.0, 1.0, 5.0).is_bimodal
        assert not Gbs2Params(1.5, 1.0, 5.0).is_bimodal
        assert not Gbs2Params(5.0, 1.0, 1.5).is_bimodal


class TestParamsAndSample:
    def test_bbs_invariants(self):
        with pytest.raises(ValueError):
            BbsParams(-0.5, 1.0, 0.0)
        with pytest.raises(ValueError):
            BbsParams(0.5, 0.0, 0.0)
        with pytest.raises(ValueError):
            BbsParams(0.5, 1.0, np.nan)
        assert BbsParams(0.5, 1.0, -0.1).is_bimodal
        assert not BbsParams(0.5, 1.0, 0.0).is_bimodal

    def test_gbs2_invariants(self):
        with pytest.raises(ValueError):
            Gbs2Params(1.0, 1.0, -2.0)

    def test_validate_sample(self):
        np.testing.assert_array_equal(validate_sample([1.0, 2.0]), [1.0, 2.0])
        for bad in ([], [0.0], [1.0, -2.0], [np.nan], [[1.0, 2.0], [3.0, 4.0]]):
            with pytest.raises(ValueError):
                validate_sample(bad)

    def test_logpdf_matches_log_of_pdf(self):
        p = BbsParams(0.5, 1.0, -1.0)
        x = np.array([0.3, 1.0, 2.5])
        np.testing.assert_allclose(bbs_logpdf(x, p), np.log(bbs_pdf(x, p)), rtol=1e-12)
