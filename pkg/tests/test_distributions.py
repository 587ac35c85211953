import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from majorant.distributions import (
    IGParams,
    eval_gauss,
    eval_ig_densities,
    sample_gamma_half,
    sample_ig,
    sample_sbig,
)
from majorant.rng import RngStream

from conftest import interp_cdf


class TestEvalGauss:
    def test_at_zero(self):
        phi, cdf = eval_gauss(0.0)
        assert phi == pytest.approx(0.3989422804014327, rel=1e-14)
        assert cdf == 0.5

    def test_at_one(self):
        phi, _ = eval_gauss(1.0)
        assert phi == pytest.approx(0.24197072451914337, rel=1e-14)

    def test_even(self):
        for x in (0.3, 1.7, 2.9):
            assert eval_gauss(x)[0] == eval_gauss(-x)[0]

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            eval_gauss(float("nan"))


class TestGammaHalf:
    def test_exact_transform_identity(self):
        # alpha = 1 makes the draw exactly the squared normal
        g1 = RngStream(3).generator()
        g2 = RngStream(3).generator()
        t = sample_gamma_half(g1, 1.0, size=50)
        n = g2.standard_normal(50)
        assert np.allclose(t, n**2)

    def test_mean_alpha2(self, gen):
        t = sample_gamma_half(gen, 2.0, size=1_000_000)
        # Gamma(1/2, rate 2) has mean 1/4 and variance 1/8
        se = math.sqrt(0.125 / len(t))
        assert abs(t.mean() - 0.25) < 3 * se

    def test_ks_vs_incomplete_gamma(self, gen):
        t = sample_gamma_half(gen, 1.0, size=100_000)
        res = stats.ks_1samp(t, stats.gamma(a=0.5, scale=2.0).cdf)
        assert res.pvalue > 0.01

    def test_rejects_bad_alpha(self, gen):
        with pytest.raises(ValueError):
            sample_gamma_half(gen, 0.0)


class TestInverseGaussian:
    def test_mean(self, gen):
        t = sample_ig(gen, IGParams(mu=1.0, h=1.0), size=1_000_000)
        # IG(1,1) has variance h/mu^3 = 1
        assert abs(t.mean() - 1.0) < 3 / math.sqrt(len(t))

    def test_zero_drift_first_passage(self, gen):
        t = sample_ig(gen, IGParams(mu=0.0, h=1.0), size=100_000)
        cdf = lambda q: 2 * (1 - stats.norm.cdf(1 / np.sqrt(np.maximum(q, 1e-12))))
        assert stats.ks_1samp(t, cdf).pvalue > 0.01

    def test_density_value(self):
        f, fstar = eval_ig_densities(IGParams(mu=1.0, h=1.0), 1.0)
        assert f == pytest.approx(0.3989422804014327, rel=1e-12)
        assert fstar == pytest.approx(f, rel=1e-12)

    def test_density_support_and_ratio(self):
        f, fstar = eval_ig_densities(IGParams(mu=2.0, h=1.0), 1.0)
        assert fstar == pytest.approx(2.0 * 1.0 * f, rel=1e-12)
        assert eval_ig_densities(IGParams(mu=1.0, h=1.0), -1.0) == (0.0, 0.0)
        assert eval_ig_densities(IGParams(mu=1.0, h=1.0), 0.0) == (0.0, 0.0)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            IGParams(mu=-1.0, h=1.0)
        with pytest.raises(ValueError):
            IGParams(mu=1.0, h=0.0)


class TestSizeBiased:
    def test_mean_is_convolution_mean(self, gen):
        g = sample_sbig(gen, IGParams(mu=1.0, h=1.0), size=1_000_000)
        # E[G] = E[T] + E[N^2] = 2; Var = 1 + 2 = 3
        assert abs(g.mean() - 2.0) < 3 * math.sqrt(3 / len(g))

    def test_density_normalizes(self):
        for mu, h in ((1.0, 1.0), (0.7, 2.0), (2.5, 0.4)):
            p = IGParams(mu=mu, h=h)
            mass, _ = quad(lambda t: eval_ig_densities(p, t)[1], 0, np.inf, limit=300)
            assert abs(mass - 1.0) <= 1e-8

    def test_ks_vs_quadrature_cdf(self, gen):
        p = IGParams(mu=1.0, h=1.0)
        g = sample_sbig(gen, p, size=100_000)
        xs = np.linspace(1e-9, 80, 20001)
        cdf = interp_cdf(xs, eval_ig_densities(p, xs)[1])
        assert stats.ks_1samp(g, cdf).pvalue > 0.01

    def test_mu_zero_rejected(self, gen):
        with pytest.raises(ValueError):
            sample_sbig(gen, IGParams(mu=0.0, h=1.0))


def test_sampler_battery_failure_rates():
    """One-sample KS at 1e5 draws over 100 seeds: at most 5 failures each."""
    p = IGParams(mu=1.0, h=1.0)
    xs = np.linspace(1e-9, 80, 20001)
    cdf_ig = interp_cdf(xs, eval_ig_densities(p, xs)[0])
    cdf_sb = interp_cdf(xs, eval_ig_densities(p, xs)[1])
    cdf_gamma = stats.gamma(a=0.5, scale=2.0).cdf
    fails = {"gamma_half": 0, "ig": 0, "sbig": 0}
    for seed in range(100):
        g = RngStream(seed, 1000).generator()
        if stats.ks_1samp(sample_gamma_half(g, 1.0, size=100_000), cdf_gamma).pvalue <= 0.01:
            fails["gamma_half"] += 1
        if stats.ks_1samp(sample_ig(g, p, size=100_000), cdf_ig).pvalue <= 0.01:
            fails["ig"] += 1
        if stats.ks_1samp(sample_sbig(g, p, size=100_000), cdf_sb).pvalue <= 0.01:
            fails["sbig"] += 1
    assert all(v <= 5 for v in fails.values()), fails
