import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from majorant.bessel import (
    BridgeSpec,
    PathGrid,
    sample_bes,
    sample_bessel_bridge,
    sample_bm,
    sample_coupled_bridges,
    sample_excursion,
    williams_sample,
)
from majorant.densities import eval_kernels
from majorant.rng import RngStream

from conftest import interp_cdf


class TestPathGrid:
    def test_single_point(self):
        p = PathGrid([0.0], [5.0])
        assert len(p) == 1

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            PathGrid([0.0, 0.0], [1.0, 2.0])


class TestBrownianMotion:
    def test_degenerate_grid(self, gen):
        p = sample_bm(gen, [0.0], x0=5.0)
        assert p.values[0] == 5.0

    def test_increment_variance(self, gen):
        vals = np.array([sample_bm(gen, [0.5]).values[0] for _ in range(0)])
        # vectorized equivalent: one long path of independent increments
        n = 1_000_000
        incr = gen.standard_normal(n) * math.sqrt(0.5)
        assert abs(incr.var() - 0.5) < 5e-3
        p = sample_bm(gen, np.arange(1, 11) * 0.5)
        assert len(p) == 10

    def test_drift_mean(self, gen):
        n = 200_000
        vals = gen.standard_normal(n) + 2.0  # exact law of B_2(1) from 0
        sampled = np.array([sample_bm(gen, [1.0], x0=1.0, mu=2.0).values[0] for _ in range(2000)])
        assert abs(sampled.mean() - 3.0) < 4 / math.sqrt(2000)
        assert abs(vals.mean() - 2.0) < 4 / math.sqrt(n)


class TestBessel:
    def test_chi3_at_one(self, gen):
        vals = np.array([sample_bes(gen, 3, 0.0, 0.0, [1.0]).values[0] for _ in range(10_000)])
        assert stats.ks_1samp(vals, stats.chi(3).cdf).pvalue > 0.01

    def test_second_moment_dimension(self, gen):
        vals = np.array([sample_bes(gen, 5, 0.0, 0.0, [1.0]).values[0] for _ in range(20_000)])
        # E||N(0, I_5)||^2 = 5, Var of the square = 10
        assert abs((vals**2).mean() - 5.0) < 3 * math.sqrt(10 / 20_000)

    def test_scaling_invariance(self, gen):
        a = np.array([sample_bes(gen, 3, 0.0, 0.0, [4.0]).values[0] / 2.0 for _ in range(8000)])
        b = np.array([sample_bes(gen, 3, 0.0, 0.0, [1.0]).values[0] for _ in range(8000)])
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_radial_positivity(self, gen):
        p = sample_bes(gen, 3, 1.0, 1.0, np.linspace(0.1, 2.0, 50), dt_max=1e-3)
        assert np.all(p.values >= 0)

    def test_em_dt_refinement(self):
        means = []
        ses = []
        for dt in (8e-3, 4e-3):
            g = RngStream(5).generator()
            vals = np.array([sample_bes(g, 3, 1.0, 1.0, [1.0], dt_max=dt).values[0] for _ in range(20_000)])
            means.append(vals.mean())
            ses.append(vals.std() / math.sqrt(len(vals)))
        assert abs(means[0] - means[1]) < 0.01 * means[1] + 3 * math.hypot(*ses)

    def test_rejects_bad_dimension(self, gen):
        with pytest.raises(ValueError):
            sample_bes(gen, 0, 0.0, 0.0, [1.0])


class TestBesselBridge:
    def test_endpoints_exact(self, gen):
        spec = BridgeSpec(3, 0.0, 2.0, 1.0, 2.0)
        p = sample_bessel_bridge(gen, spec, np.array([0.0, 0.3, 1.0]))
        assert p.values[0] == 2.0 and p.values[-1] == 2.0

    def test_rejects_wrong_dimension(self, gen):
        with pytest.raises(ValueError):
            sample_bessel_bridge(gen, BridgeSpec(5, 0.0, 0.0, 1.0, 0.0), [0.5])

    def test_rejects_times_outside(self, gen):
        with pytest.raises(ValueError):
            sample_bessel_bridge(gen, BridgeSpec(3, 0.0, 0.0, 1.0, 0.0), [1.5])

    def test_pinned_midpoint_matches_excursion(self, gen):
        spec = BridgeSpec(3, 0.0, 0.0, 1.0, 0.0)
        a = np.array([sample_bessel_bridge(gen, spec, [0.5]).values[0] for _ in range(8000)])
        b = np.array([sample_excursion(gen, 0.0, 1.0, [0.5]).values[0] for _ in range(8000)])
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_midpoint_matches_transition_density_oracle(self, gen):
        # bridge 1 -> 1 on [0,1]: midpoint density prop to q(1,w;1/2) q(w,1;1/2)
        spec = BridgeSpec(3, 0.0, 1.0, 1.0, 1.0)
        vals = np.array([sample_bessel_bridge(gen, spec, [0.5]).values[0] for _ in range(8000)])
        xs = np.linspace(1e-6, 12, 4001)
        pdf = np.array([eval_kernels(1.0, w, 0.5).bes3 * eval_kernels(w, 1.0, 0.5).bes3 for w in xs])
        assert stats.ks_1samp(vals, interp_cdf(xs, pdf)).pvalue > 0.01

    def test_refinement_continuity(self, gen):
        # the largest grid increment of one path shrinks under refinement
        spec = BridgeSpec(3, 0.0, 2.0, 1.0, 2.0)
        qs = []
        for m in (64, 1024):
            jumps = []
            for _ in range(200):
                p = sample_bessel_bridge(gen, spec, np.linspace(0.0, 1.0, m + 1))
                jumps.append(np.abs(np.diff(p.values)).max())
            qs.append(np.quantile(jumps, 0.9))
        assert qs[1] < 0.55 * qs[0]


class TestExcursion:
    def test_interior_positive_endpoints_zero(self, gen):
        p = sample_excursion(gen, 0.0, 2.0, np.linspace(0.0, 2.0, 41))
        assert p.values[0] == 0.0 and p.values[-1] == 0.0
        assert np.all(p.values[1:-1] > 0)

    def test_max_brownian_scaling(self, gen):
        grid4 = np.linspace(0.0, 4.0, 65)
        grid1 = np.linspace(0.0, 1.0, 65)
        m4 = np.array([sample_excursion(gen, 0.0, 4.0, grid4).values.max() for _ in range(6000)])
        m1 = np.array([sample_excursion(gen, 0.0, 1.0, grid1).values.max() for _ in range(6000)])
        assert stats.ks_2samp(m4 / 2.0, m1).pvalue > 0.01


class TestCoupledBridges:
    def test_identical_specs_identical_paths(self, gen):
        s = BridgeSpec(3, 0.0, 1.0, 1.0, 1.0)
        w1, w2 = sample_coupled_bridges(gen, s, s, np.linspace(0, 1, 17))
        assert np.array_equal(w1.values, w2.values)

    def test_ordering_many_seeds(self):
        s1 = BridgeSpec(3, 0.0, 0.0, 1.0, 0.0)
        s2 = BridgeSpec(3, 0.0, 1.0, 1.0, 1.0)
        times = np.linspace(0, 1, 33)
        worst = -np.inf
        for seed in range(300):
            g = RngStream(seed, 77).generator()
            w1, w2 = sample_coupled_bridges(g, s1, s2, times, n_steps=256)
            worst = max(worst, float((w1.values - w2.values).max()))
        assert worst <= 1e-9

    def test_upper_marginal_correct(self, gen):
        s1 = BridgeSpec(3, 0.0, 0.0, 1.0, 0.0)
        s2 = BridgeSpec(3, 0.0, 1.0, 1.0, 1.0)
        mid = np.array(
            [sample_coupled_bridges(gen, s1, s2, np.array([0.5]), n_steps=512)[1].values[0]
             for _ in range(4000)]
        )
        exact = np.array([sample_bessel_bridge(gen, s2, [0.5]).values[0] for _ in range(4000)])
        assert stats.ks_2samp(mid, exact).pvalue > 0.01

    def test_rejects_bad_ordering(self, gen):
        s1 = BridgeSpec(3, 0.0, 1.0, 1.0, 0.0)
        s2 = BridgeSpec(3, 0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            sample_coupled_bridges(gen, s1, s2, [0.5])


class TestWilliams:
    def test_minimum_uniform(self, gen):
        # all-time minimum: fine grid on [0, 1] plus the exact Markov tail
        # draw (the infimum of the continuation is uniform below the end value)
        times = np.linspace(0.0, 1.0, 4001)
        mins = []
        for _ in range(3000):
            p = williams_sample(gen, 1.0, times)
            mins.append(min(p.values.min(), gen.uniform() * p.values[-1]))
        assert stats.ks_1samp(np.array(mins), stats.uniform.cdf).pvalue > 0.01

    def test_cross_sampler_agreement(self, gen):
        a = np.array([williams_sample(gen, 1.0, [1.0]).values[0] for _ in range(10_000)])
        b = np.array([sample_bes(gen, 3, 1.0, 0.0, [1.0]).values[0] for _ in range(10_000)])
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_rejects_nonpositive_start(self, gen):
        with pytest.raises(ValueError):
            williams_sample(gen, 0.0, [1.0])
