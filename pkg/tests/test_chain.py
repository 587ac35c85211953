import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from majorant.chain import (
    PsiState,
    ResourceLimitError,
    assemble_paths,
    evolve_psi,
    evolve_psi_batch,
    evolve_psi_hull,
    query_chain,
    sample_chain_values,
    sample_psi_given_x,
    sample_psi_given_x_batch,
    sample_vertex_chain,
)
from majorant.densities import chi5_cdf
from majorant.distributions import norm_cdf, norm_pdf
from majorant.hull import HorizonError
from majorant.rng import RngStream


def slope_marginal_cdf(a):
    """CDF of K'(1): integrates the three-variable density over (b, y).

    Closed form 2 Phi(a) - 1 - 2 a^2 (1 - Phi(a)) + 2 a phi(a), verified
    against direct quadrature below before use.
    """
    a = np.asarray(a, dtype=float)
    return np.clip(2 * norm_cdf(a) - 1 - 2 * a**2 * (1 - norm_cdf(a)) + 2 * a * norm_pdf(a), 0, 1)


def test_slope_marginal_cdf_matches_quadrature():
    def pdf(a):
        return quad(lambda s: 2 * s * (s - a) ** 2 * norm_pdf(s), a, np.inf)[0]

    for a in (0.2, 0.7, 1.5):
        num = quad(pdf, 0, a)[0]
        assert slope_marginal_cdf(a) == pytest.approx(num, abs=1e-9)


class TestVertexChain:
    def test_structure(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=2.0, delta=0.01)
        assert np.all(np.diff(chain.slopes) < 0)
        assert np.all(chain.slopes > 0)
        assert np.all(np.diff(chain.vertices) > 0)
        assert chain.vertices[-1] > 2.0
        assert chain.vertices[0] < 0.01

    def test_rejects_bad_params(self, gen):
        with pytest.raises(ValueError):
            sample_vertex_chain(gen, b=0.0, horizon=1.0, delta=0.1)
        with pytest.raises(ValueError):
            sample_vertex_chain(gen, b=1.0, horizon=1.0, delta=2.0)

    def test_duration_conditional_mean(self, gen):
        # T alpha^2 is chi-square with one degree of freedom
        alphas, durations = [], []
        while len(alphas) < 100_000:
            c = sample_vertex_chain(gen, b=1.0, horizon=1.0, delta=0.01)
            alphas.extend(c.slopes.tolist())
            durations.extend(np.diff(c.vertices).tolist())
        scaled = np.array(durations) * np.array(alphas) ** 2
        se = math.sqrt(2.0 / len(scaled))
        assert abs(scaled.mean() - 1.0) < 3 * se

    def test_slope_marginal_at_one(self):
        cs = sample_chain_values(RngStream(11).generator(), [1.0], 100_000)
        res = stats.ks_1samp(cs.a[:, 0], slope_marginal_cdf)
        assert res.pvalue > 0.01


class TestAssemble:
    def test_vertex_gap_zero_and_orderings(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=2.0, delta=0.01)
        inner = chain.vertices[(chain.vertices > 0.05) & (chain.vertices < 1.9)]
        times = np.unique(np.concatenate([np.linspace(0.05, 1.9, 200), inner]))
        b, k, x = assemble_paths(gen, chain, times)
        gap = k.values - b.values
        assert np.all(gap >= 0)
        assert np.all(x.values >= k.values)
        assert np.all(k.values >= 0)
        for v in inner:
            i = int(np.searchsorted(times, v))
            assert gap[i] == 0.0
        interior = ~np.isin(times, inner)
        assert np.all(gap[interior] > 0)

    def test_majorant_concave_at_vertices(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=2.0, delta=0.01)
        kv = chain.kvals
        vv = chain.vertices
        slopes = np.diff(kv) / np.diff(vv)
        assert np.all(np.diff(slopes) < 0)

    def test_coverage_errors(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=1.0, delta=0.01)
        with pytest.raises(HorizonError):
            assemble_paths(gen, chain, [0.001, 0.5])
        with pytest.raises(HorizonError):
            assemble_paths(gen, chain, [0.5, 5.0])

    def test_one_point_law_chi5(self):
        cs = sample_chain_values(RngStream(2).generator(), [1.0], 100_000)
        assert stats.ks_1samp(cs.X[:, 0], chi5_cdf).pvalue > 0.01

    def test_assemble_matches_vectorized_sampler(self, gen):
        # the per-chain assembly and the batch sampler realize the same law
        vals = []
        for _ in range(4000):
            chain = sample_vertex_chain(gen, b=1.0, horizon=1.5, delta=0.05)
            _, _, x = assemble_paths(gen, chain, [1.0])
            vals.append(x.values[0])
        cs = sample_chain_values(gen, [1.0], 20_000)
        assert stats.ks_2samp(np.array(vals), cs.X[:, 0]).pvalue > 0.01


class TestQueryChain:
    def test_segment_fields(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=2.0, delta=0.01)
        g, d, k, kp, icpt = query_chain(chain, 1.0)
        i = np.searchsorted(chain.vertices, 1.0, side="right") - 1
        assert g == chain.vertices[i] and d == chain.vertices[i + 1]
        assert kp == chain.slopes[i]
        assert g < 1.0 < d

    def test_intercept_constant_on_segment(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=2.0, delta=0.01)
        g, d, _, _, i1 = query_chain(chain, 1.0)
        t2 = g + 0.9 * (d - g)
        *_, i2 = query_chain(chain, t2)
        assert i1 == pytest.approx(i2, rel=1e-9)

    def test_outside_range(self, gen):
        chain = sample_vertex_chain(gen, b=1.0, horizon=1.0, delta=0.01)
        with pytest.raises(HorizonError):
            query_chain(chain, chain.vertices[-1] + 1.0)

    def test_joint_slope_intercept_chi2(self):
        from majorant.densities import eval_f3

        cs = sample_chain_values(RngStream(3).generator(), [1.0], 100_000)
        a = cs.a[:, 0]
        b = cs.K[:, 0] - a
        edges = np.array([0.0, 0.25, 0.5, 0.8, 1.2, np.inf])
        counts = np.zeros((5, 5))
        probs = np.zeros((5, 5))
        for i in range(5):
            for j in range(5):
                lo_a, hi_a = edges[i], edges[i + 1]
                lo_b, hi_b = edges[j], edges[j + 1]
                counts[i, j] = np.sum((a >= lo_a) & (a < hi_a) & (b >= lo_b) & (b < hi_b))
                probs[i, j] = quad(
                    lambda aa: quad(
                        lambda bb: quad(lambda yy: eval_f3(aa, bb, yy), 0, np.inf)[0],
                        lo_b, min(hi_b, 12),
                    )[0],
                    lo_a, min(hi_a, 12),
                )[0]
        probs /= probs.sum()
        res = stats.chisquare(counts.ravel(), probs.ravel() * counts.sum())
        assert res.pvalue > 0.01


class TestPsiGivenX:
    def test_mixing_weight_bound(self, gen):
        a, k, y, w = sample_psi_given_x_batch(gen, 1.0, 1.0, size=20_000)
        assert np.all(a * 1.0 / 1.0 < 1.0)
        assert np.all(k + y == pytest.approx(1.0))
        assert np.all(w > 0)

    def test_gap_marginal(self, gen):
        z = 1.3
        _, _, y, _ = sample_psi_given_x_batch(gen, 1.0, z, size=100_000)
        cdf = lambda q: np.clip(3 * (q / z) ** 2 - 2 * (q / z) ** 3, 0, 1)
        assert stats.ks_1samp(y, cdf).pvalue > 0.01

    def test_rejects_bad_params(self, gen):
        with pytest.raises(ValueError):
            sample_psi_given_x(gen, 0.0, 1.0)
        with pytest.raises(ValueError):
            sample_psi_given_x(gen, 1.0, -1.0)

    def test_thin_slab_consistency(self):
        z, width = 1.0, 0.02
        gen = RngStream(4).generator()
        direct = sample_psi_given_x_batch(gen, 1.0, z, size=20_000)
        got = {k: [] for k in range(4)}
        for _ in range(4):
            cs = sample_chain_values(gen, [1.0], 300_000)
            sel = (cs.X[:, 0] >= z) & (cs.X[:, 0] <= z + width)
            for j, arr in enumerate((cs.a, cs.K, cs.y, cs.w)):
                got[j].append(arr[sel, 0])
        labels = "akyw"
        for j in range(4):
            meas = np.concatenate(got[j])
            res = stats.ks_2samp(direct[j], meas)
            assert res.pvalue > 0.01, (labels[j], res)


class TestEvolve:
    def test_bridge_pinning(self, gen):
        st = PsiState(a=0.5, k=0.5, y=1.0, w=1.0)
        out = evolve_psi(gen, st, 1.0 - 1e-4)
        assert out.y < 0.05
        assert out.w == pytest.approx(1e-4)

    def test_before_vertex_deterministic_parts(self, gen):
        st = PsiState(a=0.5, k=0.5, y=1.0, w=5.0)
        out = evolve_psi(gen, st, 1.0)
        assert out.a == st.a
        assert out.k == pytest.approx(st.k + st.a * 1.0)
        assert out.w == pytest.approx(4.0)

    def test_infinite_gap_time(self, gen):
        st = PsiState(a=0.3, k=0.4, y=0.6, w=math.inf)
        out = evolve_psi(gen, st, 2.0)
        assert math.isinf(out.w)
        assert out.y > 0

    def test_semigroup_one_point_vs_slab_oracle(self):
        z, width = 1.0, 0.02
        gen = RngStream(6).generator()
        st = sample_psi_given_x_batch(gen, 1.0, z, size=20_000)
        a2, k2, y2, w2 = evolve_psi_batch(gen, st, t=1.0)
        evolved_x2 = k2 + y2
        got = []
        for _ in range(3):
            cs = sample_chain_values(gen, [1.0, 2.0], 250_000)
            sel = (cs.X[:, 0] >= z) & (cs.X[:, 0] <= z + width)
            got.append(cs.X[sel, 1])
        oracle = np.concatenate(got)
        assert stats.ks_2samp(evolved_x2, oracle).pvalue > 0.01

    def test_batch_matches_single(self):
        st = PsiState(a=0.5, k=0.5, y=0.7, w=0.4)
        single = evolve_psi(RngStream(9).generator(), st, 1.0)
        arrs = evolve_psi_batch(
            RngStream(9).generator(),
            (np.array([st.a]), np.array([st.k]), np.array([st.y]), np.array([st.w])),
            t=1.0,
        )
        assert single.a == arrs[0][0] and single.k == arrs[1][0]
        assert single.y == arrs[2][0] and single.w == arrs[3][0]


class TestChainInvariants:
    def test_anchor_invariance(self):
        a = sample_chain_values(RngStream(7).generator(), [1.0], 50_000, b=1.0).X[:, 0]
        b = sample_chain_values(RngStream(8).generator(), [1.0], 50_000, b=5.0).X[:, 0]
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_brownian_scaling(self):
        a = sample_chain_values(RngStream(9).generator(), [4.0], 50_000).X[:, 0] / 2.0
        b = sample_chain_values(RngStream(10).generator(), [1.0], 50_000).X[:, 0]
        assert stats.ks_2samp(a, b).pvalue > 0.01


class TestEvolveHull:
    def test_invariants_on_uncapped_states(self):
        gen = RngStream(13).generator()
        checked = 0
        for _ in range(80):
            a, k, y, w = sample_psi_given_x_batch(gen, 1.0, 1.0, size=1)
            st = PsiState(float(a[0]), float(k[0]), float(y[0]), float(w[0]))
            if st.w >= 1.0:
                continue
            out, info = evolve_psi_hull(gen, st, 1.0, n_block=256, max_doublings=24,
                                        on_cap="truncate")
            if info["capped"]:
                continue
            checked += 1
            assert out.a >= 0          # minorant slope below the drift
            assert out.y >= 0          # minorant below the path
            assert out.w > 0
            mino = info["minorant"]
            assert np.all(np.diff(mino.slopes) > 0)
        assert checked >= 10

    def test_law_approaches_exact_with_resolution(self):
        # the slope coordinate is where discretization bites; the distance
        # to the exact transition shrinks as blocks refine
        st = PsiState(a=1.0, k=0.0, y=0.0, w=1e-9)
        gen = RngStream(14).generator()
        exact = evolve_psi_batch(
            gen,
            (np.full(4000, st.a), np.full(4000, st.k), np.full(4000, st.y), np.full(4000, st.w)),
            t=0.5,
        )[0]
        dists = []
        for n_block in (64, 512):
            vals = np.array(
                [evolve_psi_hull(gen, st, 0.5, n_block=n_block, on_cap="truncate")[0].a
                 for _ in range(700)]
            )
            dists.append(stats.ks_2samp(vals, exact).statistic)
        assert dists[1] < dists[0]

    def test_cap_raises(self):
        gen = RngStream(15).generator()
        st = PsiState(a=0.01, k=0.1, y=0.0, w=1e-6)
        with pytest.raises(ResourceLimitError):
            evolve_psi_hull(gen, st, 1.0, n_block=64, max_doublings=3, on_cap="raise")


def test_projection_budget_shapes():
    from majorant.experiments import bes5_values, projection_study

    n = 500
    reports = projection_study(1, n=n)
    assert len(reports) == 6
    ys = bes5_values(RngStream(0).generator(), [1.0, 2.0], n)
    assert ys.shape == (n, 2)   # n draws at 2 times per process
