import math

import numpy as np
import pytest
from scipy import stats

from annealed_ising.cm12 import mn_pmf
from annealed_ising.graphs import (
    DegreeSequence,
    Multigraph,
    WeightSequence,
    build_weights,
    cycle_count_cm2,
    decompose,
    first_cycle_law_cm2,
    grg_edge_prob,
    sample_cm,
    sample_cm_graph,
    sample_grg,
    sample_torus_vertex_counts,
    spawn_rngs,
    write_values,
)


class TestWeights:
    def test_constant(self):
        w = build_weights("constant", 4, w=2)
        np.testing.assert_array_equal(w.weights, [2, 2, 2, 2])
        assert w.ell == 8 and w.nu == 2

    def test_powerlaw_formula(self):
        w = build_weights("powerlaw", 4, tau=5, w_min=1)
        expected = (4 / np.arange(1, 5)) ** 0.25
        np.testing.assert_allclose(w.weights, expected, rtol=1e-15)
        assert w.weights[0] == pytest.approx(math.sqrt(2))
        assert w.nu == pytest.approx(np.sum(expected**2) / np.sum(expected), rel=1e-12)

    def test_heavy_tail_warns(self):
        with pytest.warns(RuntimeWarning):
            build_weights("powerlaw", 10, tau=2.5)

    def test_file_roundtrip_and_rejection(self, tmp_path):
        path = tmp_path / "w.txt"
        write_values(path, [1.5, 2.0, 0.25])
        np.testing.assert_array_equal(build_weights("file", path=path).weights, [1.5, 2.0, 0.25])
        path.write_text("1.0\n-2.0\n")
        with pytest.raises(ValueError):
            build_weights("file", path=path)

    @pytest.mark.parametrize("bad", [[1.0, 0.0], [-1.0], []])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            WeightSequence(np.array(bad))


class TestGrg:
    def test_edge_probabilities(self):
        assert grg_edge_prob(WeightSequence(np.array([1.0, 1.0])), 0, 1) == pytest.approx(1 / 3)
        assert grg_edge_prob(build_weights("constant", 4, w=2), 1, 3) == pytest.approx(1 / 3)
        assert grg_edge_prob(WeightSequence(np.array([1e-12, 1.0, 1.0])), 0, 1) < 1e-11
        with pytest.raises(ValueError):
            grg_edge_prob(build_weights("constant", 3), 1, 1)

    def test_single_vertex_has_no_edges(self):
        assert sample_grg(build_weights("constant", 1), 0).edges.shape == (0, 2)

    def test_edge_frequency(self):
        w = WeightSequence(np.array([1.0, 1.0]))
        rng = np.random.default_rng(1)
        hits = sum(sample_grg(w, rng).edges.shape[0] for _ in range(100_000))
        se = math.sqrt((1 / 3) * (2 / 3) / 100_000)
        assert abs(hits / 100_000 - 1 / 3) < 3 * se

    def test_deterministic(self):
        w = build_weights("powerlaw", 30, tau=4)
        np.testing.assert_array_equal(sample_grg(w, 7).edges, sample_grg(w, 7).edges)

    def test_simple_graph(self):
        g = sample_grg(build_weights("constant", 40, w=20), 3)
        assert np.all(g.edges[:, 0] < g.edges[:, 1])
        assert len({tuple(e) for e in g.edges}) == len(g.edges)


class TestCm:
    def test_forced_cases(self):
        d = sample_cm([2], 0)
        assert d.torus_lengths == (1,) and d.M == 1
        d = sample_cm([1, 1], 0)
        assert d.line_lengths == (2,) and d.K_torus == 0

    def test_odd_total_rejected(self):
        with pytest.raises(ValueError):
            sample_cm([1, 2], 0)

    @pytest.mark.parametrize("n1,n2", [(2, 0), (4, 3), (10, 7), (30, 50)])
    def test_decomposition_invariants(self, n1, n2, rng):
        for _ in range(20):
            d = sample_cm(DegreeSequence.from_counts(n1, n2), rng)
            assert d.N == n1 + n2
            assert d.K_line == n1 // 2
            assert all(n >= 2 for n in d.line_lengths)

    def test_pure_degree_two_only_tori(self, rng):
        d = sample_cm([2] * 25, rng)
        assert d.K_line == 0 and d.M == 25

    def test_pure_degree_one_only_dimers(self, rng):
        d = sample_cm([1] * 12, rng)
        assert d.line_lengths == (2,) * 6

    def test_self_loop_frequency(self):
        n = 100_000
        hits = np.count_nonzero(sample_torus_vertex_counts([1, 1, 2], n, 3) == 1)
        assert abs(hits / n - 1 / 3) < 3 * math.sqrt(2 / 9 / n)

    @pytest.mark.parametrize("n1,n2", [(4, 3), (6, 9), (2, 12)])
    def test_fast_torus_counts_against_pmf(self, n1, n2):
        n = 100_000
        counts = np.bincount(sample_torus_vertex_counts(DegreeSequence.from_counts(n1, n2), n, 11), minlength=n2 + 1)
        assert stats.chisquare(counts, n * mn_pmf(n1, n2)).pvalue > 0.001

    def test_decomposition_sampler_against_pmf(self):
        rng = np.random.default_rng(12)
        n = 20_000
        counts = np.bincount([sample_cm(DegreeSequence.from_counts(4, 3), rng).M for _ in range(n)], minlength=4)
        assert stats.chisquare(counts, n * mn_pmf(4, 3)).pvalue > 0.001

    def test_fast_counts_reject_degree_three(self):
        with pytest.raises(ValueError):
            sample_torus_vertex_counts([1, 3, 2], 5)

    def test_decompose_mixed_graph(self):
        g = Multigraph(6, np.array([[0, 1], [1, 2], [3, 4], [4, 3], [5, 5]]))
        d = decompose(g)
        assert d.line_lengths == (3,) and d.torus_lengths == (1, 2)
        assert d.to_csv().splitlines()[0] == "kind,length"

    def test_cm12_degree_sequence(self):
        d = DegreeSequence.cm12(10, 0.35)
        assert (d.n1, d.n2) == (7, 3) and d.ell == 13


class TestCycleLaws:
    def test_cycle_count_means(self):
        assert cycle_count_cm2(1).mean == 1
        assert cycle_count_cm2(2).mean == pytest.approx(4 / 3)

    def test_cycle_count_sampler(self):
        cc = cycle_count_cm2(100)
        draws = cc.sample(100_000, rng=np.random.default_rng(5))
        assert abs(draws.mean() - cc.mean) < 3 * draws.std() / math.sqrt(draws.size)

    def test_first_cycle_law_small(self):
        np.testing.assert_allclose(first_cycle_law_cm2(1), [1.0])
        np.testing.assert_allclose(first_cycle_law_cm2(2), [1 / 3, 2 / 3], rtol=1e-15)

    @pytest.mark.parametrize("N", [1, 7, 100, 5000, 100_000])
    def test_first_cycle_law_normalised(self, N):
        q = first_cycle_law_cm2(N)
        assert np.all(q >= 0) and abs(q.sum() - 1) < 1e-12

    def test_first_cycle_law_scaling_limit(self):
        N = 2000
        cdf = np.cumsum(first_cycle_law_cm2(N))
        x = np.arange(1, N + 1) / N
        limit = 1 - np.sqrt(1 - x)
        assert np.max(np.abs(cdf - limit)) < 0.02

    def test_first_cycle_law_matches_simulation(self):
        rng = np.random.default_rng(9)
        N = 6
        lengths = []
        for _ in range(20_000):
            g = sample_cm_graph([2] * N, rng)
            adj = {}
            for u, v in g.edges:
                adj.setdefault(u, []).append(v)
                adj.setdefault(v, []).append(u)
            seen, stack = {0}, [0]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            lengths.append(len(seen))
        counts = np.bincount(lengths, minlength=N + 1)[1:]
        assert stats.chisquare(counts, 20_000 * first_cycle_law_cm2(N)).pvalue > 0.001


def test_spawned_generators_are_independent():
    a, b = spawn_rngs(123, 2)
    assert a.random() != b.random()
    c, _ = spawn_rngs(123, 2)
    assert c.random() == spawn_rngs(123, 2)[0].random()
