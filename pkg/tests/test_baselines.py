import numpy as np
import pytest

from brwnav import Graph, shortest_paths, sp_policy, urw_kernel, validate_policy
from brwnav.analysis import mfpt

from conftest import KARATE_TARGET, cycle4, path3
from oracles import bellman_ford_distances, bfs_hop_counts


def random_connected_graph(rng, n, extra_edges, weighted=True):
    edges = []
    for u in range(1, n):
        v = int(rng.integers(0, u))
        w = float(rng.uniform(0.2, 5.0)) if weighted else 1.0
        edges.append((f"n{u}", f"n{v}", w))
    for _ in range(extra_edges):
        u, v = rng.choice(n, size=2, replace=False)
        w = float(rng.uniform(0.2, 5.0)) if weighted else 1.0
        edges.append((f"n{u}", f"n{v}", w))
    return Graph.from_edges(edges)


class TestUrwKernel:
    def test_two_node_graph(self):
        g = Graph.from_edges([("a", "b")])
        pol = urw_kernel(g, "b")
        assert pol.kernel.toarray().tolist() == [[0.0, 1.0], [0.0, 1.0]]

    def test_star_center_uniform(self):
        g = Graph.from_edges([("c", "l1"), ("c", "l2"), ("c", "l3")])
        pol = urw_kernel(g, "l1")
        row = pol.kernel.toarray()[g.index_of("c")]
        assert row[g.index_of("c")] == 0.0
        np.testing.assert_allclose(
            [row[g.index_of(x)] for x in ("l1", "l2", "l3")], [1 / 3] * 3
        )

    def test_karate_hub_row(self, karate):
        pol = urw_kernel(karate, KARATE_TARGET)
        u = karate.index_of("0")
        cols, vals = pol.row(u)
        assert len(cols) == 16
        np.testing.assert_allclose(vals, 1 / 16)

    def test_rows_stochastic_and_absorbing(self, karate_weighted):
        pol = urw_kernel(karate_weighted, KARATE_TARGET)
        validate_policy(pol, karate_weighted)
        sums = np.asarray(pol.kernel.sum(axis=1)).ravel()
        assert np.max(np.abs(sums - 1.0)) <= 1e-12
        t = karate_weighted.index_of(KARATE_TARGET)
        assert pol.kernel[t, t] == 1.0


class TestShortestPaths:
    def test_unit_path(self):
        g = path3()
        fld = shortest_paths(g, "t")
        np.testing.assert_allclose(fld.dist, [2.0, 1.0, 0.0])
        assert fld.hops.tolist() == [2, 1, 0]
        assert fld.path_hops.tolist() == [2, 1, 0]

    def test_weighted_triangle_tie(self):
        # route a->c direct (length 1/1) ties route a->b->c (1/2 + 1/2)
        g = Graph.from_edges([("a", "b", 2.0), ("b", "c", 2.0), ("a", "c", 1.0)])
        fld = shortest_paths(g, "c")
        assert fld.dist[g.index_of("a")] == pytest.approx(1.0)
        preds = {g.labels[v] for v in fld.predecessors[g.index_of("a")]}
        assert preds == {"b", "c"}

    def test_weighted_triangle_single_route(self):
        # direct a->c edge has length 1/0.5 = 2, losing to a->b->c = 1
        g = Graph.from_edges([("a", "b", 2.0), ("b", "c", 2.0), ("a", "c", 0.5)])
        fld = shortest_paths(g, "c")
        assert fld.dist[g.index_of("a")] == pytest.approx(1.0)
        preds = {g.labels[v] for v in fld.predecessors[g.index_of("a")]}
        assert preds == {"b"}
        assert fld.path_hops[g.index_of("a")] == 2

    def test_karate_experiment_target_max_hop(self, karate):
        fld = shortest_paths(karate, KARATE_TARGET)
        assert fld.hops.max() == 3

    def test_target_fields_are_zero(self, karate_weighted):
        fld = shortest_paths(karate_weighted, KARATE_TARGET)
        t = karate_weighted.index_of(KARATE_TARGET)
        assert fld.dist[t] == 0.0
        assert fld.hops[t] == 0
        assert fld.predecessors[t] == ()

    @pytest.mark.parametrize("seed,n,extra", [(0, 10, 5), (1, 25, 15), (2, 50, 30)])
    def test_matches_bellman_ford(self, seed, n, extra):
        g = random_connected_graph(np.random.default_rng(seed), n, extra)
        target = g.labels[0]
        fld = shortest_paths(g, target)
        expected = bellman_ford_distances(g.adjacency.toarray(), g.index_of(target))
        np.testing.assert_allclose(fld.dist, expected, rtol=1e-12)

    def test_hops_match_bfs_oracle(self, karate):
        fld = shortest_paths(karate, KARATE_TARGET)
        expected = bfs_hop_counts(karate.adjacency.toarray(), karate.index_of(KARATE_TARGET))
        assert fld.hops.tolist() == expected.tolist()

    def test_relaxation_fixed_point(self, karate_weighted):
        g = karate_weighted
        fld = shortest_paths(g, KARATE_TARGET)
        t = g.index_of(KARATE_TARGET)
        for u in range(g.n):
            if u == t:
                continue
            options = [
                1.0 / g.adjacency[u, v] + fld.dist[v] for v in g.neighbors(u)
            ]
            assert fld.dist[u] == pytest.approx(min(options), rel=1e-12)


class TestSpPolicy:
    def test_unique_path(self):
        g = path3()
        pol = sp_policy(g, "t")
        assert pol.kernel[g.index_of("a"), g.index_of("b")] == 1.0
        assert pol.kernel[g.index_of("b"), g.index_of("t")] == 1.0

    def test_four_cycle_split(self):
        g = cycle4()
        pol = sp_policy(g, "c")
        a = g.index_of("a")
        assert pol.kernel[a, g.index_of("b")] == pytest.approx(0.5)
        assert pol.kernel[a, g.index_of("d")] == pytest.approx(0.5)

    def test_triangle_tie_spreads_uniformly(self):
        g = Graph.from_edges([("a", "b", 2.0), ("b", "c", 2.0), ("a", "c", 1.0)])
        pol = sp_policy(g, "c")
        a = g.index_of("a")
        assert pol.kernel[a, g.index_of("b")] == pytest.approx(0.5)
        assert pol.kernel[a, g.index_of("c")] == pytest.approx(0.5)

    def test_support_inside_predecessors_inside_edges(self, karate_weighted):
        g = karate_weighted
        fld = shortest_paths(g, KARATE_TARGET)
        pol = sp_policy(g, KARATE_TARGET, fld)
        validate_policy(pol, g)
        t = g.index_of(KARATE_TARGET)
        for u in range(g.n):
            if u == t:
                continue
            cols, vals = pol.row(u)
            support = {int(v) for v, p in zip(cols, vals) if p > 0}
            assert support <= set(fld.predecessors[u])
            assert support <= {int(v) for v in g.neighbors(u)}

    @pytest.mark.parametrize("seed", [3, 4, 5])
    def test_mfpt_equals_hops_on_trees(self, seed):
        # trees have unique shortest paths, so the policy walk is the path
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, int(rng.integers(5, 20)), 0, weighted=False)
        target = g.labels[int(rng.integers(0, g.n))]
        fld = shortest_paths(g, target)
        pol = sp_policy(g, target, fld)
        res = mfpt(pol, g.index_of(target))
        assert np.array_equal(res.values, fld.hops.astype(float))
