import logging

import numpy as np
import pytest
import scipy.sparse as sp

from brwnav import (
    Graph,
    UnreachableNodeError,
    gamma_sweep,
    histogram,
    mfpt,
    monte_carlo_mfpt,
    shortest_paths,
    solve_navigation,
    sp_policy,
    urw_kernel,
)
from brwnav.baselines import Policy

from conftest import KARATE_TARGET, cycle4, path3


class TestMfpt:
    def test_deterministic_chain(self):
        g = path3()
        fld = mfpt(sp_policy(g, "t"), g.index_of("t"))
        assert fld.values.tolist() == [2.0, 1.0, 0.0]
        assert fld.rounded.tolist() == [2, 1, 0]

    def test_unbiased_walk_on_chain(self):
        # hand-solved system: m_b = 1 + m_a/2, m_a = 1 + m_b
        g = path3()
        fld = mfpt(urw_kernel(g, "t"), g.index_of("t"))
        assert fld.values[g.index_of("b")] == pytest.approx(3.0, abs=1e-10)
        assert fld.values[g.index_of("a")] == pytest.approx(4.0, abs=1e-10)

    def test_karate_high_gamma_rounds_to_hops(self, karate_weighted):
        _, _, fld, _ = solve_navigation(karate_weighted, KARATE_TARGET, 50.0)
        hops = shortest_paths(karate_weighted, KARATE_TARGET).hops
        assert np.array_equal(fld.rounded, hops)

    def test_residual_small(self, karate_weighted):
        fld = mfpt(urw_kernel(karate_weighted, KARATE_TARGET),
                   karate_weighted.index_of(KARATE_TARGET))
        assert fld.residual < 1e-8
        assert fld.values[fld.target] == 0.0
        non_target = np.delete(fld.values, fld.target)
        assert np.all(non_target >= 1.0)

    def test_custom_cost_vector(self):
        g = path3()
        cost = np.array([5.0, 2.0, 0.0])
        fld = mfpt(sp_policy(g, "t"), g.index_of("t"), cost=cost)
        assert fld.values[g.index_of("b")] == pytest.approx(2.0)
        assert fld.values[g.index_of("a")] == pytest.approx(7.0)

    def test_unreachable_node_named(self):
        g = path3()
        a, b, t = (g.index_of(x) for x in ("a", "b", "t"))
        rows = np.zeros((3, 3))
        rows[a, b] = 1.0
        rows[b, a] = 1.0  # a and b bounce forever
        rows[t, t] = 1.0
        trapped = Policy(kernel=sp.csr_array(rows), targets=frozenset([t]))
        with pytest.raises(UnreachableNodeError) as exc_info:
            mfpt(trapped, t)
        assert exc_info.value.node in (a, b)

    @pytest.mark.parametrize("builder,target", [(path3, "t"), (cycle4, "c")])
    def test_policy_ordering(self, builder, target, karate_weighted):
        for g, tgt in [(builder(), target), (karate_weighted, KARATE_TARGET)]:
            t = g.index_of(tgt)
            urw = mfpt(urw_kernel(g, tgt), t).values
            _, _, opt, _ = solve_navigation(g, tgt, 50.0)
            hops = shortest_paths(g, tgt).hops
            assert np.all(urw >= opt.values - 1e-6)
            assert np.all(opt.values >= hops - 1e-6)


class TestMonteCarlo:
    def test_deterministic_chain_zero_variance(self):
        g = path3()
        est = monte_carlo_mfpt(sp_policy(g, "t"), g.index_of("t"), walkers=200, seed=3)
        order = {int(s): i for i, s in enumerate(est.sources)}
        assert est.mean[order[g.index_of("a")]] == 2.0
        assert est.mean[order[g.index_of("b")]] == 1.0
        assert np.all(est.stderr == 0.0)
        assert est.truncated == 0

    def test_unbiased_chain_matches_analytic(self):
        g = path3()
        t = g.index_of("t")
        pol = urw_kernel(g, "t")
        analytic = mfpt(pol, t).values
        est = monte_carlo_mfpt(pol, t, walkers=100_000, seed=11)
        for i, src in enumerate(est.sources):
            diff = abs(est.mean[i] - analytic[int(src)])
            assert diff <= 3.0 * est.stderr[i] + 1e-9

    def test_karate_urw_within_three_sigma(self, karate_weighted):
        t = karate_weighted.index_of(KARATE_TARGET)
        pol = urw_kernel(karate_weighted, KARATE_TARGET)
        analytic = mfpt(pol, t).values
        est = monte_carlo_mfpt(pol, t, walkers=20_000, seed=5)
        for i, src in enumerate(est.sources):
            diff = abs(est.mean[i] - analytic[int(src)])
            assert diff <= 3.0 * est.stderr[i] + 1e-9

    def test_truncation_reported(self):
        g = path3()
        pol = urw_kernel(g, "t")
        est = monte_carlo_mfpt(pol, g.index_of("t"), walkers=500, seed=0, step_cap=1)
        assert est.truncated > 0
        assert est.truncation_fraction == pytest.approx(est.truncated / 1000)

    def test_seed_reproducibility(self, karate_weighted):
        t = karate_weighted.index_of(KARATE_TARGET)
        pol = urw_kernel(karate_weighted, KARATE_TARGET)
        a = monte_carlo_mfpt(pol, t, walkers=500, seed=42)
        b = monte_carlo_mfpt(pol, t, walkers=500, seed=42)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.stderr, b.stderr)


class TestHistogram:
    def test_constant_vector_single_bin(self):
        edges, counts = histogram(np.full(7, 3.0), bins=20)
        assert counts.sum() == 7
        assert (counts > 0).sum() == 1

    def test_twenty_values_twenty_bins(self):
        edges, counts = histogram(np.arange(20, dtype=float), bins=20)
        assert counts.tolist() == [1] * 20
        assert edges[0] == 0.0

    def test_zero_vector(self):
        edges, counts = histogram(np.zeros(5), bins=4)
        assert counts.sum() == 5
        assert (counts > 0).sum() == 1

    def test_counts_cover_all_values(self, karate_weighted):
        hops = shortest_paths(karate_weighted, KARATE_TARGET).hops
        _, counts = histogram(hops.astype(float), bins=20)
        assert counts.sum() == karate_weighted.n

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            histogram(np.array([]))


class TestGammaSweep:
    def test_karate_three_gammas(self, karate_weighted):
        rows = gamma_sweep(karate_weighted, KARATE_TARGET, [0.0, 2.5, 50.0])
        assert [r.gamma for r in rows] == [0.0, 2.5, 50.0]
        assert rows[0].trajectory_bound == 0.0
        assert rows[1].trajectory_bound == pytest.approx(13.0, abs=2.0)
        assert rows[2].trajectory_bound == pytest.approx(15.0, abs=2.0)
        assert all(r.coding_decision == "incremental" for r in rows)
        assert rows[0].mean_mfpt > rows[1].mean_mfpt > rows[2].mean_mfpt

    def test_rows_sorted_even_if_input_is_not(self, karate_weighted):
        rows = gamma_sweep(karate_weighted, KARATE_TARGET, [50.0, 0.0, 2.5])
        assert [r.gamma for r in rows] == [0.0, 2.5, 50.0]

    def test_duplicates_warn_and_collapse(self, karate_weighted, caplog):
        with caplog.at_level(logging.WARNING, logger="brwnav.analysis"):
            rows = gamma_sweep(karate_weighted, KARATE_TARGET, [2.5, 2.5])
        assert len(rows) == 1
        assert any("duplicate" in r.message for r in caplog.records)

    def test_empty_gamma_list(self, karate_weighted):
        assert gamma_sweep(karate_weighted, KARATE_TARGET, []) == []

    def test_bitwise_reproducible(self, karate_weighted):
        a = gamma_sweep(karate_weighted, KARATE_TARGET, [0.5, 5.0])
        b = gamma_sweep(karate_weighted, KARATE_TARGET, [0.5, 5.0])
        assert a == b

    def test_warm_start_agrees_with_cold(self, karate_weighted):
        warm = gamma_sweep(karate_weighted, KARATE_TARGET, [2.5, 50.0], warm_start=True)
        cold = gamma_sweep(karate_weighted, KARATE_TARGET, [2.5, 50.0], warm_start=False)
        for rw, rc in zip(warm, cold):
            assert rw.trajectory_bound == pytest.approx(rc.trajectory_bound, abs=1e-9)
            assert rw.mean_mfpt == pytest.approx(rc.mean_mfpt, abs=1e-9)


def make_test_graphs(karate_weighted):
    star = Graph.from_edges([("c", f"l{i}") for i in range(5)])
    return [
        (path3(), "t"),
        (cycle4(), "c"),
        (star, "l0"),
        (karate_weighted, KARATE_TARGET),
    ]


class TestOrderingInvariant:
    def test_urw_above_optimal_above_hops(self, karate_weighted):
        for g, target in make_test_graphs(karate_weighted):
            t = g.index_of(target)
            urw = mfpt(urw_kernel(g, target), t).values
            _, _, opt, _ = solve_navigation(g, target, 50.0)
            hops = shortest_paths(g, target).hops
            assert np.all(urw >= opt.values - 1e-6), target
            assert np.all(opt.values >= hops - 1e-6), target
