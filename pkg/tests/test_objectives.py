import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import splithc as s
from splithc.errors import ValidationError
from conftest import naive_cost


def all_trees_on(n):
    return [s.HCTree.from_nested(t) for t in s.all_tree_shapes(range(n))]


def test_triangle_cost_all_trees(triangle):
    # brute force over all 3 shapes: every tree costs 2 + 3 + 3
    for t in all_trees_on(3):
        assert s.dasgupta_cost(triangle, t).value == 8.0


def test_star_best_cost_is_nine():
    star = s.build_graph(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])
    trees = all_trees_on(4)
    assert len(trees) == 15
    assert min(s.dasgupta_cost(star, t).value for t in trees) == 9.0


def test_triangle_revenue(triangle):
    for t in all_trees_on(3):
        assert s.mw_revenue(triangle, t).value == 1.0


def test_single_edge_revenue_zero():
    g = s.build_graph(2, [(0, 1, 3.0)])
    t = s.HCTree.from_nested([0, 1])
    assert s.mw_revenue(g, t).value == 0.0


def test_cost_matches_naive():
    inst = s.generate_planted(9, 4)
    t = s.sample_tree_shape(9, 77)
    assert s.dasgupta_cost(inst.graph, t).value == pytest.approx(naive_cost(inst.graph, t))


def test_universe_mismatch_rejected(triangle):
    t = s.HCTree.from_nested([[0, 1], [2, 3]])
    with pytest.raises(ValidationError):
        s.dasgupta_cost(triangle, t)


def test_edge_subset_additivity():
    inst = s.generate_planted(10, 5)
    g = inst.graph
    t = s.sample_tree_shape(10, 6)
    rng = np.random.default_rng(0)
    part = rng.integers(0, 3, size=g.m)
    total = s.dasgupta_cost(g, t).value
    pieces = sum(s.dasgupta_cost(g, t, edge_idx=np.flatnonzero(part == k)).value
                 for k in range(3))
    assert pieces == pytest.approx(total, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 32), st.integers(0, 10**6), st.integers(0, 10**6))
def test_identity_rev_plus_cost(n, gseed, tseed):
    inst = s.generate_planted(n, gseed, jitter=0.3)
    t = s.sample_tree_shape(n, tseed)
    assert s.objective_identity_gap(inst.graph, t) <= 1e-9


def test_per_edge_bounds():
    inst = s.generate_planted(12, 8)
    g = inst.graph
    t = s.sample_tree_shape(12, 9)
    cost = s.dasgupta_cost(g, t, breakdown=True)
    rev = s.mw_revenue(g, t, breakdown=True)
    for (u, v, c), (_, _, r) in zip(cost.breakdown, rev.breakdown):
        w = g.weight_matrix()[u, v]
        assert 2 * w <= c <= g.n * w
        assert 0 <= r <= (g.n - 2) * w


def test_edge_partition_by_supervertex():
    inst = s.generate_planted(12, 3)
    g = inst.graph
    # one super-vertex covering everything
    whole = s.PartialHCTree.single_super(np.arange(12), tau=12)
    same, cross = s.edge_partition_by_supervertex(g, whole)
    assert len(cross) == 0 and len(same) == g.m
    # all singletons
    singles = s.PartialHCTree.from_nested(_balanced_nested(list(range(12))), tau=12)
    same2, cross2 = s.edge_partition_by_supervertex(g, singles)
    assert len(same2) == 0 and len(cross2) == g.m
    assert len(same) + len(cross) == g.m


def _balanced_nested(ids):
    if len(ids) == 1:
        return ids[0]
    h = (len(ids) + 1) // 2
    return [_balanced_nested(ids[:h]), _balanced_nested(ids[h:])]


def test_mw_structure_report_perfect():
    n = 64
    inst = s.generate_planted(n, 2)
    oracle = s.SplittingOracle(inst.planted_tree, s.OracleConfig(p=1.0, seed=3),
                               track_distinct=False)
    params = s.SplitParams.desk(n, seed=3, exact_counters=True)
    tree, partial, _ = s.hc_mw(inst.graph, oracle, params)
    rep = s.mw_structure_report(inst.graph, partial, inst.planted_tree, extension=tree)
    assert rep.disjoint_equal_ok
    assert rep.same_floor_ok
    assert rep.nested_deficit_ok
    assert rep.same_floor == n - partial.tau
    assert rep.n_same + rep.n_cross_disjoint + rep.n_cross_nested == inst.graph.m


def test_mw_structure_report_rejects_inconsistent():
    inst = s.generate_planted(16, 2)
    bad = s.PartialHCTree.from_nested(
        [{"super": [0, 5]}, {"super": [x for x in range(16) if x not in (0, 5)]}], tau=16)
    rep = s.check_weak_consistency(bad, inst.planted_tree)
    if rep.ok:
        pytest.skip("random instance happened to make the pair consistent")
    with pytest.raises(ValidationError):
        s.mw_structure_report(inst.graph, bad, inst.planted_tree)
