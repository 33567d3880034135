import numpy as np
import pytest

import splithc as s
from splithc.ptree import PartialHCTree

# reference tree used throughout: a fixed 16-leaf shape
REF = s.sample_tree_shape(16, 42, "random")


def _fullify(tree):
    """Partial tree with only singleton leaves, mirroring a full tree."""
    return PartialHCTree.from_nested(tree.to_nested(), tau=4)


def test_full_tree_is_strongly_consistent():
    p = _fullify(REF)
    rep = s.check_strong_consistency(p, REF)
    assert rep.ok, rep.violations
    assert s.check_weak_consistency(p, REF).ok


def test_supervertex_maximal_subtree_consistent():
    # collapse one maximal subtree of the reference into a super-vertex
    node = None
    for x in range(REF.n_nodes):
        if not REF.is_leaf(x) and 2 <= REF.leaf_count_under(x) <= 5 and x != REF.root:
            node = x
            break
    vs = REF.leaves_under(node)
    rest = np.setdiff1d(np.arange(16), vs)
    nested = [{"super": [int(v) for v in vs]},
              _nest_balanced([int(v) for v in rest])]
    p = PartialHCTree.from_nested(nested, tau=16)
    rep = s.check_strong_consistency(p, REF)
    # the super-vertex satisfies the contraction; preservation may still fail
    assert not any("maximal subtree" in v and "super-vertex" in v for v in rep.violations)


def _nest_balanced(ids):
    if len(ids) == 1:
        return ids[0]
    h = (len(ids) + 1) // 2
    return [_nest_balanced(ids[:h]), _nest_balanced(ids[h:])]


def test_non_maximal_supervertex_flagged():
    # chop a maximal subtree's vertex set so it cannot be maximal
    node = REF.root
    left = int(REF.left[node])
    vs = REF.leaves_under(left)
    assert len(vs) >= 3
    bad_set = vs[:-1]
    rest = np.setdiff1d(np.arange(16), bad_set)
    nested = [{"super": [int(v) for v in bad_set]},
              {"super": [int(v) for v in rest]}]
    p = PartialHCTree.from_nested(nested, tau=16)
    rep = s.check_strong_consistency(p, REF)
    assert not rep.ok
    assert any("not a maximal subtree" in v for v in rep.violations)


def test_spine_supervertex_weakly_but_not_strongly_consistent():
    # union of consecutive small-side subtrees along the root spine: out-degree 2
    order = REF.small_tree_order(np.arange(16))
    spine = np.concatenate(order.levels[:2])
    hole = np.setdiff1d(np.arange(16), spine)
    assert REF.leaf_count_under(REF.lca_set(spine)) > len(spine)  # not maximal
    nested = [{"super": [int(v) for v in spine]},
              _nest_subtree(hole)]
    p = PartialHCTree.from_nested(nested, tau=16)
    assert not s.check_strong_consistency(p, REF).ok
    rep = s.check_weak_consistency(p, REF)
    assert rep.ok, rep.violations


def _nest_subtree(vs):
    """Nested structure copying the reference tree's shape on a maximal set."""
    r = REF.restrict(vs)
    return r.to_nested()


def test_three_fragment_supervertex_flagged_weak():
    # vertices from three subtrees that do not form a two-edge contraction
    order = REF.small_tree_order(np.arange(16))
    assert len(order.levels) >= 4
    frag = np.concatenate([order.levels[0], order.levels[2]])
    hole = np.setdiff1d(np.arange(16), frag)
    nested = [{"super": [int(v) for v in frag]},
              {"super": [int(v) for v in hole]}]
    p = PartialHCTree.from_nested(nested, tau=16)
    rep = s.check_weak_consistency(p, REF)
    assert not rep.ok
    assert any("out-degree" in v for v in rep.violations)


def test_strong_implies_weak_on_builder_output():
    for seed in range(5):
        tree = s.sample_tree_shape(48, seed)
        oracle = s.SplittingOracle(tree, s.OracleConfig(p=1.0, seed=seed),
                                   track_distinct=False)
        params = s.SplitParams.desk(48, seed=seed, exact_counters=True)
        partial, _ = s.build_strong_partial(np.arange(48), oracle, params)
        assert s.check_strong_consistency(partial, tree).ok
        assert s.check_weak_consistency(partial, tree).ok


def test_partition_violation_detected():
    nested = [{"super": [0, 1, 2]}, {"super": [3, 4]}]
    small_ref = s.sample_tree_shape(6, 0)
    p = PartialHCTree.from_nested(nested, tau=6)
    rep = s.check_weak_consistency(p, small_ref)
    assert not rep.ok
    assert any("partition" in v for v in rep.violations)


def test_serialization_roundtrip():
    nested = [[{"super": [0, 1, 2]}, 3], [4, {"super": [5, 6]}]]
    p = PartialHCTree.from_nested(nested, tau=4)
    again = PartialHCTree.from_json(p.to_json(), tau=4)
    assert again.to_nested() == p.to_nested()
    assert p.n_leaves == 4 and p.n_vertices == 7
    assert p.max_super_size() == 3


def test_leaf_lookup_and_lca():
    nested = [[{"super": [0, 1]}, 2], {"super": [3, 4]}]
    p = PartialHCTree.from_nested(nested, tau=3)
    assert p.leaf_of_vertex(0) == p.leaf_of_vertex(1)
    assert p.leaf_of_vertex(2) != p.leaf_of_vertex(0)
    assert p.leaf_count_under_vertices(0, 2) == 3
    assert p.leaf_count_under_vertices(0, 4) == 5
