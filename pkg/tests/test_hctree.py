import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import splithc as s
from splithc.errors import ValidationError
from conftest import naive_lca, naive_splits_away

ABC = s.HCTree.from_nested([[0, 1], 2])            # ((a,b),c)
CAT4 = s.HCTree.from_nested([[[0, 1], 2], 3])      # (((a,b),c),d)
BAL4 = s.HCTree.from_nested([[0, 1], [2, 3]])      # ((a,b),(c,d))


def random_tree(n, seed):
    return s.sample_tree_shape(n, seed, "random")


def test_lca_examples():
    cherry = ABC.lca(0, 1)
    assert sorted(ABC.leaves_under(cherry)) == [0, 1]
    assert ABC.lca(0, 2) == ABC.root
    assert ABC.lca(0, 0) == ABC.leaf_node_of[0]


def test_lca_matches_naive_walk():
    t = random_tree(24, 3)
    for u, v in itertools.combinations(range(24), 2):
        assert t.lca(u, v) == naive_lca(t, u, v)


def test_lca_many_matches_scalar():
    t = random_tree(40, 9)
    pairs = np.array(list(itertools.combinations(range(40), 2)))
    zs = t.lca_many(pairs[:, 0], pairs[:, 1])
    for (u, v), z in zip(pairs, zs):
        assert int(z) == t.lca(int(u), int(v))


def test_leaves_under_and_nonleaves():
    assert sorted(ABC.leaves_under(ABC.root)) == [0, 1, 2]
    assert ABC.nonleaves_count(ABC.root) == 0
    leaf = int(ABC.leaf_node_of[1])
    assert list(ABC.leaves_under(leaf)) == [1]
    assert ABC.nonleaves_count(leaf) == 2
    cherry = ABC.lca(0, 1)
    assert ABC.nonleaves_count(cherry) == 1


def test_splits_away_examples():
    assert ABC.splits_away(0, 1, 2) == 2
    assert CAT4.splits_away(0, 2, 3) == 3
    with pytest.raises(ValidationError):
        ABC.splits_away(0, 0, 2)


def test_splits_away_caterpillar_order():
    n = 10
    tree = s.HCTree.from_nested(_caterpillar_nested(n))
    for i, j, k in itertools.combinations(range(n), 3):
        assert tree.splits_away(i, j, k) == k


def _caterpillar_nested(n):
    node = 0
    for i in range(1, n):
        node = [node, i]
    return node


def test_splits_away_matches_naive():
    t = random_tree(12, 7)
    for trip in itertools.combinations(range(12), 3):
        assert t.splits_away(*trip) == naive_splits_away(t, *trip)


def test_internal_count_bound():
    for seed in range(5):
        t = random_tree(33, seed)
        assert t.internal_count <= t.n_leaves


def test_composable_examples():
    assert BAL4.is_single_composable([0, 1, 2, 3])
    assert BAL4.is_single_composable([2])
    assert BAL4.is_composable([0, 2])
    assert not BAL4.is_single_composable([0, 2])
    assert len(BAL4.decompose([0, 2])) == 2


def test_restrict_identity():
    t = random_tree(9, 2)
    r = t.restrict(np.arange(9))
    assert r.to_nested() == t.to_nested()


def test_restrict_by_hand():
    r = CAT4.restrict([0, 1, 3])
    assert r.to_nested() == [[0, 1], 3]


def test_restrict_rejects_small():
    with pytest.raises(ValidationError):
        CAT4.restrict([0])


def test_restrict_preserves_split_order():
    for seed in range(4):
        t = random_tree(10, seed)
        rng = np.random.default_rng(seed)
        for _ in range(12):
            k = int(rng.integers(3, 10))
            sub = np.sort(rng.choice(10, size=k, replace=False))
            r = t.restrict(sub)
            for trip in itertools.combinations(sub.tolist(), 3):
                assert t.splits_away(*trip) == r.splits_away(*trip)


def test_restrict_collapse():
    t = random_tree(12, 4)
    big = np.arange(1, 12)
    small = np.array([1, 3, 5, 7, 9])
    once = t.restrict(small)
    twice = t.restrict(big).restrict(small)
    assert once.to_nested() == twice.to_nested()


def test_small_tree_order_balanced_tiebreak():
    # ties go to the child holding the smallest id; the peel recurses into
    # the larger side until a single leaf remains
    order = BAL4.small_tree_order([0, 1, 2, 3])
    assert [lvl.tolist() for lvl in order.levels] == [[0, 1], [2], [3]]
    assert order.first(2).tolist() == [0, 1]
    assert order.last(1).tolist() == [3]


def test_small_tree_order_caterpillar():
    order = CAT4.small_tree_order([0, 1, 2, 3])
    assert [lvl.tolist() for lvl in order.levels] == [[3], [2], [0], [1]]


def test_small_tree_order_properties():
    for seed in range(20):
        n = 8 + seed % 17
        t = random_tree(n, seed)
        order = t.small_tree_order(np.arange(n))
        assert sorted(order.flat().tolist()) == list(range(n))
        assert order.check_halving()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10_000))
def test_laminar_ranges(n, seed):
    t = random_tree(n, seed)
    # every pair of node ranges is nested or disjoint, and children tile parents
    for x in range(t.n_nodes):
        if t.is_leaf(x):
            continue
        l, r = int(t.left[x]), int(t.right[x])
        assert {int(t.lo[x]), int(t.hi[x])} == {int(t.lo[l]), int(t.hi[r])}
        assert int(t.hi[l]) == int(t.lo[r])


def test_json_roundtrip():
    t = random_tree(17, 11)
    again = s.HCTree.from_json(t.to_json())
    assert again.to_nested() == t.to_nested()


def test_deep_tree_no_recursion_error():
    t = s.sample_tree_shape(3000, 1, "caterpillar")
    assert t.n_leaves == 3000
    again = s.HCTree.from_json(t.to_json())
    assert again.structurally_equal(t)
