"""Shared helpers: naive reference implementations used as test oracles."""

import numpy as np
import pytest

import splithc as s


def naive_lca(tree, u, v):
    """Ancestor-list intersection, independent of the range machinery."""
    def anc(x):
        node = int(tree.leaf_node_of[x])
        out = [node]
        while tree.parent[out[-1]] >= 0:
            out.append(int(tree.parent[out[-1]]))
        return out

    au = anc(u)
    sv = set(anc(v))
    for x in au:
        if x in sv:
            return x
    raise AssertionError("no common ancestor")


def naive_splits_away(tree, u, v, w):
    """Definition walk: the pair with the strictly deepest LCA stays."""
    d = {x: int(tree.depth[naive_lca(tree, a, b)])
         for x, (a, b) in {w: (u, v), v: (u, w), u: (v, w)}.items()}
    best = max(d.values())
    out = [x for x, dx in d.items() if dx == best]
    assert len(out) == 1
    return out[0]


def naive_pair_counts(tree, u, count_set, test_set):
    """Triplet-by-triplet counter loop (perfect-oracle semantics)."""
    c1 = np.zeros(len(test_set), dtype=np.int64)
    c2 = np.zeros(len(test_set), dtype=np.int64)
    for j, v in enumerate(test_set):
        for t in count_set:
            if t == u or t == v:
                continue
            ans = tree.splits_away(int(u), int(v), int(t))
            if ans == v:
                c1[j] += 1
            if ans == t:
                c2[j] += 1
    return c1, c2


def naive_cost(g, tree):
    total = 0.0
    for u, v, w in g.edges():
        z = naive_lca(tree, u, v)
        total += w * tree.leaf_count_under(z)
    return total


@pytest.fixture
def triangle():
    return s.build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


@pytest.fixture
def path3():
    return s.build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
