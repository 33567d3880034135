import numpy as np
import pytest

import splithc as s
from splithc.errors import ValidationError


def test_build_graph_triangle(triangle):
    assert triangle.n == 3 and triangle.m == 3
    assert s.total_weight(triangle) == 3.0


def test_build_graph_rejects_self_loop():
    with pytest.raises(ValidationError):
        s.build_graph(2, [(0, 0, 1.0)])


def test_build_graph_rejects_bad_ids_and_weights():
    with pytest.raises(ValidationError):
        s.build_graph(2, [(0, 5, 1.0)])
    with pytest.raises(ValidationError):
        s.build_graph(2, [(0, 1, -0.5)])
    with pytest.raises(ValidationError):
        s.build_graph(3, [(0, 1, 1.0), (1, 0, 2.0)])


def test_build_graph_canonical_order():
    g = s.build_graph(4, [(1, 0, 2.5)])
    assert list(g.edges()) == [(0, 1, 2.5)]


def test_total_weight_cases():
    assert s.total_weight(s.build_graph(3, [])) == 0.0
    g = s.build_graph(3, [(0, 1, 1.5), (1, 2, 2.5)])
    assert s.total_weight(g) == 4.0


def test_induced_subgraph_single_edge(triangle):
    sub, old = s.induced_subgraph(triangle, [0, 1])
    assert sub.n == 2 and sub.m == 1
    assert list(old) == [0, 1]
    assert list(sub.edges()) == [(0, 1, 1.0)]


def test_induced_subgraph_identity(triangle):
    sub, old = s.induced_subgraph(triangle, [0, 1, 2])
    assert sub == triangle


def test_induced_subgraph_no_edges(path3):
    sub, _ = s.induced_subgraph(path3, [0, 2])
    assert sub.n == 2 and sub.m == 0


def test_induced_subgraph_rejects_empty(triangle):
    with pytest.raises(ValidationError):
        s.induced_subgraph(triangle, [])


def test_generate_planted_n2():
    inst = s.generate_planted(2, 123)
    assert inst.graph.m == 1
    assert inst.planted_tree.n_leaves == 2


def test_generate_planted_rejects_n1():
    with pytest.raises(ValidationError):
        s.generate_planted(1, 0)


def test_generate_planted_deterministic():
    a = s.generate_planted(16, 7, shape="random", jitter=0.1)
    b = s.generate_planted(16, 7, shape="random", jitter=0.1)
    assert a.planted_tree.to_nested() == b.planted_tree.to_nested()
    assert a.graph == b.graph


def test_caterpillar_depth():
    tree = s.sample_tree_shape(32, 5, "caterpillar")
    assert int(tree.depth.max()) == 31


def test_planted_weights_follow_lca_depth():
    inst = s.generate_planted(10, 3)
    t = inst.planted_tree
    w = inst.graph.weight_matrix()
    for u, v, wt in inst.graph.edges():
        assert wt == 2.0 ** int(t.depth[t.lca(u, v)])
    assert np.all(w[np.triu_indices(10, 1)] > 0)


def test_jitter_preserves_level_order():
    inst = s.generate_planted(12, 3, jitter=0.4)
    t = inst.planted_tree
    by_depth = {}
    for u, v, wt in inst.graph.edges():
        by_depth.setdefault(int(t.depth[t.lca(u, v)]), []).append(wt)
    depths = sorted(by_depth)
    for lo, hi in zip(depths, depths[1:]):
        assert max(by_depth[lo]) < min(by_depth[hi])


def test_graph_file_roundtrip(tmp_path, triangle):
    p1 = tmp_path / "g.txt"
    p2 = tmp_path / "g.json"
    s.graph.write_graph_text(triangle, p1)
    s.graph.write_graph_json(triangle, p2)
    assert s.read_graph(p1) == triangle
    assert s.read_graph(p2) == triangle
