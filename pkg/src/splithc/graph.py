"""Weighted undirected graphs, planted-hierarchy instances, and file I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hctree import HCTree, _TreeBuilder


class Graph:
    """Undirected graph on vertices ``0..n-1`` with nonnegative edge weights.

    Edges are stored canonically (u < v, sorted by pair) in parallel numpy
    arrays; immutable after construction.
    """

    __slots__ = ("n", "eu", "ev", "ew")

    def __init__(self, n, eu, ev, ew):
        self.n = int(n)
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        self.ew = np.asarray(ew, dtype=np.float64)

    @property
    def m(self) -> int:
        return len(self.eu)

    def edges(self):
        """Iterate (u, v, w) tuples."""
        for i in range(self.m):
            yield int(self.eu[i]), int(self.ev[i]), float(self.ew[i])

    def weight_matrix(self):
        w = np.zeros((self.n, self.n))
        w[self.eu, self.ev] = self.ew
        w[self.ev, self.eu] = self.ew
        return w

    def __eq__(self, other):
        return (isinstance(other, Graph) and self.n == other.n
                and np.array_equal(self.eu, other.eu)
                and np.array_equal(self.ev, other.ev)
                and np.array_equal(self.ew, other.ew))

    def __hash__(self):
        return hash((self.n, self.m))


@dataclass
class PlantedInstance:
    graph: Graph
    planted_tree: HCTree
    seed: int


@dataclass
class EdgeUpdate:
    kind: str  # "insert" | "delete"
    u: int
    v: int
    w: float

    def __post_init__(self):
        if self.kind not in ("insert", "delete"):
            raise ValidationError(f"bad update kind {self.kind!r}")
        if self.u == self.v:
            raise ValidationError("self-loop update")


def build_graph(n, edges) -> Graph:
    """Validate and canonicalize an edge list into a Graph.

    Rejects out-of-range ids, self-loops, negative weights and duplicate
    vertex pairs.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("graph needs at least one vertex")
    eu, ev, ew = [], [], []
    for (u, v, w) in edges:
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"vertex id out of range: ({u},{v})")
        if u == v:
            raise ValidationError(f"self-loop at {u}")
        if w < 0:
            raise ValidationError(f"negative weight on ({u},{v})")
        if u > v:
            u, v = v, u
        eu.append(u)
        ev.append(v)
        ew.append(w)
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    ew = np.asarray(ew, dtype=np.float64)
    order = np.lexsort((ev, eu))
    eu, ev, ew = eu[order], ev[order], ew[order]
    if len(eu) > 1:
        dup = (eu[1:] == eu[:-1]) & (ev[1:] == ev[:-1])
        if np.any(dup):
            i = int(np.flatnonzero(dup)[0])
            raise ValidationError(f"duplicate edge ({eu[i]},{ev[i]})")
    return Graph(n, eu, ev, ew)


def induced_subgraph(g: Graph, subset):
    """Subgraph on a vertex subset, relabeled to 0..|S|-1 in ascending order.

    Returns (subgraph, old_ids) where old_ids[i] is the original id of the
    new vertex i.
    """
    subset = np.unique(np.asarray(list(subset), dtype=np.int64))
    if len(subset) == 0:
        raise ValidationError("empty vertex subset")
    if subset[0] < 0 or subset[-1] >= g.n:
        raise ValidationError("subset contains out-of-range ids")
    newid = np.full(g.n, -1, dtype=np.int64)
    newid[subset] = np.arange(len(subset))
    keep = (newid[g.eu] >= 0) & (newid[g.ev] >= 0)
    sub = Graph(len(subset), newid[g.eu[keep]], newid[g.ev[keep]], g.ew[keep])
    return sub, subset


def total_weight(g: Graph) -> float:
    return float(g.ew.sum())


def sample_tree_shape(n, seed, shape="random") -> HCTree:
    """Random rooted binary tree on labels 0..n-1.

    ``random`` splits every set by a uniform nontrivial bipartition;
    ``balanced`` halves; ``caterpillar`` peels one leaf per level.  All
    shapes permute the labels with the seed.
    """
    if n < 1:
        raise ValidationError("need n >= 1")
    rng = np.random.default_rng([int(seed), 0x517EC0DE])
    labels = rng.permutation(n).astype(np.int64)
    b = _TreeBuilder()

    if shape == "caterpillar":
        node = b.leaf(int(labels[0]))
        for i in range(1, n):
            node = b.node(node, b.leaf(int(labels[i])))
        return b.build(node)

    stack = [(labels, None, None)]
    built = {}
    # iterative: resolve a set either to a leaf or to two pending children
    def split(arr):
        k = len(arr)
        if shape == "balanced":
            h = (k + 1) // 2
            return arr[:h], arr[h:]
        if shape != "random":
            raise ValidationError(f"unknown shape {shape!r}")
        while True:
            mask = rng.integers(0, 2, size=k).astype(bool)
            s = int(mask.sum())
            if 0 < s < k:
                return arr[mask], arr[~mask]

    def rec(arr):
        if len(arr) == 1:
            return b.leaf(int(arr[0]))
        a, c = split(arr)
        la = rec(a)
        lc = rec(c)
        return b.node(la, lc)

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * n + 100))
    try:
        root = rec(labels)
    finally:
        sys.setrecursionlimit(old)
    return b.build(root)


def generate_planted(n, seed, shape="random", jitter=0.0) -> PlantedInstance:
    """Complete graph whose weights follow the planted tree's LCA depths.

    w(u, v) = 2^depth(lca(u, v)), optionally scaled by a multiplicative
    jitter in [1, 1+jitter) drawn per edge; jitter < 1 keeps the strict
    level ordering (deeper LCA => strictly heavier edge).
    """
    n = int(n)
    if n < 2:
        raise ValidationError("need n >= 2")
    if not (0.0 <= jitter < 1.0):
        raise ValidationError("jitter must be in [0, 1)")
    tree = sample_tree_shape(n, seed, shape)
    wmat = np.zeros((n, n))
    for x in range(tree.n_nodes):
        if tree.is_leaf(x):
            continue
        l, r = int(tree.left[x]), int(tree.right[x])
        a = tree.leaf_labels[tree.lo[l]:tree.hi[l]]
        c = tree.leaf_labels[tree.lo[r]:tree.hi[r]]
        wmat[np.ix_(a, c)] = 2.0 ** int(tree.depth[x])
    iu, iv = np.triu_indices(n, k=1)
    w = wmat[iu, iv] + wmat[iv, iu]
    if jitter > 0:
        rng = np.random.default_rng([int(seed), 0x7177E6])
        w = w * (1.0 + jitter * rng.random(len(w)))
    g = Graph(n, iu.astype(np.int64), iv.astype(np.int64), w)
    return PlantedInstance(graph=g, planted_tree=tree, seed=int(seed))


# -- file formats ------------------------------------------------------------

def write_graph_text(g: Graph, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{g.n} {g.m}\n")
        for u, v, w in g.edges():
            f.write(f"{u} {v} {w!r}\n")


def read_graph_text(path) -> Graph:
    with open(path, encoding="utf-8") as f:
        head = f.readline().split()
        if len(head) != 2:
            raise ValidationError("bad graph header (want 'n m')")
        n, m = int(head[0]), int(head[1])
        edges = []
        for line in f:
            parts = line.split()
            if not parts:
                continue
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if len(edges) != m:
        raise ValidationError(f"header says {m} edges, found {len(edges)}")
    return build_graph(n, edges)


def write_graph_json(g: Graph, path):
    payload = {"n": g.n, "edges": [[u, v, w] for u, v, w in g.edges()]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)


def read_graph_json(path) -> Graph:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    return build_graph(payload["n"], payload["edges"])


def read_graph(path) -> Graph:
    text = open(path, encoding="utf-8").read(1).strip()
    if text.startswith("{"):
        return read_graph_json(path)
    return read_graph_text(path)
