"""Sparsest cuts: exact enumeration at small sizes, spectral sweep above.

Sparsity of a bipartition (A, B) is w(A, B) / min(|A|, |B|).  The exact
search enumerates every bipartition (feasible up to ~20 vertices); the
heuristic runs a seeded power iteration for the second Laplacian
eigenvector and sweeps prefix cuts of the coordinate order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Graph, induced_subgraph
from .hctree import HCTree, _TreeBuilder

DEFAULT_EXACT_LIMIT = 20
POWER_ITERATIONS = 200
POWER_TOL = 1e-8


@dataclass
class Cut:
    a: np.ndarray          # vertex ids, sorted, contains vertex 0's side... side A
    b: np.ndarray
    sparsity: float

    def sides(self):
        return self.a, self.b


def _popcounts(masks):
    c = np.zeros(len(masks), dtype=np.int64)
    m = masks.copy()
    while m.any():
        c += (m & 1).astype(np.int64)
        m >>= 1
    return c


def exact_sparsest_cut(g: Graph, exact_limit=DEFAULT_EXACT_LIMIT) -> Cut:
    """Minimum-sparsity bipartition by exhaustive enumeration.

    Ties go to the lexicographically smallest side containing vertex 0.
    """
    n = g.n
    if n < 2:
        raise ValidationError("cut needs at least 2 vertices")
    if n > exact_limit:
        raise ValidationError(
            f"{n} vertices exceed the exact enumeration limit {exact_limit}; "
            "use heuristic_sparsest_cut")
    # masks over vertices 1..n-1; vertex 0 always on side A
    nmask = 1 << (n - 1)
    masks = np.arange(nmask, dtype=np.int64)
    cross = np.zeros(nmask, dtype=np.float64)
    for u, v, w in g.edges():
        # edge crosses iff sides of u and v differ; side(0) fixed to A
        su = (masks >> (u - 1)) & 1 if u > 0 else np.zeros(nmask, dtype=np.int64)
        sv = (masks >> (v - 1)) & 1
        cross += w * (su != sv)
    size_b = _popcounts(masks)
    size_a = n - size_b
    with np.errstate(divide="ignore", invalid="ignore"):
        sp = cross / np.minimum(size_a, size_b)
    sp[0] = np.inf  # empty B
    best = float(np.nanmin(sp))
    cand = np.flatnonzero(sp == best)
    # lexicographically smallest sorted side-of-vertex-0
    best_key = None
    best_mask = None
    for m in cand:
        bits = [(int(m) >> i) & 1 for i in range(n - 1)]
        a = tuple([0] + [i + 1 for i in range(n - 1) if not bits[i]])
        if best_key is None or a < best_key:
            best_key = a
            best_mask = int(m)
    a = np.asarray(best_key, dtype=np.int64)
    b = np.setdiff1d(np.arange(n, dtype=np.int64), a)
    return Cut(a=a, b=b, sparsity=best)


def heuristic_sparsest_cut(g: Graph, exact_limit=DEFAULT_EXACT_LIMIT, seed=0) -> Cut:
    """Spectral sweep cut; falls back to the exact search at small sizes.

    Power-iterates the deflated operator (c*I - L) to approximate the second
    Laplacian eigenvector, sorts vertices by coordinate and returns the best
    prefix cut.
    """
    n = g.n
    if n < 2:
        raise ValidationError("cut needs at least 2 vertices")
    if n <= exact_limit:
        return exact_sparsest_cut(g, exact_limit)
    w = g.weight_matrix()
    deg = w.sum(axis=1)
    shift = 2.0 * max(float(deg.max()), 1.0)
    rng = np.random.default_rng([seed, 0x5BEC7A1])
    x = rng.standard_normal(n)
    x -= x.mean()
    x /= np.linalg.norm(x) or 1.0
    for _ in range(POWER_ITERATIONS):
        y = shift * x - (deg * x - w @ x)  # (shift*I - L) x
        y -= y.mean()
        norm = np.linalg.norm(y)
        if norm == 0:
            break
        y /= norm
        if np.linalg.norm(y - x) < POWER_TOL:
            x = y
            break
        x = y
    order = np.argsort(x, kind="stable")
    # sweep: cut weight after moving each vertex from B to A
    placed = np.zeros(n, dtype=bool)
    cut_w = 0.0
    best_sp, best_k = np.inf, 1
    adj = [[] for _ in range(n)]
    for u, v, wt in g.edges():
        adj[u].append((v, wt))
        adj[v].append((u, wt))
    for k, v in enumerate(order):
        v = int(v)
        for (t, wt) in adj[v]:
            cut_w += -wt if placed[t] else wt
        placed[v] = True
        if k == n - 1:
            break
        sp = cut_w / min(k + 1, n - k - 1)
        if sp < best_sp:
            best_sp, best_k = sp, k + 1
    a = np.sort(order[:best_k].astype(np.int64))
    b = np.sort(order[best_k:].astype(np.int64))
    if 0 not in a:
        a, b = b, a
    return Cut(a=a, b=b, sparsity=float(best_sp))


def recursive_sparsest_tree(g: Graph, cut_fn=None, vertex_labels=None) -> HCTree:
    """Full clustering tree from recursive bipartitioning.

    ``cut_fn(subgraph) -> Cut`` defaults to the exact search.  Labels of the
    output tree are the original vertex ids (or ``vertex_labels`` when the
    graph is a relabeled subgraph).
    """
    if cut_fn is None:
        cut_fn = exact_sparsest_cut
    if vertex_labels is None:
        vertex_labels = np.arange(g.n, dtype=np.int64)
    vertex_labels = np.asarray(vertex_labels, dtype=np.int64)
    b = _TreeBuilder()

    def rec(sub: Graph, labels) -> int:
        if sub.n == 1:
            return b.leaf(int(labels[0]))
        cut = cut_fn(sub)
        ga, olda = induced_subgraph(sub, cut.a)
        gb, oldb = induced_subgraph(sub, cut.b)
        la = rec(ga, labels[olda])
        lb = rec(gb, labels[oldb])
        return b.node(la, lb)

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * g.n + 100))
    try:
        root = rec(g, vertex_labels)
    finally:
        sys.setrecursionlimit(old)
    return b.build(root)
