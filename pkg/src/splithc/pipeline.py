"""End-to-end clustering pipelines, brute-force optima, and the stream model.

The cost pipeline completes a strongly built partial tree with exact
sparsest cuts inside every super-vertex; the revenue pipeline completes a
weakly built partial tree with arbitrary (canonical balanced) partitions.
The streaming simulation stores only same-super-vertex edge weights during
the update stream and must reproduce the offline cost pipeline exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError
from .graph import Graph, EdgeUpdate, induced_subgraph, total_weight
from .hctree import HCTree, _TreeBuilder
from .oracle import SplittingOracle
from .partial import SplitParams, build_strong_partial, build_weak_partial
from .ptree import PartialHCTree
from .sparsest import (DEFAULT_EXACT_LIMIT, exact_sparsest_cut,
                       heuristic_sparsest_cut, recursive_sparsest_tree)


# -- completing a partial tree -------------------------------------------------

def _splice(builder: _TreeBuilder, tree: HCTree) -> int:
    newid = {}
    for x in tree.topo_children_first():
        x = int(x)
        if tree.is_leaf(x):
            newid[x] = builder.leaf(int(tree.leaf_labels[tree.lo[x]]))
        else:
            newid[x] = builder.node(newid[int(tree.left[x])], newid[int(tree.right[x])])
    return newid[tree.root]


def complete_partial(partial: PartialHCTree, subtree_of_leaf) -> HCTree:
    """Replace every super-vertex leaf by a full subtree on its vertex set.

    ``subtree_of_leaf(vertices) -> HCTree`` supplies the local clustering.
    """
    b = _TreeBuilder()
    done = {}
    for x in np.argsort(partial.hi - partial.lo, kind="stable"):
        x = int(x)
        if partial.is_leaf(x):
            vs = partial.leaf_set(x)
            if len(vs) == 1:
                done[x] = b.leaf(int(vs[0]))
            else:
                done[x] = _splice(b, subtree_of_leaf(vs))
        else:
            done[x] = b.node(done[int(partial.left[x])], done[int(partial.right[x])])
    return b.build(done[partial.root])


def _balanced_tree(ids) -> HCTree:
    ids = np.sort(np.asarray(ids, dtype=np.int64))
    b = _TreeBuilder()

    def rec(arr):
        if len(arr) == 1:
            return b.leaf(int(arr[0]))
        h = (len(arr) + 1) // 2
        return b.node(rec(arr[:h]), rec(arr[h:]))

    return b.build(rec(ids))


# -- offline pipelines ------------------------------------------------------------

def hc_das(g: Graph, oracle: SplittingOracle, params: SplitParams,
           exact_limit=DEFAULT_EXACT_LIMIT):
    """Cost pipeline: strong partial tree + exact recursive sparsest cuts.

    Requires tau <= exact_limit so every super-vertex subgraph stays inside
    the exhaustive-search budget.  Returns (tree, partial, trace).
    """
    if params.tau > exact_limit:
        raise ConfigError(f"tau={params.tau} above exact-cut limit {exact_limit}")
    partial, trace = build_strong_partial(np.arange(g.n), oracle, params)

    def local(vs):
        sub, old = induced_subgraph(g, vs)
        return recursive_sparsest_tree(
            sub, cut_fn=lambda h: exact_sparsest_cut(h, exact_limit), vertex_labels=old)

    return complete_partial(partial, local), partial, trace


def hc_das_fast(g: Graph, oracle: SplittingOracle, params: SplitParams,
                exact_limit=DEFAULT_EXACT_LIMIT, cut_seed=0):
    """Cost pipeline with spectral-sweep cuts inside the super-vertices.

    The sweep falls back to the exact search at or below ``exact_limit``, so
    small super-vertices behave exactly like :func:`hc_das`.
    """
    partial, trace = build_strong_partial(np.arange(g.n), oracle, params)

    def local(vs):
        sub, old = induced_subgraph(g, vs)
        return recursive_sparsest_tree(
            sub, cut_fn=lambda h: heuristic_sparsest_cut(h, exact_limit, seed=cut_seed),
            vertex_labels=old)

    return complete_partial(partial, local), partial, trace


def hc_mw(g: Graph, oracle: SplittingOracle, params: SplitParams):
    """Revenue pipeline: weak partial tree + canonical balanced super-vertex fill."""
    partial, trace = build_weak_partial(np.arange(g.n), oracle, params)
    return complete_partial(partial, _balanced_tree), partial, trace


# -- brute force ------------------------------------------------------------------

@dataclass
class BruteForceResult:
    best_tree: HCTree
    best_value: float
    trees_enumerated: int


def all_tree_shapes(labels):
    """Yield every rooted binary tree shape on the labels as nested lists.

    Splits are enumerated with the smallest label pinned to the left side;
    counts follow the double-factorial law (2k-3)!!.
    """
    labels = sorted(int(x) for x in labels)

    def rec(items):
        if len(items) == 1:
            yield items[0]
            return
        first, rest = items[0], items[1:]
        k = len(rest)
        for mask in range(1 << k):
            left = [first] + [rest[i] for i in range(k) if (mask >> i) & 1]
            right = [rest[i] for i in range(k) if not (mask >> i) & 1]
            if not right:
                continue
            for lt in rec(left):
                for rt in rec(right):
                    yield [lt, rt]

    yield from rec(labels)


def brute_force_opt(g: Graph, objective="das") -> BruteForceResult:
    """Optimal tree by full enumeration (2 <= n <= 10).

    Enumerates every shape, accumulating cost and revenue incrementally via
    subset cut weights; exact tree count is verified against (2n-3)!!.
    """
    n = g.n
    if not (2 <= n <= 10):
        raise ValidationError("brute force supports 2 <= n <= 10")
    if objective not in ("das", "mw"):
        raise ValidationError(f"unknown objective {objective!r}")
    w_in = _subset_internal_weights(g)
    full = (1 << n) - 1

    memo = {}

    def shapes(mask):
        """[(nested, cost, rev)] for every shape on the subset mask."""
        if mask in memo:
            return memo[mask]
        bits = [i for i in range(n) if (mask >> i) & 1]
        if len(bits) == 1:
            out = [(bits[0], 0.0, 0.0)]
        else:
            out = []
            first = bits[0]
            rest = bits[1:]
            k = len(rest)
            size = len(bits)
            for sub in range(1 << k):
                left = (1 << first)
                for i in range(k):
                    if (sub >> i) & 1:
                        left |= 1 << rest[i]
                right = mask ^ left
                if right == 0:
                    continue
                cutw = w_in[mask] - w_in[left] - w_in[right]
                dc = size * cutw
                dr = (n - size) * cutw
                for (ln, lc, lr) in shapes(left):
                    for (rn, rc, rr) in shapes(right):
                        out.append(([ln, rn], lc + rc + dc, lr + rr + dr))
        memo[mask] = out
        return out

    entries = shapes(full)
    count = len(entries)
    want = _double_factorial(2 * n - 3)
    if count != want:
        raise RuntimeError(f"enumerated {count} trees, expected {want}")
    if objective == "das":
        best = min(entries, key=lambda e: (e[1],))
        value = best[1]
    else:
        best = max(entries, key=lambda e: (e[2],))
        value = best[2]
    return BruteForceResult(best_tree=HCTree.from_nested(best[0]),
                            best_value=float(value), trees_enumerated=count)


def _subset_internal_weights(g: Graph):
    """acc[mask] = total weight of edges with both endpoints inside mask."""
    n = g.n
    acc = np.zeros(1 << n)
    for u, v, w in g.edges():
        acc[(1 << u) | (1 << v)] += w
    # zeta transform: sum the pair seeds over all supersets
    for i in range(n):
        step = 1 << i
        masks = np.arange(1 << n)
        hit = (masks & step) != 0
        acc[hit] += acc[masks[hit] ^ step]
    return acc


def _double_factorial(k) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


# -- streaming simulation ----------------------------------------------------------

class StreamingState:
    """Stream-side state: the precomputed partial tree plus per-super-vertex
    edge accumulators.  Edges across super-vertices are dropped on arrival."""

    def __init__(self, partial: PartialHCTree, params: SplitParams, exact_limit):
        self.partial = partial
        self.params = params
        self.exact_limit = exact_limit
        self.n = partial.n_vertices
        self.acc: dict[tuple[int, int], float] = {}
        self.updates = 0
        self.finalized = False

    def slot_budget(self) -> int:
        sizes = self.partial.hi[self.partial.leaf_nodes] - self.partial.lo[self.partial.leaf_nodes]
        return int((sizes * (sizes - 1) // 2).sum())

    def slots_used(self) -> int:
        return len(self.acc)

    def memory_bits(self) -> dict:
        n_leaves = self.partial.n_leaves
        map_bits = self.n * max(1, math.ceil(math.log2(max(2, n_leaves))))
        per_counter = max(1, math.ceil(math.log2(self.updates + 2)))
        counter_bits = len(self.acc) * per_counter
        return {"map_bits": map_bits, "counter_bits": counter_bits,
                "total_bits": map_bits + counter_bits,
                "slots_used": len(self.acc), "slot_budget": self.slot_budget(),
                "updates": self.updates}


def stream_init(n, oracle: SplittingOracle, params: SplitParams,
                exact_limit=DEFAULT_EXACT_LIMIT) -> StreamingState:
    """Pre-stream setup: build the strong partial tree from the oracle alone."""
    if params.tau > exact_limit:
        raise ConfigError(f"tau={params.tau} above exact-cut limit {exact_limit}")
    partial, _ = build_strong_partial(np.arange(n), oracle, params)
    return StreamingState(partial, params, exact_limit)


def stream_feed(st: StreamingState, upd: EdgeUpdate):
    """Apply one insert/delete; edges across super-vertices are ignored."""
    if st.finalized:
        raise ValidationError("stream already finalized")
    st.updates += 1
    u, v = (upd.u, upd.v) if upd.u < upd.v else (upd.v, upd.u)
    if st.partial.leaf_of_vertex(u) != st.partial.leaf_of_vertex(v):
        return
    delta = upd.w if upd.kind == "insert" else -upd.w
    new = st.acc.get((u, v), 0.0) + delta
    if new < -1e-12:
        raise ValidationError(f"negative accumulated weight on ({u},{v})")
    st.acc[(u, v)] = new


def stream_finalize(st: StreamingState) -> HCTree:
    """Recursive exact sparsest cuts on the accumulated super-vertex graphs."""
    st.finalized = True
    by_leaf: dict[int, list] = {}
    for (u, v), w in st.acc.items():
        if w != 0.0:
            by_leaf.setdefault(st.partial.leaf_of_vertex(u), []).append((u, v, w))

    def local(vs):
        vs = np.sort(vs)
        edges = by_leaf.get(st.partial.leaf_of_vertex(int(vs[0])), [])
        newid = {int(x): i for i, x in enumerate(vs)}
        sub = Graph(len(vs),
                    [newid[u] for (u, v, w) in edges],
                    [newid[v] for (u, v, w) in edges],
                    [w for (u, v, w) in edges])
        return recursive_sparsest_tree(
            sub, cut_fn=lambda h: exact_sparsest_cut(h, st.exact_limit), vertex_labels=vs)

    return complete_partial(st.partial, local)


def stream_memory(st: StreamingState) -> dict:
    return st.memory_bits()


def stream_from_graph(g: Graph, rng=None, churn=0.3):
    """Turn a graph into a dynamic stream with spurious insert+delete pairs.

    Every true edge is inserted once; a ``churn`` fraction of edges
    additionally gets an extra insert followed by a matching delete, so the
    net weights equal the input graph.
    """
    updates = [EdgeUpdate("insert", int(u), int(v), float(w)) for u, v, w in g.edges()]
    if rng is not None and churn > 0:
        m = g.m
        extra = rng.choice(m, size=max(1, int(churn * m)), replace=False)
        for i in extra:
            u, v, w = int(g.eu[i]), int(g.ev[i]), float(g.ew[i])
            updates.append(EdgeUpdate("insert", u, v, w))
            updates.append(EdgeUpdate("delete", u, v, w))
        order = rng.permutation(len(updates))
        # keep delete-after-its-insert validity: sort spurious pairs back
        updates = _legalize_stream(updates, order)
    return updates


def _legalize_stream(updates, order):
    """Permute updates while keeping every prefix's accumulated weights >= 0."""
    perm = [updates[i] for i in order]
    balance = {}
    out = []
    pending = []
    for upd in perm:
        key = (min(upd.u, upd.v), max(upd.u, upd.v))
        delta = upd.w if upd.kind == "insert" else -upd.w
        if balance.get(key, 0.0) + delta < 0:
            pending.append(upd)
            continue
        balance[key] = balance.get(key, 0.0) + delta
        out.append(upd)
    for upd in pending:
        key = (min(upd.u, upd.v), max(upd.u, upd.v))
        balance[key] = balance.get(key, 0.0) - upd.w
        out.append(upd)
    return out
