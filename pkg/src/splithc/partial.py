"""Construction of partial clustering trees from oracle answers.

Two builders are provided.  The strong builder tests every vertex of the
current set as a candidate anchor and always recovers top-down splits of the
reference tree.  The weak builder samples anchors, peels one maximal subtree
per round relative to a "horizon" set (the enclosing single subtree inside
which counterpart counts stay meaningful), and stitches the two recursion
results back together with an oracle-driven merge.

Both builders only consume oracle answers; the input graph is never touched.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import BuildFailure, ValidationError
from .oracle import SplittingOracle
from .ptree import PartialHCTree, _PartialBuilder


# -- parameters ----------------------------------------------------------------

@dataclass(frozen=True)
class SplitParams:
    """Constant ledger for the partial-tree builders.

    Fraction fields carry the signal/noise separation and are not meant to
    be tuned; the log-multiplier fields only buy failure probability and are
    scaled down in the ``desk`` preset so desk-size instances stay cheap.
    """

    tau: int
    sample_strong: int
    sample_split: int
    sample_orphan: int
    eps: float = 0.05
    c1_frac: float = 3 / 5
    c2_frac: float = 1 / 6
    pred_small: float = 3 / 2
    pred_large: float = 2 / 3
    merge_frac: float = 1 / 2
    exact_counters: bool = False
    seed: int = 0
    depth_cap: int | None = None

    def __post_init__(self):
        if not (0 < self.eps < 0.1):
            raise ValidationError("eps must lie in (0, 1/10)")
        if self.tau < 2:
            raise ValidationError("tau must be at least 2")

    @classmethod
    def desk(cls, n, seed=0, **overrides):
        """Scaled-down constants for desk-size n (multiplier x log2 n)."""
        lg = max(1, math.ceil(math.log2(max(2, n))))
        base = dict(tau=4 * lg, sample_strong=8 * lg, sample_split=8 * lg,
                    sample_orphan=4 * lg, eps=0.05, seed=seed)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def paper(cls, n, seed=0, **overrides):
        """Literal constants; only sensible for very large n."""
        lg = math.log2(max(2, n))
        base = dict(tau=math.ceil(50000 * lg),
                    sample_strong=math.ceil(20 * lg / 0.05 ** 2),
                    sample_split=math.ceil(500 * lg),
                    sample_orphan=math.ceil(100 * lg),
                    eps=0.05, seed=seed)
        base.update(overrides)
        return cls(**base)


@dataclass
class SplitOutcome:
    part: np.ndarray          # peeled vertex set (subset of the input set)
    remainder: np.ndarray
    anchor: int               # the vertex whose counterpart set produced part
    horizon: np.ndarray       # horizon in effect when the split was produced
    root_split: bool = False


@dataclass
class BuildTrace:
    records: list = field(default_factory=list)
    max_depth: int = 0
    total_queries: int = 0
    fail: str | None = None

    def note(self, depth, size, nh, branch, queries):
        self.max_depth = max(self.max_depth, depth)
        self.records.append({"depth": depth, "size": int(size), "horizon": int(nh),
                             "branch": branch, "queries": int(queries)})

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r) for r in self.records)


# -- counting core ---------------------------------------------------------------

_BLOCK_CELLS = 4_000_000


def _pair_counts(oracle: SplittingOracle, u, count_set, test_set):
    """Per test vertex v: (c1, c2) over t in count_set minus {u, v}.

    c1 counts answers "v splits away from (u, t)", c2 counts answers
    "t splits away from (u, v)".  count_set may be a multiset (sampling with
    replacement).  At p == 1 the counts are computed in closed form from the
    ground-truth tree; this is exactly what the per-triplet loop returns,
    since a perfect oracle never corrupts an answer.
    """
    count_set = np.asarray(count_set, dtype=np.int64)
    test_set = np.asarray(test_set, dtype=np.int64)
    if len(test_set) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    if oracle.is_perfect:
        return _exact_pair_counts(oracle, u, count_set, test_set)
    fast = oracle.pair_counts_compiled(u, count_set, test_set)
    if fast is not None:
        return fast
    c1 = np.zeros(len(test_set), dtype=np.int64)
    c2 = np.zeros(len(test_set), dtype=np.int64)
    step = max(1, _BLOCK_CELLS // max(1, len(test_set)))
    for i in range(0, len(count_set), step):
        chunk = count_set[i:i + step]
        ans = oracle.answers_block(u, chunk, test_set)
        c1 += (ans == test_set[None, :]).sum(axis=0)
        c2 += (ans == chunk[:, None]).sum(axis=0)
    return c1, c2


def _exact_pair_counts(oracle: SplittingOracle, u, count_set, test_set):
    tree = oracle.truth
    lev_c = tree.levels_from(u, count_set)
    lev_v = tree.levels_from(u, test_set)
    k_top = int(max(lev_c.max(initial=0), lev_v.max(initial=0)))
    cnt = np.bincount(lev_c[lev_c > 0], minlength=k_top + 2)
    pref = np.cumsum(cnt)  # pref[k] = # count-set draws with level <= k
    c1 = pref[lev_v - 1]
    n_eff = int((lev_c > 0).sum())  # count-set draws other than u
    c2 = n_eff - pref[lev_v]
    # accounting: every (v, t) pair with t not in {u, v} is one logical query
    sc = np.sort(count_set)
    mult = (np.searchsorted(sc, test_set, side="right")
            - np.searchsorted(sc, test_set, side="left"))
    oracle.count_virtual(len(test_set) * n_eff - int(mult.sum()))
    return c1.astype(np.int64), c2.astype(np.int64)


def _lca_depth_matrix(tree, labels):
    """D[i, j] = depth of lca(labels[i], labels[j]) in the restricted tree.

    Only the relative depth order matters to the counters, and restriction
    preserves it.  The diagonal is set to -1 (self pairs never count)."""
    labels = np.asarray(labels, dtype=np.int64)
    k = len(labels)
    r = tree.restrict(labels)
    idx = np.searchsorted(labels, r.leaf_labels)  # restricted position -> row index
    d = np.full((k, k), -1, dtype=np.int64)
    for z in range(r.n_nodes):
        if r.is_leaf(z):
            continue
        a = idx[r.lo[int(r.left[z])]:r.hi[int(r.left[z])]]
        b = idx[r.lo[int(r.right[z])]:r.hi[int(r.right[z])]]
        d[np.ix_(a, b)] = r.depth[z]
        d[np.ix_(b, a)] = r.depth[z]
    return d


def _exact_count_matrices(oracle, labels):
    """All-pairs (c1, c2) counters at p == 1 over count == test == labels.

    Row u, column v: counts over t in labels minus {u, v}.  Equivalent to
    calling the per-pair loop for every (u, v); the comparisons reduce to
    ranking lca depths along u's ancestor chain."""
    dm = _lca_depth_matrix(oracle.truth, labels)
    k = len(labels)
    bins = dm + 1  # diagonal lands in bin 0
    top = int(bins.max()) + 1
    rows = np.repeat(np.arange(k), k)
    flat = np.bincount(rows * (top + 1) + bins.ravel(),
                       minlength=k * (top + 1)).reshape(k, top + 1)
    cum = np.cumsum(flat, axis=1)  # cum[u, b] = # t with bin <= b (incl. diagonal)
    # deeper lca <=> larger depth <=> larger bin
    c1 = (k - np.take_along_axis(cum, bins, axis=1)).astype(np.int64)
    c2 = (np.take_along_axis(cum, np.maximum(bins - 1, 0), axis=1) - 1).astype(np.int64)
    np.fill_diagonal(c1, 0)
    np.fill_diagonal(c2, 0)
    return c1, c2


def counterpart_test_strong(oracle, u, v, sample, thr1, thr2) -> bool:
    """Threshold test on the two counters over a sampled vertex set."""
    if u == v:
        raise ValidationError("counterpart test needs distinct vertices")
    c1, c2 = _pair_counts(oracle, u, sample, np.asarray([v], dtype=np.int64))
    return bool(c1[0] <= thr1 and c2[0] <= thr2)


def counterpart_test(oracle, u, v, horizon, thr1, thr2) -> bool:
    """Same counters taken over the full horizon set."""
    return counterpart_test_strong(oracle, u, v, horizon, thr1, thr2)


def predecessor_test(oracle, u, t, horizon, thr) -> bool:
    """Whether t is separated earlier than u: many s with "t splits from (u,s)"."""
    if u == t:
        raise ValidationError("predecessor test needs distinct vertices")
    c1, _ = _pair_counts(oracle, u, horizon, np.asarray([t], dtype=np.int64))
    return bool(c1[0] >= thr)


def _counterpart_set(oracle, u, horizon, thr1, thr2, count_set=None):
    count = horizon if count_set is None else count_set
    test = horizon[horizon != u]
    c1, c2 = _pair_counts(oracle, u, count, test)
    return test[(c1 <= thr1) & (c2 <= thr2)]


# -- intermediate tree nodes -----------------------------------------------------

class _PNode:
    __slots__ = ("left", "right", "verts")

    def __init__(self, verts, left=None, right=None):
        self.verts = verts  # sorted vertex array
        self.left = left
        self.right = right

    @property
    def is_leaf(self):
        return self.left is None

    @classmethod
    def leaf(cls, verts):
        return cls(np.sort(np.asarray(verts, dtype=np.int64)))

    @classmethod
    def join(cls, a, b):
        return cls(_union(a.verts, b.verts), a, b)


def _union(a, b):
    out = np.concatenate((a, b))
    out.sort()
    return out


def _contains_all(sorted_verts, xs):
    idx = np.searchsorted(sorted_verts, xs)
    ok = idx < len(sorted_verts)
    return bool(np.all(ok) and np.all(sorted_verts[np.minimum(idx, len(sorted_verts) - 1)] == xs))


def _freeze(node: _PNode, tau) -> PartialHCTree:
    b = _PartialBuilder()
    done = {}
    stack = [(node, False)]
    while stack:
        x, expanded = stack.pop()
        if x.is_leaf:
            done[id(x)] = b.leaf(x.verts)
        elif expanded:
            done[id(x)] = b.node(done[id(x.left)], done[id(x.right)])
        else:
            stack.append((x, True))
            stack.append((x.right, False))
            stack.append((x.left, False))
    return b.build(done[id(node)], tau)


def _thaw(partial: PartialHCTree) -> _PNode:
    done = {}
    for x in np.argsort(partial.hi - partial.lo, kind="stable"):
        x = int(x)
        if partial.is_leaf(x):
            done[x] = _PNode.leaf(partial.leaf_set(x))
        else:
            done[x] = _PNode.join(done[int(partial.left[x])], done[int(partial.right[x])])
    return done[partial.root]


# -- strong construction ---------------------------------------------------------

def build_strong_partial(vertices, oracle: SplittingOracle, params: SplitParams):
    """Top-down partial tree; every split matches the reference root split.

    Every vertex of the current set is tried as an anchor; the anchor whose
    counterpart set is largest wins (ties to the smallest anchor id).
    Returns (PartialHCTree, BuildTrace).
    """
    vertices = np.unique(np.asarray(vertices, dtype=np.int64))
    if len(vertices) == 0:
        raise ValidationError("empty vertex set")
    trace = BuildTrace()
    counter = [0]

    def node_rng():
        counter[0] += 1
        return np.random.default_rng([params.seed, 0x57A6, counter[0]])

    def rec(vt, depth):
        if len(vt) <= params.tau:
            trace.note(depth, len(vt), len(vt), "super_vertex", oracle.total_queries)
            return _PNode.leaf(vt)
        rng = node_rng()
        best_u, best_t = -1, None
        if params.exact_counters and oracle.is_perfect:
            k = len(vt)
            thr1 = (params.c1_frac - params.eps) * k
            thr2 = (params.c2_frac - params.eps) * k
            c1m, c2m = _exact_count_matrices(oracle, vt)
            oracle.count_virtual(k * (k - 1) * (k - 2))
            mask = (c1m <= thr1) & (c2m <= thr2)
            np.fill_diagonal(mask, False)
            row = int(np.argmax(mask.sum(axis=1)))
            best_u, best_t = int(vt[row]), vt[mask[row]]
        else:
            for u in vt:
                u = int(u)
                if params.exact_counters:
                    sample = vt
                else:
                    sample = rng.choice(vt, size=params.sample_strong, replace=True)
                s = len(sample)
                thr1 = (params.c1_frac - params.eps) * s
                thr2 = (params.c2_frac - params.eps) * s
                tset = _counterpart_set(oracle, u, vt, thr1, thr2, count_set=sample)
                if best_t is None or len(tset) > len(best_t):
                    best_u, best_t = u, tset
        if best_t is None or len(best_t) == 0:
            trace.fail = f"empty counterpart set on {len(vt)} vertices"
            raise BuildFailure(trace.fail, trace)
        rest = np.setdiff1d(vt, best_t, assume_unique=True)
        trace.note(depth, len(vt), len(vt), "split", oracle.total_queries)
        left = rec(best_t, depth + 1)
        right = rec(rest, depth + 1)
        return _PNode.join(left, right)

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(vertices) + 1000))
    try:
        root = rec(vertices, 0)
    finally:
        sys.setrecursionlimit(old)
    trace.total_queries = oracle.total_queries
    _check_depth_cap(trace, params)
    return _freeze(root, params.tau), trace


# -- weak construction -----------------------------------------------------------

def orphan_predecessor_test(oracle, vertices, horizon, params: SplitParams, rng=None):
    """Largest predecessor set over freshly sampled probes from ``vertices``.

    Empty result signals that the previous split was a root split.
    """
    vertices = np.asarray(vertices, dtype=np.int64)
    horizon = np.asarray(horizon, dtype=np.int64)
    nh, nt = len(horizon), len(vertices)
    thr = params.pred_small * nt if nh <= 3 * nt else params.pred_large * nh
    if params.exact_counters and oracle.is_perfect:
        c1m, _ = _exact_count_matrices(oracle, horizon)
        oracle.count_virtual(nt * (nh - 1) * (nh - 2))
        rows = np.searchsorted(horizon, vertices)
        best = np.zeros(0, dtype=np.int64)
        for row in rows:
            mask = c1m[row] >= thr
            mask[row] = False
            x = horizon[mask]
            if len(x) > len(best):
                best = x
        return best
    if params.exact_counters:
        probes = vertices
    else:
        if rng is None:
            rng = np.random.default_rng([params.seed, 0x0B9A])
        probes = rng.choice(vertices, size=params.sample_orphan, replace=True)
    best = np.zeros(0, dtype=np.int64)
    for u in np.unique(probes):
        u = int(u)
        test = horizon[horizon != u]
        c1, _ = _pair_counts(oracle, u, horizon, test)
        x = test[c1 >= thr]
        if len(x) > len(best):
            best = x
    return best


def tree_split(vertices, horizon, oracle: SplittingOracle, params: SplitParams,
               rng=None, trace=None, _retry=False) -> SplitOutcome:
    """Peel one maximal subtree (relative to the horizon) off ``vertices``.

    Falls back to an orphan-predecessor rescue when no sampled anchor's
    counterpart set meets the input set, and to a single horizon reset
    (root split) when the rescue finds nothing.  A second consecutive
    horizon reset is a hard failure.
    """
    vertices = np.asarray(vertices, dtype=np.int64)
    horizon = np.asarray(horizon, dtype=np.int64)
    nh = len(horizon)
    thr1 = params.c1_frac * nh
    thr2 = params.c2_frac * nh
    if rng is None:
        rng = np.random.default_rng([params.seed, 0x5917])
    best_u, best_t = -1, np.zeros(0, dtype=np.int64)
    if params.exact_counters and oracle.is_perfect:
        c1m, c2m = _exact_count_matrices(oracle, horizon)
        oracle.count_virtual(len(vertices) * (nh - 1) * (nh - 2))
        mask = (c1m <= thr1) & (c2m <= thr2)
        np.fill_diagonal(mask, False)
        rows = np.searchsorted(horizon, vertices)
        sizes = mask[rows].sum(axis=1)
        best = int(np.argmax(sizes))
        if sizes[best] > 0:
            best_u, best_t = int(vertices[best]), horizon[mask[rows[best]]]
    else:
        if params.exact_counters:
            anchors = vertices
        else:
            anchors = np.unique(rng.choice(vertices, size=params.sample_split, replace=True))
        for u in anchors:
            u = int(u)
            tset = _counterpart_set(oracle, u, horizon, thr1, thr2)
            if len(tset) > len(best_t):
                best_u, best_t = u, tset
    inside = np.intersect1d(best_t, vertices, assume_unique=True)
    if len(inside) > 0:
        return SplitOutcome(part=inside,
                            remainder=np.setdiff1d(vertices, best_t, assume_unique=True),
                            anchor=best_u, horizon=horizon)
    # no sampled anchor saw its counterpart inside the input set: either the
    # previous round was a root split, or the orphan set dominates the input
    rescue = orphan_predecessor_test(oracle, vertices, horizon, params, rng=rng)
    if len(rescue) > 0:
        u = int(rescue.min())
        tset = _counterpart_set(oracle, u, horizon, thr1, thr2)
        inside = np.intersect1d(tset, vertices, assume_unique=True)
        if len(inside) == 0:
            msg = "empty counterpart set after orphan rescue"
            if trace is not None:
                trace.fail = msg
            raise BuildFailure(msg, trace)
        if trace is not None:
            trace.note(-1, len(vertices), nh, "orphan_rescue", oracle.total_queries)
        return SplitOutcome(part=inside,
                            remainder=np.setdiff1d(vertices, tset, assume_unique=True),
                            anchor=u, horizon=horizon)
    # root split: reset the horizon to the input set, once
    if _retry or (nh == len(vertices) and np.array_equal(horizon, np.sort(vertices))):
        msg = "repeated root recursion (inconsistent oracle or parameters)"
        if trace is not None:
            trace.fail = msg
        raise BuildFailure(msg, trace)
    if trace is not None:
        trace.note(-1, len(vertices), nh, "root_recursion", oracle.total_queries)
    fresh = np.sort(vertices)
    out = tree_split(fresh, fresh, oracle, params, rng=rng, trace=trace, _retry=True)
    out.root_split = True
    return out


def _merge_nodes(left: _PNode, rest: _PNode, anchor, oracle, params, trace=None) -> _PNode:
    """Reattach the peeled subtree beside the orphan set inside ``rest``."""
    tverts = left.verts
    others = rest.verts[rest.verts != anchor]
    c1, _ = _pair_counts(oracle, anchor, tverts, others)
    keep = others[c1 <= params.merge_frac * len(tverts)]
    s_prime = np.sort(np.concatenate((keep, [anchor])))
    # locate the deepest node of rest containing all of s_prime
    path = []
    x = rest
    while not x.is_leaf:
        if _contains_all(x.left.verts, s_prime):
            path.append((x, "left"))
            x = x.left
        elif _contains_all(x.right.verts, s_prime):
            path.append((x, "right"))
            x = x.right
        else:
            break
    exact = len(x.verts) == len(s_prime) and np.array_equal(x.verts, s_prime)
    if not exact and not x.is_leaf:
        msg = (f"merge target is not a maximal subtree of the remainder "
               f"({len(s_prime)} vertices vs node of {len(x.verts)})")
        if trace is not None:
            trace.fail = msg
        raise BuildFailure(msg, trace)
    joined = _PNode.join(x, left)
    if not path:
        return joined
    parent, side = path[-1]
    setattr(parent, side, joined)
    for node, _ in path:
        node.verts = _union(node.verts, tverts)
    return rest


def tree_merge(part_tree: PartialHCTree, rest_tree: PartialHCTree, anchor,
               oracle: SplittingOracle, params: SplitParams) -> PartialHCTree:
    """Merge the two halves of a split back into one partial tree."""
    merged = _merge_nodes(_thaw(part_tree), _thaw(rest_tree), int(anchor), oracle, params)
    return _freeze(merged, params.tau)


def build_weak_partial(vertices, oracle: SplittingOracle, params: SplitParams):
    """Sampled peel-and-merge construction; near-quadratic query budget.

    Returns (PartialHCTree, BuildTrace).  Raises BuildFailure (with the trace
    attached) when a merge target is ambiguous or the horizon reset repeats;
    with a perfect oracle this never happens.
    """
    vertices = np.unique(np.asarray(vertices, dtype=np.int64))
    if len(vertices) == 0:
        raise ValidationError("empty vertex set")
    trace = BuildTrace()
    counter = [0]

    def node_rng():
        counter[0] += 1
        return np.random.default_rng([params.seed, 0x3EAF, counter[0]])

    def rec(vt, vh, depth):
        if len(vt) <= params.tau:
            trace.note(depth, len(vt), len(vh), "super_vertex", oracle.total_queries)
            return _PNode.leaf(vt)
        out = tree_split(vt, vh, oracle, params, rng=node_rng(), trace=trace)
        trace.note(depth, len(vt), len(out.horizon),
                   "root_split" if out.root_split else "split", oracle.total_queries)
        left = rec(out.part, out.part, depth + 1)
        rest = rec(out.remainder, out.horizon, depth + 1)
        return _merge_nodes(left, rest, out.anchor, oracle, params, trace=trace)

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(vertices) + 1000))
    try:
        root = rec(vertices, vertices, 0)
    finally:
        sys.setrecursionlimit(old)
    trace.total_queries = oracle.total_queries
    _check_depth_cap(trace, params)
    return _freeze(root, params.tau), trace


def _check_depth_cap(trace: BuildTrace, params: SplitParams):
    if params.depth_cap is not None and trace.max_depth > params.depth_cap:
        trace.fail = f"recursion depth {trace.max_depth} exceeds cap {params.depth_cap}"
        raise BuildFailure(trace.fail, trace)
