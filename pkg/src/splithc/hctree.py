"""Rooted binary clustering trees over integer vertex labels.

Every node owns a contiguous range of the in-order leaf sequence, so subtree
membership, LCA queries and restriction all reduce to interval arithmetic on
numpy arrays.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ValidationError


class HCTree:
    """Binary tree whose leaves carry distinct integer vertex labels.

    Nodes are integer ids into parallel arrays.  ``left[x] == -1`` marks a
    leaf.  ``lo[x]:hi[x]`` is the slice of ``leaf_labels`` (the in-order leaf
    sequence) under node ``x``.
    """

    __slots__ = (
        "left", "right", "parent", "root", "depth",
        "lo", "hi", "leaf_labels", "node_of_pos",
        "pos_of", "leaf_node_of", "_up", "_minlab", "_topo",
    )

    def __init__(self, left, right, leaf_label_by_node, root):
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        m = len(left)
        if m == 0:
            raise ValidationError("empty tree")
        parent = np.full(m, -1, dtype=np.int64)
        for arr in (left, right):
            ch = arr[arr >= 0]
            parent[ch] = np.flatnonzero(arr >= 0)

        # iterative in-order DFS: assign leaf positions and node ranges
        lo = np.zeros(m, dtype=np.int64)
        hi = np.zeros(m, dtype=np.int64)
        depth = np.zeros(m, dtype=np.int64)
        order: list[int] = []
        labels: list[int] = []
        stack = [(root, 0, False)]
        while stack:
            x, d, done = stack.pop()
            if done:
                hi[x] = len(labels)
                continue
            depth[x] = d
            lo[x] = len(labels)
            if left[x] < 0:
                labels.append(int(leaf_label_by_node[x]))
                hi[x] = len(labels)
                order.append(x)
            else:
                stack.append((x, d, True))
                stack.append((int(right[x]), d + 1, False))
                stack.append((int(left[x]), d + 1, False))

        leaf_labels = np.asarray(labels, dtype=np.int64)
        n = len(leaf_labels)
        if len(np.unique(leaf_labels)) != n:
            raise ValidationError("duplicate leaf labels")
        if leaf_labels.min() < 0:
            raise ValidationError("negative leaf labels")
        internal = int(np.sum(left >= 0))
        if internal != n - 1:
            raise ValidationError("tree is not binary or has unreachable nodes")

        self.left, self.right, self.parent, self.root = left, right, parent, int(root)
        self.depth, self.lo, self.hi = depth, lo, hi
        self.leaf_labels = leaf_labels
        self.node_of_pos = np.asarray(order, dtype=np.int64)
        top = int(leaf_labels.max()) + 1
        self.pos_of = np.full(top, -1, dtype=np.int64)
        self.pos_of[leaf_labels] = np.arange(n, dtype=np.int64)
        self.leaf_node_of = np.full(top, -1, dtype=np.int64)
        self.leaf_node_of[leaf_labels] = self.node_of_pos
        self._up = None
        self._minlab = None
        self._topo = None

    # -- basic shape ------------------------------------------------------

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @property
    def internal_count(self) -> int:
        return int(np.sum(self.left >= 0))

    def labels_sorted(self):
        return np.sort(self.leaf_labels)

    def has_label(self, v) -> bool:
        return 0 <= v < len(self.pos_of) and self.pos_of[v] >= 0

    def is_leaf(self, x) -> bool:
        return self.left[x] < 0

    def _check_label(self, v):
        if not self.has_label(int(v)):
            raise ValidationError(f"unknown vertex {v}")

    def topo_children_first(self):
        """Node ids ordered so every child precedes its parent."""
        if self._topo is None:
            self._topo = np.argsort(self.hi - self.lo, kind="stable")
        return self._topo

    def min_label_per_node(self):
        if self._minlab is None:
            m = self.n_nodes
            ml = np.full(m, np.iinfo(np.int64).max, dtype=np.int64)
            for x in self.topo_children_first():
                if self.left[x] < 0:
                    ml[x] = self.leaf_labels[self.lo[x]]
                else:
                    ml[x] = min(ml[self.left[x]], ml[self.right[x]])
            self._minlab = ml
        return self._minlab

    # -- queries -----------------------------------------------------------

    def leaves_under(self, x):
        """Vertex labels below node ``x`` (in-order)."""
        return self.leaf_labels[self.lo[x]:self.hi[x]]

    def leaf_count_under(self, x) -> int:
        return int(self.hi[x] - self.lo[x])

    def nonleaves_count(self, x) -> int:
        return self.n_leaves - self.leaf_count_under(x)

    def ancestor_chain(self, u):
        """Node ids from leaf(u) up to the root."""
        self._check_label(u)
        chain = [int(self.leaf_node_of[u])]
        while self.parent[chain[-1]] >= 0:
            chain.append(int(self.parent[chain[-1]]))
        return np.asarray(chain, dtype=np.int64)

    def lca(self, u, v) -> int:
        """Node id of the lowest common ancestor of leaves ``u`` and ``v``."""
        self._check_label(u)
        self._check_label(v)
        pu, pv = int(self.pos_of[u]), int(self.pos_of[v])
        x = int(self.leaf_node_of[u])
        while not (self.lo[x] <= pv < self.hi[x]):
            x = int(self.parent[x])
        return x

    def lca_set(self, labels) -> int:
        """LCA node of a set of leaf labels (deepest node covering all)."""
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) == 0:
            raise ValidationError("lca_set of empty set")
        ps = self.pos_of[labels]
        if np.any(ps < 0):
            raise ValidationError("lca_set with unknown vertices")
        u = self.leaf_labels[ps.min()]
        x = int(self.leaf_node_of[u])
        top = int(ps.max())
        while self.hi[x] <= top:
            x = int(self.parent[x])
        return x

    def _lifting(self):
        if self._up is None:
            m = self.n_nodes
            k = max(1, int(np.ceil(np.log2(max(2, int(self.depth.max()) + 1)))) + 1)
            up = np.empty((k, m), dtype=np.int64)
            up[0] = np.where(self.parent >= 0, self.parent, np.arange(m))
            for i in range(1, k):
                up[i] = up[i - 1][up[i - 1]]
            self._up = up
        return self._up

    def lca_nodes_many(self, xs, ys):
        """Vectorized LCA over pairs of node ids."""
        xs = np.asarray(xs, dtype=np.int64).copy()
        ys = np.asarray(ys, dtype=np.int64)
        up = self._lifting()
        tlo = self.lo[ys]
        thi = self.hi[ys]
        # lift xs while not covering ys' range, then one more step
        covered = (self.lo[xs] <= tlo) & (self.hi[xs] >= thi)
        for k in range(len(up) - 1, -1, -1):
            cand = up[k][xs]
            ok = ~((self.lo[cand] <= tlo) & (self.hi[cand] >= thi)) & ~covered
            xs[ok] = cand[ok]
        res = np.where(covered, xs, up[0][xs])
        return res

    def lca_many(self, us, vs):
        """Vectorized LCA over pairs of leaf labels; returns node ids."""
        xs = self.leaf_node_of[np.asarray(us, dtype=np.int64)]
        ys = self.leaf_node_of[np.asarray(vs, dtype=np.int64)]
        return self.lca_nodes_many(xs, ys)

    def splits_away(self, u, v, w) -> int:
        """The vertex of the triplet separated first from the other two.

        ``w`` splits away from ``(u, v)`` when the LCA of ``u`` and ``v`` lies
        strictly below the LCA of all three.
        """
        u, v, w = int(u), int(v), int(w)
        if len({u, v, w}) != 3:
            raise ValidationError("splits_away needs three distinct vertices")
        duv = self.depth[self.lca(u, v)]
        duw = self.depth[self.lca(u, w)]
        dvw = self.depth[self.lca(v, w)]
        if duv > duw and duv > dvw:
            return w
        if duw > duv and duw > dvw:
            return v
        if dvw > duv and dvw > duw:
            return u
        raise ValidationError("no unique split-away vertex (tree not binary?)")

    # -- ancestor-range machinery (used by the oracle and exact counters) --

    def anc_ranges(self, u):
        """(lo_k, hi_k) of the ancestors of leaf(u), from the leaf to the root."""
        chain = self.ancestor_chain(u)
        return self.lo[chain], self.hi[chain]

    def levels_from(self, u, labels):
        """For each label x: index k of the deepest ancestor of u containing x.

        k == 0 iff x == u; otherwise lca(u, x) is the k-th ancestor of leaf(u).
        """
        los, his = self.anc_ranges(u)
        ps = self.pos_of[np.asarray(labels, dtype=np.int64)]
        # los is non-increasing, his is non-decreasing along the chain
        k_lo = np.searchsorted(-los, -ps, side="left")
        k_hi = np.searchsorted(his, ps, side="right")
        return np.maximum(k_lo, k_hi)

    # -- restriction and composability -------------------------------------

    def decompose(self, labels):
        """Coarsest split of a vertex set into leaf sets of maximal subtrees.

        Returns a list of node ids; their leaf ranges partition the set.
        Any set decomposes (singletons are maximal subtrees), so this never
        fails; single-composability means the list has length one.
        """
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) == 0:
            raise ValidationError("decompose of empty set")
        ps = np.sort(self.pos_of[labels])
        if ps[0] < 0:
            raise ValidationError("decompose with unknown vertices")
        pieces = []
        i = 0
        while i < len(ps):
            # contiguous run of positions starting at ps[i]
            j = i
            while j + 1 < len(ps) and ps[j + 1] == ps[j] + 1:
                j += 1
            run_end = ps[j] + 1
            a = ps[i]
            while a < run_end:
                x = int(self.node_of_pos[a])
                while True:
                    q = int(self.parent[x])
                    if q >= 0 and self.lo[q] == a and self.hi[q] <= run_end:
                        x = q
                    else:
                        break
                pieces.append(x)
                a = int(self.hi[x])
            i = j + 1
        return pieces

    def is_composable(self, labels) -> bool:
        self.decompose(labels)
        return True

    def is_single_composable(self, labels) -> bool:
        return len(self.decompose(labels)) == 1

    def restrict(self, labels) -> "HCTree":
        """Subtree induced by a vertex set, with single-child chains contracted.

        Keeps the original labels.  Preserves the relative split-away order of
        every triplet inside the set.
        """
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) < 2:
            raise ValidationError("restrict needs at least 2 vertices")
        ps = self.pos_of[labels]
        if np.any(ps < 0):
            raise ValidationError("restrict with unknown vertices")
        mark = np.zeros(self.n_leaves + 1, dtype=np.int64)
        mark[ps] = 1
        csum = np.concatenate(([0], np.cumsum(mark[:-1])))
        b = _TreeBuilder()
        newid = np.full(self.n_nodes, -1, dtype=np.int64)
        for x in self.topo_children_first():
            x = int(x)
            cnt = csum[self.hi[x]] - csum[self.lo[x]]
            if cnt == 0:
                continue
            if self.left[x] < 0:
                newid[x] = b.leaf(int(self.leaf_labels[self.lo[x]]))
            else:
                l, r = newid[self.left[x]], newid[self.right[x]]
                if l >= 0 and r >= 0:
                    newid[x] = b.node(int(l), int(r))
                else:
                    newid[x] = l if l >= 0 else r
        return b.build(int(newid[self.root]))

    def small_tree_order(self, labels) -> "SmallTreeOrder":
        """Levels obtained by repeatedly peeling the smaller root child.

        Ties between equal-sized children go to the child containing the
        smallest vertex id; vertices inside a level are listed ascending.
        """
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) < 2:
            raise ValidationError("small_tree_order needs at least 2 vertices")
        if not self.is_single_composable(labels):
            raise ValidationError("small_tree_order needs a single-composable set")
        r = self.restrict(labels)
        ml = r.min_label_per_node()
        levels = []
        x = r.root
        while not r.is_leaf(x):
            l, rgt = int(r.left[x]), int(r.right[x])
            sl = r.leaf_count_under(l)
            sr = r.leaf_count_under(rgt)
            if sl < sr or (sl == sr and ml[l] < ml[rgt]):
                small, big = l, rgt
            else:
                small, big = rgt, l
            levels.append(np.sort(r.leaves_under(small)))
            x = big
        levels.append(np.sort(r.leaves_under(x)))
        return SmallTreeOrder(levels)

    # -- serialization ------------------------------------------------------

    def to_nested(self):
        """Nested ``[left, right]`` lists with int leaves."""
        out = {}
        for x in self.topo_children_first():
            x = int(x)
            if self.left[x] < 0:
                out[x] = int(self.leaf_labels[self.lo[x]])
            else:
                out[x] = [out[int(self.left[x])], out[int(self.right[x])]]
        return out[self.root]

    @classmethod
    def from_nested(cls, nested) -> "HCTree":
        b = _TreeBuilder()
        root = _parse_nested(nested, b, leaf_fn=lambda item: b.leaf(int(item)))
        return b.build(root)

    def to_json(self) -> str:
        return _deep_json_dumps(self.to_nested())

    @classmethod
    def from_json(cls, text) -> "HCTree":
        return cls.from_nested(_deep_json_loads(text))

    def structurally_equal(self, other) -> bool:
        # string comparison avoids deep-recursion in nested list equality
        return self.to_json() == other.to_json()


class SmallTreeOrder:
    """Peeling order of a single-composable set: disjoint levels, first level
    peeled first.  Each level is at most half of what remains before it."""

    def __init__(self, levels):
        self.levels = [np.asarray(l, dtype=np.int64) for l in levels]
        self._flat = np.concatenate(self.levels) if self.levels else np.empty(0, np.int64)

    @property
    def n_vertices(self) -> int:
        return len(self._flat)

    def flat(self):
        return self._flat

    def first(self, k):
        """The first k vertices peeled."""
        return self._flat[:k]

    def last(self, k):
        return self._flat[len(self._flat) - k:]

    def level_of(self, v) -> int:
        for i, lvl in enumerate(self.levels):
            if v in lvl:
                return i
        raise ValidationError(f"vertex {v} not in order")

    def check_halving(self) -> bool:
        remaining = self.n_vertices
        for lvl in self.levels[:-1]:
            if 2 * len(lvl) > remaining:
                return False
            remaining -= len(lvl)
        return True


class _TreeBuilder:
    """Incremental construction of node arrays."""

    def __init__(self):
        self.left = []
        self.right = []
        self.label = []

    def leaf(self, label) -> int:
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(label)
        return len(self.left) - 1

    def node(self, l, r) -> int:
        self.left.append(l)
        self.right.append(r)
        self.label.append(-1)
        return len(self.left) - 1

    def build(self, root) -> HCTree:
        return HCTree(self.left, self.right, self.label, root)


def _parse_nested(nested, builder, leaf_fn):
    """Iterative parser for nested [l, r] lists; leaf_fn handles leaf items."""
    # two-phase stack walk to avoid recursion limits on deep trees
    done = {}
    stack = [(id(nested), nested, False)]
    while stack:
        key, item, expanded = stack.pop()
        if isinstance(item, list) and len(item) == 2 and not _is_super(item):
            if expanded:
                done[key] = builder.node(done[id(item[0])], done[id(item[1])])
            else:
                stack.append((key, item, True))
                stack.append((id(item[1]), item[1], False))
                stack.append((id(item[0]), item[0], False))
        else:
            done[key] = leaf_fn(item)
    return done[id(nested)]


def _is_super(item) -> bool:
    return isinstance(item, dict) and "super" in item


def _deep_json_dumps(obj) -> str:
    """json.dumps with the recursion limit raised for deep nested trees."""
    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 40 * 4096 + 1000))
    try:
        return json.dumps(obj)
    finally:
        sys.setrecursionlimit(old)


def _deep_json_loads(text):
    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 40 * 4096 + 1000))
    try:
        return json.loads(text)
    finally:
        sys.setrecursionlimit(old)
