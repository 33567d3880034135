"""Partial clustering trees: leaves may hold unresolved vertex groups.

A leaf is either a singleton vertex or a "super-vertex" (a set of at most
``tau`` vertices whose internal clustering is left open).  Consistency of a
partial tree against a reference tree is checked here in two flavours:
*strong* (every super-vertex is a maximal subtree of the reference) and
*weak* (a super-vertex may be a maximal subtree with one maximal subtree
carved out of it, i.e. out-degree at most two after contraction: one edge to
the parent of its LCA and one to the sibling of a contained maximal subtree).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hctree import (HCTree, _TreeBuilder, _parse_nested, _is_super,
                     _deep_json_dumps, _deep_json_loads)

MAX_REPORTED_VIOLATIONS = 50


class PartialHCTree:
    """Binary tree whose leaves carry disjoint vertex sets.

    Same positional-range layout as :class:`HCTree`, but over the flat
    concatenation of the leaf vertex sets.
    """

    __slots__ = ("left", "right", "parent", "root", "lo", "hi",
                 "vertices_flat", "leaf_nodes", "tau", "_leaf_of_vertex")

    def __init__(self, left, right, leaf_sets_by_node, root, tau):
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        m = len(left)
        parent = np.full(m, -1, dtype=np.int64)
        for arr in (left, right):
            ch = arr[arr >= 0]
            parent[ch] = np.flatnonzero(arr >= 0)

        lo = np.zeros(m, dtype=np.int64)
        hi = np.zeros(m, dtype=np.int64)
        flat: list[np.ndarray] = []
        count = 0
        leaf_nodes = []
        stack = [(int(root), False)]
        while stack:
            x, done = stack.pop()
            if done:
                hi[x] = count
                continue
            lo[x] = count
            if left[x] < 0:
                vs = np.sort(np.asarray(leaf_sets_by_node[x], dtype=np.int64))
                if len(vs) == 0:
                    raise ValidationError("empty leaf set")
                flat.append(vs)
                count += len(vs)
                hi[x] = count
                leaf_nodes.append(x)
            else:
                stack.append((x, True))
                stack.append((int(right[x]), False))
                stack.append((int(left[x]), False))

        self.left, self.right, self.parent, self.root = left, right, parent, int(root)
        self.lo, self.hi = lo, hi
        self.vertices_flat = np.concatenate(flat)
        self.leaf_nodes = np.asarray(leaf_nodes, dtype=np.int64)
        self.tau = int(tau)
        if len(np.unique(self.vertices_flat)) != len(self.vertices_flat):
            raise ValidationError("leaf sets are not disjoint")
        top = int(self.vertices_flat.max()) + 1
        self._leaf_of_vertex = np.full(top, -1, dtype=np.int64)
        for x in self.leaf_nodes:
            self._leaf_of_vertex[self.vertices_flat[lo[x]:hi[x]]] = x

    # -- shape ---------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices_flat)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_nodes)

    def is_leaf(self, x) -> bool:
        return self.left[x] < 0

    def leaf_set(self, x):
        return self.vertices_flat[self.lo[x]:self.hi[x]]

    def vertices_under(self, x):
        return self.vertices_flat[self.lo[x]:self.hi[x]]

    def leaf_of_vertex(self, v) -> int:
        if not (0 <= v < len(self._leaf_of_vertex)) or self._leaf_of_vertex[v] < 0:
            raise ValidationError(f"unknown vertex {v}")
        return int(self._leaf_of_vertex[v])

    def super_leaves(self):
        """Leaf node ids holding two or more vertices."""
        return [int(x) for x in self.leaf_nodes if self.hi[x] - self.lo[x] >= 2]

    def max_super_size(self) -> int:
        return int((self.hi[self.leaf_nodes] - self.lo[self.leaf_nodes]).max())

    def lca_nodes(self, x, y) -> int:
        a, b = int(x), int(y)
        tlo, thi = min(self.lo[a], self.lo[b]), max(self.hi[a], self.hi[b])
        while not (self.lo[a] <= tlo and self.hi[a] >= thi):
            a = int(self.parent[a])
        return a

    def lca_vertices(self, u, v) -> int:
        return self.lca_nodes(self.leaf_of_vertex(u), self.leaf_of_vertex(v))

    def lca_vertex_set(self, vs) -> int:
        vs = np.asarray(vs, dtype=np.int64)
        nodes = self._leaf_of_vertex[vs]
        x = int(nodes[0])
        tlo = self.lo[nodes].min()
        thi = self.hi[nodes].max()
        while not (self.lo[x] <= tlo and self.hi[x] >= thi):
            x = int(self.parent[x])
        return x

    def leaf_count_under_vertices(self, u, v) -> int:
        """Number of vertices below the LCA of the leaves holding u and v."""
        x = self.lca_vertices(u, v)
        return int(self.hi[x] - self.lo[x])

    def internal_nodes(self):
        return np.flatnonzero(self.left >= 0)

    # -- serialization ---------------------------------------------------------

    def to_nested(self):
        order = np.argsort(self.hi - self.lo, kind="stable")
        out = {}
        for x in order:
            x = int(x)
            if self.left[x] < 0:
                vs = self.leaf_set(x)
                out[x] = int(vs[0]) if len(vs) == 1 else {"super": [int(v) for v in vs]}
            else:
                out[x] = [out[int(self.left[x])], out[int(self.right[x])]]
        return out[self.root]

    def to_json(self) -> str:
        return _deep_json_dumps(self.to_nested())

    @classmethod
    def from_nested(cls, nested, tau) -> "PartialHCTree":
        b = _PartialBuilder()

        def leaf_fn(item):
            if _is_super(item):
                return b.leaf(item["super"])
            return b.leaf([int(item)])

        root = _parse_nested(nested, b, leaf_fn=leaf_fn)
        return b.build(root, tau)

    @classmethod
    def from_json(cls, text, tau) -> "PartialHCTree":
        return cls.from_nested(_deep_json_loads(text), tau)

    @classmethod
    def single_super(cls, vertices, tau) -> "PartialHCTree":
        b = _PartialBuilder()
        r = b.leaf(vertices)
        return b.build(r, tau)


class _PartialBuilder:
    def __init__(self):
        self.left = []
        self.right = []
        self.sets = []

    def leaf(self, vertices) -> int:
        self.left.append(-1)
        self.right.append(-1)
        self.sets.append(np.asarray(vertices, dtype=np.int64))
        return len(self.left) - 1

    def node(self, l, r) -> int:
        self.left.append(l)
        self.right.append(r)
        self.sets.append(None)
        return len(self.left) - 1

    def build(self, root, tau) -> PartialHCTree:
        return PartialHCTree(self.left, self.right, self.sets, root, tau)


@dataclass
class ConsistencyReport:
    ok: bool
    violations: list = field(default_factory=list)
    n_leaves: int = 0
    n_supers: int = 0
    n_internal: int = 0
    checked: int = 0

    def add(self, msg):
        self.ok = False
        if len(self.violations) < MAX_REPORTED_VIOLATIONS:
            self.violations.append(msg)

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


def _check_universe(partial: PartialHCTree, ref: HCTree, rep: ConsistencyReport):
    got = np.sort(partial.vertices_flat)
    want = ref.labels_sorted()
    if len(got) != len(want) or np.any(got != want):
        rep.add("leaf sets do not partition the reference vertex set")
        return False
    return True


def _node_leafset_maximal(ref: HCTree, vs) -> tuple[bool, int]:
    """Whether vs equals the leaf set of its own LCA in ref; returns (ok, lca)."""
    z = ref.lca_set(vs)
    return ref.leaf_count_under(z) == len(vs), z


def _check_consistency(partial: PartialHCTree, ref: HCTree, strong: bool) -> ConsistencyReport:
    rep = ConsistencyReport(ok=True)
    rep.n_leaves = partial.n_leaves
    rep.n_internal = len(partial.internal_nodes())
    if not _check_universe(partial, ref, rep):
        return rep

    # contraction property of every super-vertex
    for x in partial.leaf_nodes:
        vs = partial.leaf_set(int(x))
        if len(vs) == 1:
            continue
        rep.n_supers += 1
        if len(vs) > partial.tau:
            rep.add(f"super-vertex of size {len(vs)} exceeds tau={partial.tau}")
        ok, z = _node_leafset_maximal(ref, vs)
        if strong:
            if not ok:
                rep.add(f"super-vertex at node {int(x)} is not a maximal subtree")
        else:
            if not ok:
                hole = np.setdiff1d(ref.leaves_under(z), vs, assume_unique=False)
                hok, _ = _node_leafset_maximal(ref, hole)
                if not hok:
                    rep.add(
                        f"super-vertex at node {int(x)}: complement inside its LCA "
                        "is not a single maximal subtree (out-degree > 2)"
                    )

    # subtree preservation, node-wise with anchor side classification
    anchors = np.full(partial.left.shape, -1, dtype=np.int64)
    for x in partial.leaf_nodes:
        anchors[int(x)] = ref.lca_set(partial.leaf_set(int(x)))
    topo = np.argsort(partial.hi - partial.lo, kind="stable")
    leaf_lists: dict[int, list[int]] = {}
    for x in topo:
        x = int(x)
        if partial.is_leaf(x):
            leaf_lists[x] = [x]
            continue
        a, b = int(partial.left[x]), int(partial.right[x])
        sv = partial.vertices_under(x)
        rep.checked += 1
        ok, z = _node_leafset_maximal(ref, sv)
        if not ok:
            rep.add(f"internal node {x}: vertex set is not a maximal subtree of the reference")
            leaf_lists[x] = leaf_lists.pop(a) + leaf_lists.pop(b)
            continue
        c1, c2 = int(ref.left[z]), int(ref.right[z])
        la, lb = leaf_lists.pop(a), leaf_lists.pop(b)
        cls_a = _anchor_sides(ref, anchors, la, c1, c2)
        cls_b = _anchor_sides(ref, anchors, lb, c1, c2)
        if (1 in cls_a and 1 in cls_b) or (2 in cls_a and 2 in cls_b):
            rep.add(
                f"internal node {x}: some leaf pair across its children has an "
                "LCA below this node in the reference"
            )
        leaf_lists[x] = la + lb
    return rep


def _anchor_sides(ref: HCTree, anchors, leaves, c1, c2):
    sides = set()
    for ln in leaves:
        z = anchors[ln]
        if ref.lo[c1] <= ref.lo[z] and ref.hi[z] <= ref.hi[c1]:
            sides.add(1)
        elif ref.lo[c2] <= ref.lo[z] and ref.hi[z] <= ref.hi[c2]:
            sides.add(2)
        else:
            sides.add(0)
    return sides


def check_strong_consistency(partial: PartialHCTree, ref: HCTree) -> ConsistencyReport:
    """Verify the strong contraction and subtree preservation properties."""
    return _check_consistency(partial, ref, strong=True)


def check_weak_consistency(partial: PartialHCTree, ref: HCTree) -> ConsistencyReport:
    """Verify the weak contraction (out-degree <= 2) and subtree preservation."""
    return _check_consistency(partial, ref, strong=False)
