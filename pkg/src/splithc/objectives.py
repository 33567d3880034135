"""Clustering objectives: cost (minimize) and revenue (maximize).

cost(T)  = sum over edges of w(e) * |leaves under lca(u, v)|
rev(T)   = sum over edges of w(e) * (n - |leaves under lca(u, v)|)

so rev(T) + cost(T) = n * total_weight for every tree.  Both accept an
optional edge-index subset; objectives are additive over edge partitions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import Graph, total_weight
from .hctree import HCTree
from .ptree import PartialHCTree, check_weak_consistency


@dataclass
class ObjectiveValue:
    value: float
    breakdown: list | None = None  # [(u, v, contribution)] when requested


def _edge_leafcounts(g: Graph, tree: HCTree, edge_idx=None):
    if tree.n_leaves != g.n:
        raise ValidationError("tree leaves and graph vertices differ")
    if edge_idx is None:
        eu, ev, ew = g.eu, g.ev, g.ew
    else:
        edge_idx = np.asarray(edge_idx, dtype=np.int64)
        eu, ev, ew = g.eu[edge_idx], g.ev[edge_idx], g.ew[edge_idx]
    if len(eu) == 0:
        return eu, ev, ew, np.zeros(0, dtype=np.int64)
    zs = tree.lca_many(eu, ev)
    counts = tree.hi[zs] - tree.lo[zs]
    return eu, ev, ew, counts


def dasgupta_cost(g: Graph, tree: HCTree, edge_idx=None, breakdown=False) -> ObjectiveValue:
    """Total cost; per-edge contribution is w(e) * leaves-under-LCA."""
    eu, ev, ew, counts = _edge_leafcounts(g, tree, edge_idx)
    contrib = ew * counts
    out = ObjectiveValue(float(contrib.sum()))
    if breakdown:
        out.breakdown = [(int(u), int(v), float(c)) for u, v, c in zip(eu, ev, contrib)]
    return out


def mw_revenue(g: Graph, tree: HCTree, edge_idx=None, breakdown=False) -> ObjectiveValue:
    """Total revenue; per-edge contribution is w(e) * leaves outside the LCA."""
    eu, ev, ew, counts = _edge_leafcounts(g, tree, edge_idx)
    contrib = ew * (g.n - counts)
    out = ObjectiveValue(float(contrib.sum()))
    if breakdown:
        out.breakdown = [(int(u), int(v), float(c)) for u, v, c in zip(eu, ev, contrib)]
    return out


def edge_partition_by_supervertex(g: Graph, partial: PartialHCTree):
    """Edge indices split into (same super-vertex, crossing super-vertices)."""
    lu = partial._leaf_of_vertex[g.eu]
    lv = partial._leaf_of_vertex[g.ev]
    same = np.flatnonzero(lu == lv)
    cross = np.flatnonzero(lu != lv)
    return same, cross


@dataclass
class MWStructureReport:
    n: int
    tau: int
    low_nonleaf_limit: float
    n_same: int = 0
    n_cross_disjoint: int = 0
    n_cross_nested: int = 0
    same_floor: int = 0                  # n - tau
    same_floor_ok: bool = True
    disjoint_equal_ok: bool = True       # nonleaves match the reference exactly
    max_nested_deficit: int = 0
    nested_deficit_ok: bool = True
    low_edge_count: int = 0
    low_revenue_share: float = 0.0
    violations: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__)


def mw_structure_report(g: Graph, partial: PartialHCTree, ref: HCTree,
                        extension: HCTree | None = None,
                        low_nonleaf_limit: float | None = None) -> MWStructureReport:
    """Per-edge nonleaf accounting of a weakly consistent partial tree.

    Classifies each edge as same-super-vertex, cross with disjoint
    super-vertex LCAs (nonleaf count matches the reference exactly), or
    cross with nested LCAs (deficit at most tau).  ``extension`` is an
    optional full tree refining the partial tree (used for the nonleaf
    counts of same-super-vertex edges); when absent, partial-tree LCAs are
    used.  ``low_nonleaf_limit`` bounds the "low" edge class whose revenue
    share is aggregated (default: tau * log2(n), a desk-scale stand-in for
    the asymptotic threshold).
    """
    chk = check_weak_consistency(partial, ref)
    if not chk.ok:
        raise ValidationError("partial tree is not weakly consistent: "
                              + "; ".join(chk.violations[:3]))
    n = g.n
    if low_nonleaf_limit is None:
        low_nonleaf_limit = partial.tau * np.log2(max(2, n))
    rep = MWStructureReport(n=n, tau=partial.tau, low_nonleaf_limit=float(low_nonleaf_limit))
    rep.same_floor = n - partial.tau

    ref_z = ref.lca_many(g.eu, g.ev)
    ref_nonleaf = g.n - (ref.hi[ref_z] - ref.lo[ref_z])

    lu = partial._leaf_of_vertex[g.eu]
    lv = partial._leaf_of_vertex[g.ev]
    anchors = {}
    for x in partial.leaf_nodes:
        anchors[int(x)] = ref.lca_set(partial.leaf_set(int(x)))

    low_rev = 0.0
    total_rev = float((g.ew * ref_nonleaf).sum())
    for i in range(g.m):
        u, v, w = int(g.eu[i]), int(g.ev[i]), float(g.ew[i])
        if lu[i] == lv[i]:
            rep.n_same += 1
            if extension is not None:
                z = extension.lca(u, v)
                nl = extension.nonleaves_count(z)
                if nl < rep.same_floor:
                    rep.same_floor_ok = False
                    rep.violations.append(f"same-super edge ({u},{v}): nonleaves {nl} < {rep.same_floor}")
            continue
        za, zb = anchors[int(lu[i])], anchors[int(lv[i])]
        disjoint = ref.hi[za] <= ref.lo[zb] or ref.hi[zb] <= ref.lo[za]
        out_nl = n - partial.leaf_count_under_vertices(u, v) if extension is None \
            else extension.nonleaves_count(extension.lca(u, v))
        if disjoint:
            rep.n_cross_disjoint += 1
            if out_nl != ref_nonleaf[i]:
                rep.disjoint_equal_ok = False
                rep.violations.append(
                    f"cross-disjoint edge ({u},{v}): nonleaves {out_nl} != {int(ref_nonleaf[i])}")
        else:
            rep.n_cross_nested += 1
            deficit = int(ref_nonleaf[i]) - out_nl
            rep.max_nested_deficit = max(rep.max_nested_deficit, deficit)
            if deficit > partial.tau:
                rep.nested_deficit_ok = False
                rep.violations.append(
                    f"cross-nested edge ({u},{v}): deficit {deficit} > tau={partial.tau}")
            if ref_nonleaf[i] <= low_nonleaf_limit:
                rep.low_edge_count += 1
                low_rev += w * float(ref_nonleaf[i])
    rep.low_revenue_share = low_rev / total_rev if total_rev > 0 else 0.0
    return rep


def objective_identity_gap(g: Graph, tree: HCTree) -> float:
    """Relative gap of rev + cost against n * total_weight (0 when exact)."""
    lhs = mw_revenue(g, tree).value + dasgupta_cost(g, tree).value
    rhs = g.n * total_weight(g)
    scale = max(abs(rhs), 1.0)
    return abs(lhs - rhs) / scale
