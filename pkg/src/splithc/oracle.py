"""Noisy triplet-splitting oracle.

For a triplet of distinct vertices the oracle answers which one separates
first from the other two in a fixed ground-truth tree.  With probability p
the answer is correct; otherwise a pluggable adversary picks one of the two
wrong vertices.  Both the corruption coin and the adversary's choice are
derived from a stateless hash of (seed, unordered triplet), so repeated
queries of the same triplet always return the same answer and no memo table
is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hctree import HCTree

ADVERSARIES = ("random_wrong", "fixed_min_wrong", "alt_tree")

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _coin_threshold(p) -> int:
    """Integer threshold t: the triplet is answered truthfully iff the top
    53 hash bits are below t; equals P(correct) = p up to 2^-53."""
    import math
    return min(1 << 53, int(math.ceil(p * (1 << 53))))


def _mix64(x):
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        return x ^ (x >> np.uint64(31))


@dataclass
class OracleConfig:
    p: float = 0.9
    adversary: str = "random_wrong"
    seed: int = 0
    alt_tree: HCTree | None = None

    def __post_init__(self):
        if not (0.5 < self.p <= 1.0):
            raise ValidationError("correctness probability must be in (1/2, 1]")
        if self.adversary not in ADVERSARIES:
            raise ValidationError(f"unknown adversary {self.adversary!r}")
        if self.adversary == "alt_tree" and self.alt_tree is None:
            raise ValidationError("alt_tree adversary needs an alternative tree")


class SplittingOracle:
    """Deterministic-per-triplet answer source backed by a ground-truth tree."""

    def __init__(self, truth: HCTree, config: OracleConfig, track_distinct=None):
        self.truth = truth
        self.config = config
        self.total_queries = 0
        n = truth.n_leaves
        if track_distinct is None:
            track_distinct = n <= 300
        self._distinct = set() if track_distinct else None
        self._code_base = np.int64(int(truth.leaf_labels.max()) + 1)
        # per-vertex hash material; triplet key is the (commutative) sum
        ids = np.arange(int(truth.leaf_labels.max()) + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            self._hv = _mix64((ids + np.uint64(1)) * _GOLD)
        self._hseed = _mix64(np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF) ^ _GOLD)
        self._coin = np.uint64(_coin_threshold(config.p))

    # -- accounting ---------------------------------------------------------

    @property
    def is_perfect(self) -> bool:
        return self.config.p >= 1.0

    def query_count(self):
        """(total queries, distinct triplets or None when not tracked)."""
        d = len(self._distinct) if self._distinct is not None else None
        return self.total_queries, d

    def count_virtual(self, k: int):
        """Account for k queries answered through the exact-count shortcut."""
        self.total_queries += int(k)

    def _note(self, lo3, mid, hi3, valid=None):
        self.total_queries += int(valid.sum()) if valid is not None else int(np.size(lo3))
        if self._distinct is not None:
            codes = (lo3.astype(np.int64) * self._code_base + mid) * self._code_base + hi3
            if valid is not None:
                codes = codes[valid]
            self._distinct.update(codes.ravel().tolist())

    # -- core answer machinery ------------------------------------------------

    def _corrupt(self, lo3, mid, hi3, truth, adv_truth=None):
        """Apply the noise channel to truthful answers (all arrays uint-safe)."""
        if self.config.p >= 1.0:
            return truth
        with np.errstate(over="ignore"):
            code = self._hv[lo3] + self._hv[mid] + self._hv[hi3]
            h = _mix64(code ^ self._hseed)
        correct = (h >> np.uint64(11)) < self._coin
        w_small = np.where(truth == lo3, mid, lo3)
        w_big = np.where(truth == hi3, mid, hi3)
        adv = self.config.adversary
        if adv == "fixed_min_wrong":
            pick = w_small
        elif adv == "random_wrong":
            pick = np.where((h & np.uint64(1)).astype(bool), w_big, w_small)
        else:  # alt_tree
            pick = np.where((adv_truth != truth) & (adv_truth >= 0), adv_truth, w_small)
        return np.where(correct, truth, pick)

    def query(self, u, v, w) -> int:
        """Answer for one triplet; invariant under argument order."""
        out = self.query_many(np.array([u]), np.array([v]), np.array([w]))
        return int(out[0])

    def query_many(self, us, vs, ws):
        """Vectorized answers for arrays of distinct-vertex triplets."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        ws = np.asarray(ws, dtype=np.int64)
        if np.any(us == vs) or np.any(us == ws) or np.any(vs == ws):
            raise ValidationError("triplet with repeated vertices")
        truth = self._truth_many(self.truth, us, vs, ws)
        adv_truth = None
        if self.config.adversary == "alt_tree":
            adv_truth = self._truth_many(self.config.alt_tree, us, vs, ws)
        lo3 = np.minimum(np.minimum(us, vs), ws)
        hi3 = np.maximum(np.maximum(us, vs), ws)
        mid = us + vs + ws - lo3 - hi3
        self._note(lo3, mid, hi3)
        return self._corrupt(lo3, mid, hi3, truth, adv_truth)

    @staticmethod
    def _truth_many(tree: HCTree, us, vs, ws):
        zuv = tree.lca_many(us, vs)
        zuw = tree.lca_many(us, ws)
        zvw = tree.lca_many(vs, ws)
        duv, duw, dvw = tree.depth[zuv], tree.depth[zuw], tree.depth[zvw]
        return np.where(duv > np.maximum(duw, dvw), ws,
                        np.where(duw > np.maximum(duv, dvw), vs, us))

    def answers_block(self, u, ts, vs):
        """2D answers for triplets (u, vs[j], ts[i]); -1 marks degenerates.

        Degenerate cells are ts[i] == u rows and vs[j] == ts[i] cells; the
        caller must keep u out of vs.
        """
        ts = np.asarray(ts, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        truth, valid = self._truth_block(self.truth, u, ts, vs)
        adv_truth = None
        if self.config.adversary == "alt_tree":
            adv_truth, _ = self._truth_block(self.config.alt_tree, u, ts, vs)
        t2 = ts[:, None]
        v2 = vs[None, :]
        lo3 = np.minimum(np.minimum(t2, v2), u)
        hi3 = np.maximum(np.maximum(t2, v2), u)
        mid = u + t2 + v2 - lo3 - hi3
        self._note(lo3, mid, hi3, valid=valid)
        ans = self._corrupt(lo3, mid, hi3, truth, adv_truth)
        return np.where(valid, ans, np.int64(-1))

    def pair_counts_compiled(self, u, count_set, test_set):
        """Jitted c1/c2 accumulation; None when the kernel is unavailable.

        Semantically identical to summing :meth:`answers_block` matches, but
        cell-at-a-time in compiled code and without materializing answers.
        """
        from ._kernels import pair_count_kernel
        if pair_count_kernel is None or self._distinct is not None:
            return None
        tree = self.truth
        u = int(u)
        ts = np.asarray(count_set, dtype=np.int64)
        vs = np.asarray(test_set, dtype=np.int64)
        los, his = tree.anc_ranges(u)
        lev = tree.levels_from(u, ts)
        keep = lev > 0
        ts = ts[keep]
        lev = lev[keep]
        zlo, zhi = los[lev], his[lev]
        clo, chi = los[lev - 1], his[lev - 1]
        pos_v = tree.pos_of[vs]
        adv = self.config.adversary
        mode = {"random_wrong": 0, "fixed_min_wrong": 1, "alt_tree": 2}[adv]
        if mode == 2:
            at = self.config.alt_tree
            alos, ahis = at.anc_ranges(u)
            alev = at.levels_from(u, ts)
            azlo, azhi = alos[alev], ahis[alev]
            aclo, achi = alos[np.maximum(alev - 1, 0)], ahis[np.maximum(alev - 1, 0)]
            bad = alev == 0  # u == t never occurs here (filtered above)
            azlo, azhi = azlo.copy(), azhi.copy()
            azlo[bad] = 0
            azhi[bad] = 0
            apos = at.pos_of[vs]
        else:
            azlo = azhi = aclo = achi = np.zeros(0, dtype=np.int64)
            apos = np.zeros(0, dtype=np.int64)
        c1 = np.zeros(len(vs), dtype=np.int64)
        c2 = np.zeros(len(vs), dtype=np.int64)
        nq = pair_count_kernel(u, ts, zlo, zhi, clo, chi, vs, pos_v,
                               self._hv, self._hseed, self._coin, mode,
                               azlo, azhi, aclo, achi, apos, c1, c2)
        self.total_queries += int(nq)
        return c1, c2

    @staticmethod
    def _truth_block(tree: HCTree, u, ts, vs):
        """Truthful 2D answers plus a validity mask, via ancestor ranges of u."""
        los, his = tree.anc_ranges(u)
        lev = tree.levels_from(u, ts)
        ok_t = lev > 0
        lev_safe = np.maximum(lev, 1)
        zlo, zhi = los[lev_safe], his[lev_safe]
        clo, chi = los[lev_safe - 1], his[lev_safe - 1]
        p = tree.pos_of[vs]
        in_z = (p[None, :] >= zlo[:, None]) & (p[None, :] < zhi[:, None])
        in_c = (p[None, :] >= clo[:, None]) & (p[None, :] < chi[:, None])
        truth = np.where(~in_z, vs[None, :], np.where(in_c, ts[:, None], np.int64(u)))
        valid = ok_t[:, None] & (vs[None, :] != ts[:, None])
        return truth, valid
