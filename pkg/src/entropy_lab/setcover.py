"""Minimum set cover: lazy greedy and exact branch and bound.

Sets are given as collections of point indices ``0..n_points-1``. The exact
solver first applies the classical reductions (identical points, forced
sets, dominated points and sets), splits what is left into independent
components and runs a depth-first branch and bound on each one, with the
greedy cover as incumbent and the better of two lower bounds:

* counting: ``ceil(#uncovered / largest residual set)``;
* packing: a greedy family of uncovered points no two of which share a set.

When the node budget is exhausted the result carries a certified interval
instead of the optimum.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CoverageError

DEFAULT_NODE_BUDGET = 10**7


@dataclass(frozen=True)
class CoverResult:
    """Outcome of a set-cover computation.

    ``size`` is the cardinality of the best cover found and ``lower`` a
    certified lower bound; ``exact`` means ``lower == size``.
    """

    size: int
    lower: int
    exact: bool
    chosen: tuple
    nodes: int = 0

    def __int__(self):
        return self.size


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _to_masks(sets) -> list[int]:
    masks = []
    for s in sets:
        if isinstance(s, int):
            masks.append(s)
            continue
        m = 0
        for p in s:
            m |= 1 << int(p)
        masks.append(m)
    return masks


def masks_from_incidence(incidence: np.ndarray) -> list[int]:
    """Bitmask per row of a boolean ``(n_sets, n_points)`` incidence matrix."""
    inc = np.asarray(incidence, dtype=bool)
    packed = np.packbits(inc, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def greedy_cover(sets: Sequence, n_points: int | None = None) -> list[int]:
    """Greedy cover: repeatedly take the set covering most uncovered points.

    Ties go to the lowest index. Lazy evaluation gives the same choices as
    the plain greedy rule because residual gains only decrease.
    """
    masks = _to_masks(sets)
    universe = 0
    for m in masks:
        universe |= m
    if n_points is not None and universe != (1 << n_points) - 1:
        missing = next(_bits(((1 << n_points) - 1) & ~universe))
        raise CoverageError(missing)
    heap = [(-m.bit_count(), i) for i, m in enumerate(masks) if m]
    heapq.heapify(heap)
    uncovered = universe
    chosen = []
    while uncovered:
        _, i = heapq.heappop(heap)
        gain = (masks[i] & uncovered).bit_count()
        if gain == 0:
            continue
        if not heap or (-gain, i) <= heap[0]:
            chosen.append(i)
            uncovered &= ~masks[i]
        else:
            heapq.heappush(heap, (-gain, i))
    return chosen


def _harmonic(k: int) -> float:
    return sum(1.0 / j for j in range(1, k + 1))


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    @property
    def exhausted(self):
        return self.used >= self.limit


def _lower_bound(unc, masks, point_sets, nbr, order):
    best_gain = 0
    for m in masks:
        g = (m & unc).bit_count()
        if g > best_gain:
            best_gain = g
    count_lb = -(-unc.bit_count() // best_gain)
    blocked = 0
    packing = 0
    for p in order:
        bit = 1 << p
        if unc & bit and not blocked & bit:
            packing += 1
            blocked |= nbr[p]
    return max(count_lb, packing)


def _branch_and_bound(masks: list[int], n_local: int, budget: _Budget):
    """Exact cover of ``n_local`` points by ``masks``; returns (size, lower, exact, chosen)."""
    full = (1 << n_local) - 1
    point_sets = [[] for _ in range(n_local)]
    for i, m in enumerate(masks):
        for p in _bits(m):
            point_sets[p].append(i)
    nbr = [0] * n_local
    for p in range(n_local):
        for i in point_sets[p]:
            nbr[p] |= masks[i]
    order = sorted(range(n_local), key=lambda p: (len(point_sets[p]), p))

    incumbent = greedy_cover(masks)
    best = list(incumbent)
    root_lb = _lower_bound(full, masks, point_sets, nbr, order)
    if root_lb >= len(best):
        return len(best), len(best), True, best

    stack = [(full, ())]
    aborted = False
    while stack:
        if budget.exhausted:
            aborted = True
            break
        unc, chosen = stack.pop()
        budget.used += 1
        if not unc:
            if len(chosen) < len(best):
                best = list(chosen)
            continue
        if len(chosen) + 1 >= len(best):
            continue
        if len(chosen) + _lower_bound(unc, masks, point_sets, nbr, order) >= len(best):
            continue
        pivot = min(_bits(unc), key=lambda p: (len(point_sets[p]), p))
        children = sorted(point_sets[pivot], key=lambda i: (-(masks[i] & unc).bit_count(), i))
        for i in reversed(children):
            stack.append((unc & ~masks[i], chosen + (i,)))
    if aborted:
        max_size = max(m.bit_count() for m in masks)
        ln_lb = math.ceil(len(incumbent) / _harmonic(max_size) - 1e-12)
        return len(best), max(root_lb, ln_lb), False, best
    return len(best), len(best), True, best


def _dominated_sets(sets_pts, pt_sets):
    # a superset of b must contain b's first point
    dead = set()
    for b, pts in sets_pts.items():
        p0 = min(pts)
        for a in pt_sets[p0]:
            if a != b and a not in dead and pts <= sets_pts[a]:
                if len(sets_pts[a]) > len(pts) or a < b:
                    dead.add(b)
                    break
    return dead


def _dominated_points(sets_pts, pt_sets):
    # if sets(p) <= sets(q) then q lies in every set of p, in particular the smallest one
    dead = set()
    for p, ss in pt_sets.items():
        s0 = min(ss, key=lambda s: (len(sets_pts[s]), s))
        for q in sets_pts[s0]:
            if q != p and q not in dead and ss <= pt_sets[q]:
                if len(pt_sets[q]) > len(ss) or p < q:
                    dead.add(q)
    return dead


def _reduce(sets_pts: dict, pt_sets: dict, forced: list):
    """Forced sets and dominance, to a fixpoint. Mutates its arguments."""
    changed = True
    while changed:
        changed = False
        singles = [p for p, ss in pt_sets.items() if len(ss) == 1]
        for p in singles:
            if p not in pt_sets:
                continue
            (s,) = pt_sets[p]
            forced.append(s)
            for q in sets_pts.pop(s):
                for t in pt_sets.pop(q):
                    if t != s:
                        sets_pts[t].discard(q)
            changed = True
        for s in [s for s, pts in sets_pts.items() if not pts]:
            del sets_pts[s]
        if changed:
            continue
        dead = _dominated_sets(sets_pts, pt_sets)
        for b in dead:
            for q in sets_pts.pop(b):
                pt_sets[q].discard(b)
        changed = bool(dead)
        if changed:
            continue
        dead = _dominated_points(sets_pts, pt_sets)
        for q in dead:
            for s in pt_sets.pop(q):
                sets_pts[s].discard(q)
        changed = bool(dead)


def _components(sets_pts: dict, pt_sets: dict):
    seen_sets = set()
    for start in sorted(sets_pts):
        if start in seen_sets:
            continue
        comp_sets, comp_pts = [], set()
        frontier = [start]
        seen_sets.add(start)
        while frontier:
            s = frontier.pop()
            comp_sets.append(s)
            for p in sets_pts[s]:
                if p in comp_pts:
                    continue
                comp_pts.add(p)
                for t in pt_sets[p]:
                    if t not in seen_sets:
                        seen_sets.add(t)
                        frontier.append(t)
        yield sorted(comp_sets), sorted(comp_pts)


def _pairs(sets, n_points):
    ids, pts = [], []
    for i, s in enumerate(sets):
        if isinstance(s, (int, np.integer)):
            arr = np.fromiter(_bits(int(s)), dtype=np.int64)
        elif isinstance(s, (set, frozenset)):
            arr = np.fromiter(s, dtype=np.int64, count=len(s))
        else:
            arr = np.asarray(s, dtype=np.int64).ravel()
        if arr.size:
            arr = np.unique(arr)
            if arr[0] < 0 or arr[-1] >= n_points:
                raise ValueError(f"set {i} has points outside 0..{n_points - 1}")
            ids.append(np.full(arr.size, i, dtype=np.int64))
            pts.append(arr)
    if not ids:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(ids), np.concatenate(pts)


def _forced_rounds(ps, pp, n_points, forced):
    """Vectorised forced-set elimination on an incidence pair list."""
    alive = np.ones(n_points, dtype=bool)
    while True:
        deg = np.bincount(pp, minlength=n_points)
        single = (deg == 1) & alive
        if not single.any():
            break
        fs = np.unique(ps[single[pp]])
        forced.extend(int(i) for i in fs)
        hit = np.isin(ps, fs)
        covered = np.zeros(n_points, dtype=bool)
        covered[pp[hit]] = True
        keep = ~covered[pp]
        ps, pp = ps[keep], pp[keep]
        alive &= ~covered
    return ps, pp, alive


def _dedup_points(ps, pp, alive):
    """One representative per distinct point signature (128-bit hash of its set list)."""
    n_sets = int(ps.max()) + 1
    rng = np.random.default_rng(0x5E7C0)
    w1 = rng.integers(1, 2**63, size=n_sets, dtype=np.uint64)
    w2 = rng.integers(1, 2**63, size=n_sets, dtype=np.uint64)
    n_points = alive.size
    h1 = np.zeros(n_points, dtype=np.uint64)
    h2 = np.zeros(n_points, dtype=np.uint64)
    np.add.at(h1, pp, w1[ps])
    np.add.at(h2, pp, w2[ps])
    idx = np.flatnonzero(alive)
    keys = np.stack([h1[idx], h2[idx]], axis=1)
    _, first = np.unique(keys, axis=0, return_index=True)
    rep = np.zeros(n_points, dtype=bool)
    rep[idx[first]] = True
    keep = rep[pp]
    return ps[keep], pp[keep]


def solve_set_cover(sets: Sequence, n_points: int,
                    node_budget: int = DEFAULT_NODE_BUDGET) -> CoverResult:
    """Minimum number of ``sets`` whose union is ``range(n_points)``.

    ``sets`` holds index collections (arrays, lists, sets) or bitmask ints.
    """
    ps, pp = _pairs(sets, n_points)
    return solve_set_cover_pairs(ps, pp, n_points, node_budget)


def solve_set_cover_pairs(set_ids: np.ndarray, point_ids: np.ndarray, n_points: int,
                          node_budget: int = DEFAULT_NODE_BUDGET) -> CoverResult:
    """Same as :func:`solve_set_cover` for an incidence given as parallel index arrays."""
    ps = np.asarray(set_ids, dtype=np.int64)
    pp = np.asarray(point_ids, dtype=np.int64)
    if ps.shape != pp.shape:
        raise ValueError("set_ids and point_ids differ in shape")
    if pp.size and (pp.min() < 0 or pp.max() >= n_points):
        raise ValueError(f"point ids outside 0..{n_points - 1}")
    deg = np.bincount(pp, minlength=n_points)
    if n_points and (deg == 0).any():
        raise CoverageError(int(np.flatnonzero(deg == 0)[0]))

    forced: list[int] = []
    ps, pp, alive = _forced_rounds(ps, pp, n_points, forced)
    if ps.size:
        ps, pp = _dedup_points(ps, pp, alive)

    sets_pts: dict = {}
    pt_sets: dict = {}
    order = np.lexsort((pp, ps))
    for s, p in zip(ps[order].tolist(), pp[order].tolist()):
        sets_pts.setdefault(s, set()).add(p)
        pt_sets.setdefault(p, set()).add(s)

    budget = _Budget(node_budget)
    chosen = list(forced)
    size, lower, exact = _solve_reduced(sets_pts, pt_sets, chosen, budget)
    size += len(forced)
    lower += len(forced)
    return CoverResult(size, lower if not exact else size, exact, tuple(sorted(chosen)), budget.used)


def _solve_reduced(sets_pts, pt_sets, chosen, budget):
    """Reduce, split into components and solve each; appends picks to ``chosen``."""
    forced: list[int] = []
    _reduce(sets_pts, pt_sets, forced)
    chosen.extend(forced)
    size = lower = len(forced)
    exact = True
    for comp_sets, comp_pts in list(_components(sets_pts, pt_sets)):
        local = {p: k for k, p in enumerate(comp_pts)}
        masks = []
        for s in comp_sets:
            m = 0
            for p in sets_pts[s]:
                m |= 1 << local[p]
            masks.append(m)
        c_size, c_lower, c_exact, c_chosen = _branch_and_bound(masks, len(comp_pts), budget)
        size += c_size
        lower += c_lower
        exact &= c_exact
        chosen.extend(comp_sets[i] for i in c_chosen)
    return size, lower, exact


def exhaustive_cover_size(sets: Sequence[Iterable[int]], n_points: int) -> int:
    """Brute-force optimum over all subfamilies (test oracle; tiny inputs only)."""
    from itertools import combinations

    masks = _to_masks(sets)
    full = (1 << n_points) - 1
    for k in range(1, len(masks) + 1):
        for combo in combinations(masks, k):
            acc = 0
            for m in combo:
                acc |= m
            if acc == full:
                return k
    raise CoverageError(None, "sets do not cover the universe")
