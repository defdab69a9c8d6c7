"""Spanning sets for the Bowen metric and the d-entropy estimate.

``G_n(eps, Y)`` is the least number of centres, taken from a finite sample
of ``Y``, whose open ``d_n``-balls of radius ``eps`` cover the sample. The
growth rate of ``log G_n`` in ``n`` at fixed ``eps`` is the finite-scale
stand-in for ``g(eps, Y)``; the entropy estimate is the largest such rate
over the schedule.

Orbits of the sample are computed once. Pairwise ``d_n`` matrices are kept
as a running maximum, so every (n, eps) cell costs one threshold plus the
cover itself.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cover_entropy import fit_slope
from .dynamics import Map, Metric, Space, orbit_batch, pairwise_chunked
from .errors import DomainError
from .setcover import DEFAULT_NODE_BUDGET, solve_set_cover_pairs

EXACT_CAP = 256


@dataclass
class SampleRegion:
    """A finite sample of a subset ``Y`` of the state space.

    ``resolution`` is the grid spacing, measured in the metric named by
    ``resolution_metric``, when the sample is a regular grid (``None`` for
    explicit point lists).
    """

    points: np.ndarray
    space: Space
    description: str = "explicit"
    resolution: float | None = None
    resolution_metric: str | None = None

    def __post_init__(self):
        self.points = self.space.batch(self.points)
        if len(self.points) == 0:
            raise DomainError("a sample region needs at least one point")

    def __len__(self):
        return len(self.points)


def circle_grid(n_points: int, offset: float = 0.0) -> SampleRegion:
    """``n_points`` equally spaced points of R/Z."""
    pts = (np.arange(n_points) + offset) / n_points
    return SampleRegion(pts, Space("circle"), f"circle grid, {n_points} points", 1.0 / n_points,
                        "circle_arc")


def box_grid(lo, hi, shape) -> SampleRegion:
    """Tensor grid on the box ``[lo, hi]`` with ``shape`` points per axis (endpoints included)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    shape = np.broadcast_to(np.atleast_1d(shape), lo.shape)
    if lo.shape != hi.shape or np.any(hi <= lo) or np.any(shape < 2):
        raise DomainError("need lo < hi and at least two points per axis")
    axes = [np.linspace(a, b, int(k)) for a, b, k in zip(lo, hi, shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    res = float(max((b - a) / (k - 1) for a, b, k in zip(lo, hi, shape)))
    desc = f"box grid {lo.tolist()}..{hi.tolist()}, shape {shape.tolist()}"
    return SampleRegion(pts, Space("euclidean", len(lo)), desc, res, "euclidean")


def symmetric_grid(radius: float, n_points: int, dim: int = 1) -> SampleRegion:
    """Grid on ``[-radius, radius]^dim``; a truncation of the whole space."""
    return box_grid([-radius] * dim, [radius] * dim, [n_points] * dim)


def shift_words(alphabet: int, length: int) -> SampleRegion:
    """Every word of the given length (one representative per cylinder)."""
    if alphabet ** length > 2**22:
        raise DomainError("too many words")
    words = np.array(list(itertools.product(range(alphabet), repeat=length)), dtype=np.uint8)
    return SampleRegion(words.reshape(-1, length), Space("shift", alphabet=alphabet),
                        f"all {alphabet}-ary words of length {length}", 2.0 ** -length,
                        "shift_cylinder")


def region_from_config(cfg: dict) -> SampleRegion:
    kind = cfg["kind"]
    if kind == "circle_grid":
        return circle_grid(cfg["points"], cfg.get("offset", 0.0))
    if kind == "box_grid":
        return box_grid(cfg["lo"], cfg["hi"], cfg["shape"])
    if kind == "symmetric_grid":
        return symmetric_grid(cfg["radius"], cfg["points"], cfg.get("dim", 1))
    if kind == "shift_words":
        return shift_words(cfg.get("alphabet", 2), cfg["length"])
    raise DomainError(f"unknown region kind {kind!r}")


# --------------------------------------------------------------------------
# orbit cache


class BowenTable:
    """Running-maximum ``d_n`` matrices of a sample, advanced one step at a time."""

    def __init__(self, map: Map, metric: Metric, region: SampleRegion, n_max: int):
        if map.space != region.space:
            raise DomainError("map and region live on different spaces")
        if n_max < 0:
            raise DomainError("n must be nonnegative")
        self.map, self.metric, self.region = map, metric, region
        self.orbits = orbit_batch(map, region.points, n_max)
        self.n = -1
        self.D = np.zeros((len(region), len(region)))

    def advance(self) -> np.ndarray:
        """Fold in the next iterate and return the current ``d_n`` matrix."""
        self.n += 1
        X = self.orbits[self.n]
        for start, block in pairwise_chunked(self.metric, X, X):
            rows = self.D[start:start + block.shape[0]]
            np.maximum(rows, block, out=rows)
        return self.D

    def __iter__(self):
        while self.n + 1 < len(self.orbits):
            yield self.n + 1, self.advance()


def _neighbours(D: np.ndarray, eps: float):
    """CSR arrays of the strict ``eps``-balls; ball membership is symmetric."""
    B = D < eps
    indptr = np.concatenate([[0], np.cumsum(B.sum(axis=1))])
    indices = np.nonzero(B)[1]
    return indptr, indices


def greedy_spanning(indptr: np.ndarray, indices: np.ndarray) -> list[int]:
    """Plain greedy cover by balls, lowest index on ties.

    Because ``j`` is in the ball of ``i`` exactly when ``i`` is in the ball
    of ``j``, covering point ``p`` lowers the gain of precisely the balls
    centred at the neighbours of ``p``.
    """
    n = len(indptr) - 1
    gain = np.diff(indptr).astype(np.int64)
    covered = np.zeros(n, dtype=bool)
    left = n
    chosen = []
    while left:
        c = int(np.argmax(gain))
        chosen.append(c)
        new = indices[indptr[c]:indptr[c + 1]]
        new = new[~covered[new]]
        covered[new] = True
        left -= new.size
        hit = np.concatenate([indices[indptr[p]:indptr[p + 1]] for p in new])
        gain -= np.bincount(hit, minlength=n)
    return chosen


@dataclass(frozen=True)
class SpanningResult:
    count: int
    exact: bool
    lower: int
    centres: tuple

    def __int__(self):
        return self.count


def _span(D, eps, mode, exact_cap, node_budget):
    indptr, indices = _neighbours(D, eps)
    greedy = greedy_spanning(indptr, indices)
    if mode == "greedy":
        # a greedy cover is within the harmonic factor of the optimum
        lower = int(np.ceil(len(greedy) / (1.0 + np.log(len(indptr) - 1)) - 1e-12))
        return SpanningResult(len(greedy), False, max(lower, 1), tuple(greedy))
    if len(indptr) - 1 > exact_cap:
        raise DomainError(f"exact_small mode is limited to {exact_cap} sample points")
    centres = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    res = solve_set_cover_pairs(centres, indices, len(indptr) - 1, node_budget)
    return SpanningResult(res.size, res.exact, res.lower, res.chosen)


def spanning_set(map: Map, metric: Metric, region: SampleRegion, n: int, eps: float,
                 mode: str = "greedy", exact_cap: int = EXACT_CAP,
                 node_budget: int = DEFAULT_NODE_BUDGET) -> SpanningResult:
    """An ``(n, eps)``-spanning subset of the sample, with its size."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    if mode not in ("greedy", "exact_small"):
        raise DomainError(f"unknown mode {mode!r}")
    table = BowenTable(map, metric, region, n)
    for _ in table:
        pass
    return _span(table.D, eps, mode, exact_cap, node_budget)


def spanning_cardinality(map: Map, metric: Metric, region: SampleRegion, n: int, eps: float,
                         mode: str = "greedy", exact_cap: int = EXACT_CAP) -> int:
    """``G_n(eps)`` over the sample (greedy upper bound or exact for small samples)."""
    return spanning_set(map, metric, region, n, eps, mode, exact_cap).count


def spanning_counts(map: Map, metric: Metric, region: SampleRegion, eps_list, n_values,
                    mode: str = "greedy", threads: int = 1) -> dict:
    """``{(n, eps): count}`` for a whole schedule, sharing the orbit cache."""
    eps_list = [float(e) for e in eps_list]
    if any(not e > 0 for e in eps_list):
        raise DomainError("eps must be positive")
    wanted = sorted(set(int(n) for n in n_values))
    if not wanted or wanted[0] < 0:
        raise DomainError("n values must be nonnegative")
    table = BowenTable(map, metric, region, wanted[-1])
    out = {}
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        for n, D in table:
            if n not in wanted:
                continue
            results = pool.map(lambda e: _span(D, e, mode, EXACT_CAP, DEFAULT_NODE_BUDGET), eps_list)
            for e, r in zip(eps_list, results):
                out[(n, e)] = r.count
    return out


def epsilon_slope(map: Map, metric: Metric, region: SampleRegion, eps: float, n_range) -> float:
    """Least-squares slope of ``log G_n(eps)`` against ``n``."""
    ns = sorted(set(int(n) for n in n_range))
    if len(ns) < 3:
        raise DomainError("n_range needs at least three values")
    counts = spanning_counts(map, metric, region, [eps], ns)
    running = np.maximum.accumulate([counts[(n, float(eps))] for n in ns])
    return fit_slope(ns, np.log(running))


# --------------------------------------------------------------------------
# the estimate


@dataclass
class Schedule:
    """Decreasing ``eps_list`` and the range ``n_min..n_max`` used at every scale.

    A cell is *resolved* when its count is at most ``resolved_fraction`` of
    the sample size; beyond that the sample, not the dynamics, limits the
    count. Only resolved cells enter the slopes.
    """

    eps_list: list
    n_min: int
    n_max: int
    resolved_fraction: float = 0.25
    min_cells: int = 2

    def __post_init__(self):
        self.eps_list = [float(e) for e in self.eps_list]
        if not self.eps_list or any(not e > 0 for e in self.eps_list):
            raise DomainError("eps_list must hold positive values")
        if any(a <= b for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise DomainError("eps_list must be strictly decreasing")
        if not 0 <= self.n_min < self.n_max:
            raise DomainError("need 0 <= n_min < n_max")
        if self.min_cells < 2:
            raise DomainError("a slope needs at least two cells")

    @property
    def n_values(self):
        return list(range(self.n_min, self.n_max + 1))

    @classmethod
    def from_config(cls, cfg: dict) -> "Schedule":
        return cls(cfg["eps_list"], cfg["n_min"], cfg["n_max"],
                   cfg.get("resolved_fraction", 0.25), cfg.get("min_cells", 2))


@dataclass
class EntropyEstimate:
    """Counts per (n, eps), per-eps slopes and the reported value."""

    counts: dict                  # (n, eps) -> count after the monotone envelope
    raw_counts: dict
    slopes: dict                  # eps -> slope or None when too few resolved cells
    value: float
    diagnostics: dict = field(default_factory=dict)

    def rows(self):
        """``(n, eps, raw, count, resolved)`` sorted by eps descending then n."""
        res = set(map(tuple, self.diagnostics.get("resolved_cells", [])))
        eps_sorted = sorted({e for _, e in self.counts}, reverse=True)
        ns = sorted({n for n, _ in self.counts})
        return [(n, e, self.raw_counts[(n, e)], self.counts[(n, e)], (n, e) in res)
                for e in eps_sorted for n in ns]


def _envelope(raw: dict, ns, eps_list):
    """Smallest table above ``raw`` that is nondecreasing in n and as eps decreases."""
    A = np.array([[raw[(n, e)] for n in ns] for e in eps_list], dtype=np.int64)
    A = np.maximum.accumulate(A, axis=1)
    A = np.maximum.accumulate(A, axis=0)
    return {(n, e): int(A[i, j]) for i, e in enumerate(eps_list) for j, n in enumerate(ns)}


def metric_entropy_estimate(map: Map, metric: Metric, region: SampleRegion, schedule: Schedule,
                            threads: int = 1) -> EntropyEstimate:
    """``max_eps`` of the fitted growth rate of ``G_n(eps)`` over the schedule."""
    if (region.resolution is not None and region.resolution_metric == metric.kind
            and schedule.eps_list[-1] < 4 * region.resolution):
        raise DomainError(f"smallest eps {schedule.eps_list[-1]} is below 4x the grid "
                          f"resolution {region.resolution}")
    ns = schedule.n_values
    raw = spanning_counts(map, metric, region, schedule.eps_list, ns, threads=threads)
    counts = _envelope(raw, ns, schedule.eps_list)
    cap = schedule.resolved_fraction * len(region)

    slopes, residuals, resolved = {}, {}, []
    for e in schedule.eps_list:
        cells = [n for n in ns if counts[(n, e)] <= cap]
        resolved += [(n, e) for n in cells]
        if len(cells) < schedule.min_cells:
            slopes[e] = None
            continue
        y = np.log([counts[(n, e)] for n in cells])
        s = fit_slope(cells, y)
        slopes[e] = s
        fit = y.mean() + s * (np.array(cells) - np.mean(cells))
        residuals[e] = float(np.sqrt(np.mean((y - fit) ** 2)))
    usable = [s for s in slopes.values() if s is not None]
    diagnostics = {
        "monotone_in_n": all(raw[(n, e)] <= raw[(m, e)] for e in schedule.eps_list
                             for n, m in zip(ns, ns[1:])),
        "monotone_in_eps": all(raw[(n, a)] <= raw[(n, b)] for n in ns
                               for a, b in zip(schedule.eps_list, schedule.eps_list[1:])),
        "slopes_monotone_in_eps": all(a <= b + 1e-12 for a, b in zip(usable, usable[1:])),
        "resolved_cells": resolved,
        "fit_residuals": residuals,
        "region_size": len(region),
        "exact": False,
        "usable_scales": len(usable),
    }
    value = max(usable) if usable else float("nan")
    return EntropyEstimate(counts, raw, slopes, value, diagnostics)


__all__ = [
    "SampleRegion", "circle_grid", "box_grid", "symmetric_grid", "shift_words",
    "region_from_config", "BowenTable", "greedy_spanning", "SpanningResult", "spanning_set",
    "spanning_cardinality", "spanning_counts", "epsilon_slope", "Schedule", "EntropyEstimate",
    "metric_entropy_estimate",
]
