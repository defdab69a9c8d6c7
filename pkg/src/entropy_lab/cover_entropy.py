"""Admissible coverings, their refinements and the covering entropy.

Open sets are membership predicates; every combinatorial statement is made
relative to a finite witness universe of sample points. For interval, arc
and cylinder families a universe that is fine compared with the refined
pieces reproduces the minimal subcover counts exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import Map, Metric, Space, orbit_batch, pairwise_chunked
from .errors import CoverageError, DomainError
from .setcover import DEFAULT_NODE_BUDGET, CoverResult, solve_set_cover_pairs


@dataclass(frozen=True)
class OpenSet:
    """An element of a covering.

    ``predicate`` maps a batch of states (2-D array) to a boolean vector.
    ``compact_complement`` marks the unbounded elements of an admissible
    covering; the flag is declared, not verified.
    """

    predicate: Callable[[np.ndarray], np.ndarray]
    description: str
    compact_complement: bool = False
    boundary: tuple = ()

    def contains(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(X), dtype=bool)

    def __repr__(self):
        return f"OpenSet({self.description})"


def arc(a: float, b: float) -> OpenSet:
    """Open arc of the circle from ``a`` forward to ``b`` (``b`` may exceed 1)."""
    length = b - a
    if not 0 < length <= 1:
        raise DomainError("arc length must lie in (0, 1]")

    def pred(X):
        r = (X[:, 0] - a) % 1.0
        if length == 1:
            return r != 0
        return (r > 0) & (r < length)

    return OpenSet(pred, f"arc({a}, {b})", boundary=(a % 1.0, b % 1.0))


def interval(a: float, b: float) -> OpenSet:
    if not a < b:
        raise DomainError("empty interval")
    return OpenSet(lambda X: (X[:, 0] > a) & (X[:, 0] < b), f"interval({a}, {b})")


def ball(center, radius: float) -> OpenSet:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return OpenSet(lambda X: np.sqrt(((X - c) ** 2).sum(axis=1)) < radius,
                   f"ball({c.tolist()}, {radius})")


def complement_ball(center, radius: float) -> OpenSet:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return OpenSet(lambda X: np.sqrt(((X - c) ** 2).sum(axis=1)) > radius,
                   f"complement_ball({c.tolist()}, {radius})", compact_complement=True)


def cylinder(word: str) -> OpenSet:
    w = np.array([int(ch, 36) for ch in word], dtype=np.uint8)

    def pred(X):
        if X.shape[1] < len(w):
            raise DomainError(f"words shorter than cylinder {word!r}")
        return np.all(X[:, :len(w)] == w, axis=1)

    return OpenSet(pred, f"cylinder({word})")


def open_set_from_config(cfg: dict) -> OpenSet:
    if "arc" in cfg:
        return arc(*cfg["arc"])
    if "interval" in cfg:
        return interval(*cfg["interval"])
    if "ball" in cfg:
        return ball(cfg["ball"]["center"], cfg["ball"]["radius"])
    if "complement_ball" in cfg:
        return complement_ball(cfg["complement_ball"]["center"], cfg["complement_ball"]["radius"])
    if "cylinder" in cfg:
        return cylinder(cfg["cylinder"])
    raise DomainError(f"unknown open-set shape {sorted(cfg)}")


@dataclass
class CoveringSpec:
    """A finite covering together with its witness universe."""

    elements: Sequence[OpenSet]
    universe: np.ndarray
    space: Space
    max_unbounded: int = 1

    def __post_init__(self):
        self.elements = list(self.elements)
        if not self.elements:
            raise DomainError("a covering needs at least one element")
        self.universe = self.space.batch(self.universe)
        if len(self.universe) == 0:
            raise DomainError("empty witness universe")
        unbounded = sum(e.compact_complement for e in self.elements)
        if unbounded > self.max_unbounded:
            raise DomainError(f"{unbounded} unbounded elements; at most {self.max_unbounded} allowed")
        M = self.membership(self.universe)
        bad = np.flatnonzero(~M.any(axis=1))
        if bad.size:
            raise CoverageError(self.universe[bad[0]].tolist())

    def membership(self, X: np.ndarray) -> np.ndarray:
        """Boolean ``(len(X), #elements)`` membership matrix."""
        return np.column_stack([e.contains(X) for e in self.elements])

    def __len__(self):
        return len(self.elements)


@dataclass
class RefinedCovering:
    """Nonempty elements of the refinement ``alpha^n``.

    Row ``k`` of ``tuples`` is ``(i_0, ..., i_n)`` and names the element
    ``A_{i_0} & T^-1 A_{i_1} & ... & T^-n A_{i_n}``. Witness incidence is kept
    as parallel arrays ``cell_ids`` / ``point_ids`` sorted by cell.
    """

    base: CoveringSpec
    map: Map
    depth: int
    tuples: np.ndarray
    cell_ids: np.ndarray = field(repr=False)
    point_ids: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.tuples)

    def member_indices(self, k: int) -> np.ndarray:
        lo, hi = np.searchsorted(self.cell_ids, [k, k + 1])
        return np.sort(self.point_ids[lo:hi])

    def contains(self, k: int, x) -> bool:
        """Direct membership test of one state via its orbit."""
        X = orbit_batch(self.map, self.base.space.point(x)[None, :], self.depth)
        return all(bool(self.base.elements[i].contains(X[j])[0])
                   for j, i in enumerate(self.tuples[k].tolist()))


def _membership_checked(cov: CoveringSpec, step: np.ndarray, j: int) -> np.ndarray:
    M = cov.membership(step)
    bad = np.flatnonzero(~M.any(axis=1))
    if bad.size:
        w = cov.universe[bad[0]].tolist()
        raise CoverageError(w, f"orbit of witness {w} leaves the covering at iterate {j}")
    return M


def iter_refinements(cov: CoveringSpec, map: Map, n_max: int):
    """Yield ``refine_covering(cov, map, n)`` for ``n = 0..n_max``, sharing work."""
    if n_max < 0:
        raise DomainError("n must be nonnegative")
    if map.space != cov.space:
        raise DomainError("map and covering live on different spaces")
    k = len(cov.elements)
    orbits = orbit_batch(map, cov.universe, n_max)
    M = _membership_checked(cov, orbits[0], 0)
    pts, cells = np.nonzero(M)
    order = np.lexsort((pts, cells))
    cells, pts = cells[order], pts[order]
    used, cells = np.unique(cells, return_inverse=True)
    tuples = used[:, None]
    yield RefinedCovering(cov, map, 0, tuples, cells, pts)
    for j in range(1, n_max + 1):
        M = _membership_checked(cov, orbits[j], j)
        rows, idx = np.nonzero(M[pts])
        raw = cells[rows] * k + idx
        pts = pts[rows]
        order = np.lexsort((pts, raw))
        raw, pts = raw[order], pts[order]
        used, cells = np.unique(raw, return_inverse=True)
        tuples = np.column_stack([tuples[used // k], used % k])
        yield RefinedCovering(cov, map, j, tuples, cells, pts)


def refine_covering(cov: CoveringSpec, map: Map, n: int) -> RefinedCovering:
    for ref in iter_refinements(cov, map, n):
        pass
    return ref


def minimal_subcover_cardinality(ref: RefinedCovering,
                                 node_budget: int = DEFAULT_NODE_BUDGET) -> CoverResult:
    """``N(alpha^n)`` over the witness universe (exact unless the budget runs out)."""
    return solve_set_cover_pairs(ref.cell_ids, ref.point_ids, len(ref.base.universe), node_budget)


@dataclass
class CoveringEstimate:
    """Table of ``N(alpha^n)`` and the fitted growth rate."""

    rows: list            # (n, count, lower, exact)
    slope: float
    fit_range: tuple
    diagnostics: dict

    @property
    def counts(self) -> dict:
        return {n: c for n, c, _, _ in self.rows}


def fit_slope(ns, values) -> float:
    """Least-squares slope of ``values`` against ``ns``; 0 for constant data."""
    ns = np.asarray(ns, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(ns) < 2:
        raise DomainError("need at least two points for a slope")
    if np.all(v == v[0]):
        return 0.0
    nc = ns - ns.mean()
    return float((nc * (v - v.mean())).sum() / (nc * nc).sum())


def covering_entropy(cov: CoveringSpec, map: Map, n_max: int,
                     node_budget: int = DEFAULT_NODE_BUDGET) -> CoveringEstimate:
    """``h(T, alpha)`` as the slope of ``log N(alpha^n)`` over the upper half of ``1..n_max``."""
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    rows = []
    for ref in iter_refinements(cov, map, n_max):
        res = minimal_subcover_cardinality(ref, node_budget)
        rows.append((ref.depth, res.size, res.lower, res.exact))
    counts = {n: c for n, c, _, _ in rows}
    lo = n_max // 2 + 1 if n_max > 2 else 1
    fit_ns = list(range(lo, n_max + 1))
    slope = fit_slope(fit_ns, [np.log(counts[n]) for n in fit_ns])

    all_exact = all(r[3] for r in rows)
    # depth n joins n + 1 copies, so a_k = log N(depth k - 1) is the subadditive sequence
    violations = []
    for j in range(1, n_max + 1):
        for k in range(j, n_max + 2 - j):
            if counts[j + k - 1] > counts[j - 1] * counts[k - 1]:
                violations.append((j, k))
    diagnostics = {
        "exact": all_exact,
        "inexact_depths": [r[0] for r in rows if not r[3]],
        "subadditive": not violations,
        "subadditivity_violations": violations,
        "nondecreasing": all(counts[n] <= counts[n + 1] for n in range(n_max)),
    }
    return CoveringEstimate(rows, slope, (fit_ns[0], fit_ns[-1]), diagnostics)


@dataclass(frozen=True)
class LebesgueResult:
    value: float
    found: bool

    def __float__(self):
        return self.value


def lebesgue_number(cov: CoveringSpec, metric: Metric, eps_max: float | None = None,
                    levels: int = 40) -> LebesgueResult:
    """Largest ``eps`` on the halving grid ``eps_max * 2**-k`` that is a Lebesgue number.

    ``eps`` qualifies when, for every witness ``x``, the witnesses at distance
    ``< eps`` from ``x`` all lie in a single element. ``eps_max`` defaults to
    the largest distance between witnesses.
    """
    U = cov.universe
    M = cov.membership(U).astype(np.int32)
    if eps_max is None:
        eps_max = max(float(block.max()) for _, block in pairwise_chunked(metric, U, U))
        eps_max = eps_max if eps_max > 0 else 1.0
    for k in range(levels + 1):
        eps = eps_max * 2.0 ** -k
        ok = True
        for _, block in pairwise_chunked(metric, U, U):
            B = block < eps
            inside = B.astype(np.int32) @ M
            if not np.all((inside == B.sum(axis=1)[:, None]).any(axis=1)):
                ok = False
                break
        if ok:
            return LebesgueResult(eps, True)
    return LebesgueResult(0.0, False)


def circle_atom_universe(elements: Sequence[OpenSet], n_max: int, degree: int = 2) -> np.ndarray:
    """Witnesses that resolve every refinement of an arc covering under ``x -> degree*x``.

    The elements of ``alpha^n`` are unions of the atoms cut out by the
    ``degree^-j`` preimages (``j <= n``) of the arc endpoints. Taking every
    breakpoint and one midpoint per atom realises each membership pattern.
    """
    ends = np.array(sorted({float(b) for e in elements for b in e.boundary}))
    if ends.size == 0:
        raise DomainError("elements carry no boundary points")
    if degree < 2:
        raise DomainError("degree must be at least 2")
    pts = [ends]
    for j in range(1, n_max + 1):
        m = np.arange(degree**j, dtype=float)
        pts.append(((ends[:, None] + m[None, :]) / float(degree**j)).ravel())
    cuts = np.unique(np.mod(np.concatenate(pts), 1.0))
    gaps = np.diff(np.append(cuts, cuts[0] + 1.0))
    mids = np.mod(cuts + gaps / 2, 1.0)
    return np.unique(np.concatenate([cuts, mids]))


def pullback_covering(cov: CoveringSpec, f: Callable[[np.ndarray], np.ndarray],
                      universe: np.ndarray, space: Space) -> CoveringSpec:
    """``f^-1(alpha)`` on ``space`` with the given witness universe."""
    elements = [OpenSet(lambda Y, e=e: e.contains(cov.space.batch(f(Y))), f"f^-1({e.description})",
                        e.compact_complement) for e in cov.elements]
    return CoveringSpec(elements, universe, space, cov.max_unbounded)


def covering_from_config(cfg: dict, space: Space, universe: np.ndarray) -> CoveringSpec:
    return CoveringSpec([open_set_from_config(c) for c in cfg["elements"]], universe, space,
                        cfg.get("max_unbounded", 1))


__all__ = [
    "OpenSet", "arc", "interval", "ball", "complement_ball", "cylinder", "CoveringSpec",
    "RefinedCovering", "refine_covering", "iter_refinements", "minimal_subcover_cardinality",
    "covering_entropy", "CoveringEstimate", "lebesgue_number", "LebesgueResult",
    "pullback_covering", "fit_slope", "circle_atom_universe",
]
