"""Invariant measures, finite partitions and measure-theoretic entropy.

Cell masses are closed-form: products along cylinder words for Bernoulli and
Markov measures, exact arc lengths (``fractions.Fraction``) for Lebesgue
measure on the circle. Nothing here samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dynamics import CircleDoubling, FullShift, Map
from .errors import CapabilityError, ConsistencyError, DomainError

PAD = 255          # unconstrained symbol in a cylinder word
MASS_TOL = 1e-10


def phi(x):
    """``-x log x`` with ``phi(0) = 0``; accepts scalars or arrays in [0, 1].

    Values within 1e-12 outside the interval (round-off in sums of masses)
    are clipped; anything further out is rejected.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
        raise DomainError("phi is defined on [0, 1]")
    arr = np.clip(arr, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr > 0, -arr * np.log(np.where(arr > 0, arr, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# partitions


@dataclass
class CylinderPartition:
    """Cylinders ``[w]`` of a one-sided shift.

    The words must be prefix-free and their cylinders must exhaust the
    shift. ``infinity_cell`` names the cell that absorbs the point at
    infinity when the partition is used on the compactified space.
    """

    words: list
    alphabet: int = 2
    infinity_cell: int | None = None

    def __post_init__(self):
        self.words = [tuple(int(ch, 36) for ch in w) if isinstance(w, str) else tuple(int(s) for s in w)
                      for w in self.words]
        if not self.words or any(len(w) == 0 for w in self.words):
            raise DomainError("cylinder words must be nonempty")
        if any(s < 0 or s >= self.alphabet for w in self.words for s in w):
            raise DomainError("symbols outside the alphabet")
        for i, u in enumerate(self.words):
            for j, v in enumerate(self.words):
                if i != j and v[:len(u)] == u:
                    raise DomainError(f"cylinders {u} and {v} overlap")
        # prefix-free and complete iff the Kraft sum is exactly 1
        if sum(Fraction(1, self.alphabet ** len(w)) for w in self.words) != 1:
            raise DomainError("cylinders do not exhaust the shift")
        _check_infinity_cell(self.infinity_cell, len(self.words))

    def __len__(self):
        return len(self.words)


def generator_partition(alphabet: int = 2, infinity_cell: int | None = None) -> CylinderPartition:
    """The time-zero partition ``{[0], [1], ...}``."""
    return CylinderPartition([(s,) for s in range(alphabet)], alphabet, infinity_cell)


@dataclass
class ArcPartition:
    """Half-open arcs ``[b_k, b_{k+1})`` of R/Z cut at sorted ``breakpoints``."""

    breakpoints: list
    infinity_cell: int | None = None

    def __post_init__(self):
        pts = sorted({Fraction(b) % 1 for b in self.breakpoints})
        if not pts:
            raise DomainError("need at least one breakpoint")
        self.breakpoints = pts
        _check_infinity_cell(self.infinity_cell, len(pts))

    def cells(self) -> list:
        """Each cell as a list of disjoint intervals ``[l, r)`` inside [0, 1]."""
        b = self.breakpoints
        out = []
        for k in range(len(b)):
            lo, hi = b[k], b[(k + 1) % len(b)]
            if len(b) == 1:
                out.append([(Fraction(0), Fraction(1))])
            elif lo < hi:
                out.append([(lo, hi)])
            else:
                out.append([iv for iv in ((lo, Fraction(1)), (Fraction(0), hi)) if iv[0] < iv[1]])
        return out

    def __len__(self):
        return len(self.breakpoints)


def dyadic_partition(k: int = 1) -> ArcPartition:
    """``2**k`` arcs of equal length starting at 0."""
    return ArcPartition([Fraction(j, 2**k) for j in range(2**k)])


def _check_infinity_cell(idx, n_cells):
    if idx is not None and not 0 <= idx < n_cells:
        raise DomainError(f"infinity_cell {idx} is not a cell index")


@dataclass
class RefinedPartition:
    """Nonempty cells ``A_{i_0} & T^-1 A_{i_1} & ... & T^-n A_{i_n}``.

    ``labels[k]`` is the index tuple of cell ``k``. For cylinders ``words[k]``
    is the cell's word padded with ``PAD``; for arcs ``arcs[k]`` is its
    exact list of intervals. ``contains_infinity[k]`` is set when every
    index equals the base partition's infinity cell (the point at infinity
    is fixed, so it lies in exactly that cell of every refinement). If that
    cell has no points of X the refinement carries it as an extra row with
    an empty word (all ``PAD``) or an empty interval list.
    """

    base: object
    depth: int
    labels: np.ndarray
    words: np.ndarray | None = None
    arcs: list | None = None

    @property
    def contains_infinity(self) -> np.ndarray:
        k = self.base.infinity_cell
        if k is None:
            return np.zeros(len(self.labels), dtype=bool)
        return np.all(self.labels == k, axis=1)

    def __len__(self):
        return len(self.labels)


def _refine_cylinders(part: CylinderPartition, map: FullShift, n: int) -> RefinedPartition:
    if map.space.alphabet != part.alphabet:
        raise CapabilityError("shift and partition use different alphabets")
    width = n + max(len(w) for w in part.words)
    words = np.full((1, width), PAD, dtype=np.uint8)
    labels = np.zeros((1, 0), dtype=np.int64)
    for j in range(n + 1):
        new_words, new_labels = [], []
        for i, w in enumerate(part.words):
            w = np.array(w, dtype=np.uint8)
            seg = words[:, j:j + len(w)]
            ok = np.all((seg == w) | (seg == PAD), axis=1)
            if not ok.any():
                continue
            nw = words[ok].copy()
            nw[:, j:j + len(w)] = w
            new_words.append(nw)
            new_labels.append(np.column_stack([labels[ok], np.full(ok.sum(), i)]))
        words = np.concatenate(new_words)
        labels = np.concatenate(new_labels)
    k = len(part.words)
    if (n + 1) * math.log2(k) < 62:
        key = np.zeros(len(labels), dtype=np.int64)
        for col in labels.T:
            key = key * k + col
        order = np.argsort(key, kind="stable")
    else:
        order = np.lexsort(labels.T[::-1])
    return RefinedPartition(part, n, labels[order], words=words[order])


def _intersect(a: list, b: list) -> list:
    out = []
    for l1, r1 in a:
        for l2, r2 in b:
            lo, hi = max(l1, l2), min(r1, r2)
            if lo < hi:
                out.append((lo, hi))
    return sorted(out)


def _pull_back_doubling(arcs: list) -> list:
    """Preimage of a union of intervals under ``x -> 2x mod 1``."""
    half = Fraction(1, 2)
    return sorted([(l / 2, r / 2) for l, r in arcs] + [(l / 2 + half, r / 2 + half) for l, r in arcs])


def _refine_arcs(part: ArcPartition, map: CircleDoubling, n: int) -> RefinedPartition:
    base = part.cells()
    # A^n = A  v  T^-1 A^{n-1}, built from the deepest factor outwards
    cells = [((i,), c) for i, c in enumerate(base)]
    for _ in range(n):
        nxt = []
        for i, c in enumerate(base):
            for lab, d in cells:
                inter = _intersect(c, _pull_back_doubling(d))
                if inter:
                    nxt.append(((i,) + lab, inter))
        cells = nxt
    cells.sort(key=lambda t: t[0])
    labels = np.array([lab for lab, _ in cells], dtype=np.int64).reshape(len(cells), n + 1)
    return RefinedPartition(part, n, labels, arcs=[c for _, c in cells])


def refine_partition(part, map: Map, n: int) -> RefinedPartition:
    """All nonempty cells of the depth-``n`` refinement of ``part`` under ``map``."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if isinstance(part, CylinderPartition) and isinstance(map, FullShift):
        ref = _refine_cylinders(part, map, n)
    elif isinstance(part, ArcPartition) and isinstance(map, CircleDoubling):
        ref = _refine_arcs(part, map, n)
    else:
        raise CapabilityError(f"no exact refinement of {type(part).__name__} under {map!r}")
    k = part.infinity_cell
    if k is not None and not ref.contains_infinity.any():
        # the point at infinity is alone in its cell: add it with no mass in X
        ref.labels = np.vstack([ref.labels, np.full((1, n + 1), k)])
        if ref.words is not None:
            ref.words = np.vstack([ref.words, np.full((1, ref.words.shape[1]), PAD, dtype=np.uint8)])
        else:
            ref.arcs = ref.arcs + [[]]
    return ref


# --------------------------------------------------------------------------
# measures


class InvariantMeasure:
    kind = "abstract"

    def cell_masses(self, ref: RefinedPartition) -> np.ndarray:
        raise NotImplementedError

    def invariant_under(self, map: Map) -> bool:
        raise NotImplementedError


class Bernoulli(InvariantMeasure):
    """Product measure with symbol weights ``p``."""

    kind = "bernoulli"

    def __init__(self, p: Sequence[float]):
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or p.size < 2 or np.any(p < 0) or abs(math.fsum(p) - 1) > 1e-12:
            raise DomainError("p must be a probability vector with at least two entries")
        self.p = p

    @property
    def alphabet(self):
        return self.p.size

    def entropy_rate(self) -> float:
        return math.fsum(phi(self.p))

    def cell_masses(self, ref):
        if ref.words is None:
            raise CapabilityError("Bernoulli measures live on shift cylinders")
        table = np.append(self.p, np.ones(PAD + 1 - self.p.size))
        return np.where(ref.words[:, 0] == PAD, 0.0, np.prod(table[ref.words], axis=1))

    def invariant_under(self, map):
        return isinstance(map, FullShift) and map.space.alphabet == self.alphabet

    def __repr__(self):
        return f"Bernoulli({self.p.tolist()})"


class Markov(InvariantMeasure):
    """Stationary Markov measure ``pi_{w0} P_{w0 w1} ... P_{w_{k-1} w_k}``."""

    kind = "markov"

    def __init__(self, P, pi=None):
        P = np.asarray(P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
            raise DomainError("P must be a square matrix of size at least 2")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
            raise DomainError("rows of P must be probability vectors")
        if pi is None:
            pi = stationary_vector(P)
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (P.shape[0],) or np.any(pi < 0) or abs(math.fsum(pi) - 1) > 1e-12:
            raise DomainError("pi must be a probability vector")
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise DomainError("pi is not stationary for P")
        self.P, self.pi = P, pi

    @property
    def alphabet(self):
        return self.pi.size

    def entropy_rate(self) -> float:
        return math.fsum(self.pi[i] * math.fsum(phi(self.P[i])) for i in range(self.alphabet))

    def cell_masses(self, ref):
        if ref.words is None:
            raise CapabilityError("Markov measures live on shift cylinders")
        W = ref.words
        fixed = W != PAD
        mass = np.where(W[:, 0] == PAD, 0.0, self.pi[W[:, 0] % self.alphabet])
        for j in range(1, W.shape[1]):
            step = fixed[:, j]
            if not step.any():
                break
            mass = np.where(step, mass * self.P[W[:, j - 1] % self.alphabet, W[:, j] % self.alphabet], mass)
        return mass

    def invariant_under(self, map):
        return isinstance(map, FullShift) and map.space.alphabet == self.alphabet

    def __repr__(self):
        return f"Markov(P={self.P.tolist()})"


def stationary_vector(P) -> np.ndarray:
    """Left Perron eigenvector of a stochastic matrix, normalised to sum 1."""
    P = np.asarray(P, dtype=float)
    w, V = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(w - 1)))
    v = np.real(V[:, k])
    v = v / v.sum()
    if np.any(v < -1e-12):
        raise DomainError("no nonnegative stationary vector")
    return np.clip(v, 0, None) / np.clip(v, 0, None).sum()


class LebesgueCircle(InvariantMeasure):
    kind = "lebesgue_circle"

    def cell_masses(self, ref):
        if ref.arcs is None:
            raise CapabilityError("Lebesgue measure is evaluated on arcs")
        return np.array([float(sum((r - l for l, r in c), Fraction(0))) for c in ref.arcs])

    def invariant_under(self, map):
        return isinstance(map, CircleDoubling)

    def __repr__(self):
        return "LebesgueCircle()"


class LiftedMeasure(InvariantMeasure):
    """``c * delta_inf + (1 - c) * base`` on the compactified space."""

    kind = "lift"

    def __init__(self, base: InvariantMeasure, c: float):
        if not 0 <= c <= 1:
            raise DomainError("c must lie in [0, 1]")
        self.base, self.c = base, float(c)

    @property
    def a(self):
        return 1.0 - self.c

    def cell_masses(self, ref):
        if ref.base.infinity_cell is None and self.c > 0:
            raise CapabilityError("partition has no cell for the point at infinity")
        return self.a * self.base.cell_masses(ref) + self.c * ref.contains_infinity

    def invariant_under(self, map):
        return self.base.invariant_under(map)

    def __repr__(self):
        return f"LiftedMeasure({self.base!r}, c={self.c})"


def lift_measure(mu: InvariantMeasure, c: float) -> LiftedMeasure:
    return LiftedMeasure(mu, c)


def measure_from_config(cfg) -> InvariantMeasure:
    if cfg == "lebesgue_circle" or (isinstance(cfg, dict) and "lebesgue_circle" in cfg):
        return LebesgueCircle()
    if "bernoulli" in cfg:
        return Bernoulli(cfg["bernoulli"])
    if "markov" in cfg:
        return Markov(cfg["markov"]["P"], cfg["markov"].get("pi"))
    if "lift" in cfg:
        return LiftedMeasure(measure_from_config(cfg["lift"]["base"]), cfg["lift"]["c"])
    raise DomainError(f"unknown measure {cfg!r}")


# --------------------------------------------------------------------------
# entropy


def partition_entropy(mu: InvariantMeasure, ref: RefinedPartition) -> float:
    """``H = sum phi(mu(B))`` over the cells of ``ref``."""
    m = mu.cell_masses(ref)
    total = math.fsum(m)
    if abs(total - 1) > MASS_TOL:
        raise ConsistencyError(f"cell masses sum to {total!r}")
    return math.fsum(phi(m))


@dataclass
class MeasureEntropyResult:
    value: float                  # H(A^{n_max}) / (n_max + 1)
    sequence: list                # H(A^n), n = 0..n_max
    cells: list                   # number of cells per depth
    subadditive: bool
    violations: list

    def __float__(self):
        return self.value


def measure_entropy_estimate(mu: InvariantMeasure, part, map: Map, n_max: int,
                             tol: float = 1e-12) -> MeasureEntropyResult:
    """``H(A^n)`` for ``n <= n_max`` and the normalised last term."""
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    if not mu.invariant_under(map):
        raise CapabilityError(f"{mu!r} is not known to be invariant under {map!r}")
    seq, cells = [], []
    for n in range(n_max + 1):
        ref = refine_partition(part, map, n)
        seq.append(partition_entropy(mu, ref))
        cells.append(len(ref))
    # depth n joins n + 1 copies of the partition
    violations = [(j, k) for j in range(1, n_max + 1) for k in range(j, n_max + 2 - j)
                  if seq[j + k - 1] > seq[j - 1] + seq[k - 1] + tol]
    return MeasureEntropyResult(seq[-1] / (n_max + 1), seq, cells, not violations, violations)


@dataclass(frozen=True)
class LiftIdentity:
    """Both sides of ``H~(A^n) = b + phi(a) + a H(A^n)`` at one depth."""

    direct: float
    formula: float
    b: float
    phi_a: float

    @property
    def residual(self):
        return abs(self.direct - self.formula)

    @property
    def bound_ok(self):
        return self.b + self.phi_a <= 2 / math.e + 1e-15


def lifted_identity(mu: InvariantMeasure, c: float, part, map: Map, n: int) -> LiftIdentity:
    """Compare the entropy of the lifted measure with its expression through ``mu``.

    The left side sums ``phi`` over the lifted cell masses directly; the
    right side uses only ``H(A^n)`` for ``mu`` and the masses of the cell
    that carries the point at infinity.
    """
    if part.infinity_cell is None:
        raise DomainError("the partition must declare infinity_cell")
    return lifted_identity_on(mu, c, refine_partition(part, map, n))


def lifted_identity_on(mu: InvariantMeasure, c: float, ref: RefinedPartition) -> LiftIdentity:
    """:func:`lifted_identity` on an already refined partition."""
    if ref.base.infinity_cell is None:
        raise DomainError("the partition must declare infinity_cell")
    lifted = LiftedMeasure(mu, c)
    direct = partition_entropy(lifted, ref)

    a = lifted.a
    H = partition_entropy(mu, ref)
    k = np.flatnonzero(ref.contains_infinity)
    mu_inf = float(mu.cell_masses(ref)[k[0]])
    b = phi(min(c + a * mu_inf, 1.0)) - phi(a * mu_inf)
    return LiftIdentity(direct, b + phi(a) + a * H, b, phi(a))


def partition_from_config(cfg: dict):
    if "cylinders" in cfg:
        return CylinderPartition(cfg["cylinders"], cfg.get("alphabet", 2), cfg.get("infinity_cell"))
    if "breakpoints" in cfg:
        return ArcPartition([Fraction(b if isinstance(b, str) else str(b)) for b in cfg["breakpoints"]], cfg.get("infinity_cell"))
    raise DomainError("partition needs 'cylinders' or 'breakpoints'")


__all__ = [
    "phi", "CylinderPartition", "generator_partition", "ArcPartition", "dyadic_partition",
    "RefinedPartition", "refine_partition", "InvariantMeasure", "Bernoulli", "Markov",
    "stationary_vector", "LebesgueCircle", "LiftedMeasure", "lift_measure", "measure_from_config",
    "partition_entropy", "MeasureEntropyResult", "measure_entropy_estimate", "LiftIdentity",
    "lifted_identity", "lifted_identity_on", "partition_from_config",
]
