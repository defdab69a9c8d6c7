"""State spaces, maps, metrics, orbits and the Bowen n-step metric.

States are plain numpy arrays. A batch of ``N`` states is a 2-D array of
shape ``(N, dim)``; symbolic (shift) states are ``uint8`` words of shape
``(N, L)``. Single states may also be given as tuples, scalars (circle) or
symbol strings (shift), and ``apply``/``orbit`` hand back the same flavour.

The one-point compactification of R^d is realised by inverse stereographic
projection onto the unit sphere S^d in R^(d+1) with the chordal distance;
the point at infinity is the north pole and is represented by ``INFINITY``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivergenceError, DomainError

#: Coordinates beyond this magnitude count as divergence. Chosen so that
#: squared norms stay finite in float64.
DIVERGENCE_LIMIT = 1e150

#: Row chunk used for pairwise distance evaluation.
CHUNK = 512


class PointAtInfinity:
    """The sentinel point added by the one-point compactification."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (PointAtInfinity, ())


INFINITY = PointAtInfinity()


@dataclass(frozen=True)
class Space:
    """Ambient space of a system.

    ``kind`` is one of ``"euclidean"`` (R^dim), ``"circle"`` (R/Z, stored in
    [0, 1)) or ``"shift"`` (one-sided words over ``alphabet`` symbols).
    """

    kind: str
    dim: int = 1
    alphabet: int = 2

    def __post_init__(self):
        if self.kind not in ("euclidean", "circle", "shift"):
            raise DomainError(f"unknown space kind {self.kind!r}")
        if self.kind == "circle" and self.dim != 1:
            raise DomainError("the circle is one-dimensional")
        if self.dim < 1 or self.alphabet < 2:
            raise DomainError("dim must be >= 1 and alphabet >= 2")

    @property
    def tag(self) -> str:
        if self.kind == "euclidean":
            return f"R^{self.dim}"
        if self.kind == "circle":
            return "S^1"
        return f"shift[{self.alphabet}]"

    def point(self, x) -> np.ndarray:
        """Validate a single state and return it as a 1-D array."""
        if self.kind == "shift":
            if isinstance(x, str):
                try:
                    word = np.array([int(ch, 36) for ch in x], dtype=np.uint8)
                except ValueError:
                    raise DomainError(f"bad symbol in word {x!r}") from None
            else:
                word = np.asarray(x, dtype=np.int64).ravel()
            if word.size and (word.min() < 0 or word.max() >= self.alphabet):
                raise DomainError(f"word {x!r} uses symbols outside 0..{self.alphabet - 1}")
            return word.astype(np.uint8)
        arr = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        if arr.shape != (self.dim,):
            raise DomainError(f"expected {self.dim} coordinates for {self.tag}, got {arr.shape[0]}")
        if self.kind == "circle":
            arr = np.mod(arr, 1.0)
        return arr

    def batch(self, X) -> np.ndarray:
        """Validate a batch of states and return a 2-D array."""
        if self.kind == "shift":
            if len(X) and isinstance(X[0], str):
                return np.stack([self.point(w) for w in X])
            arr = np.asarray(X)
            if arr.ndim != 2:
                raise DomainError("shift batches are 2-D arrays of symbols")
            if arr.size and (arr.min() < 0 or arr.max() >= self.alphabet):
                raise DomainError("symbols outside the alphabet")
            return arr.astype(np.uint8)
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1 and self.dim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise DomainError(f"batch for {self.tag} must have shape (N, {self.dim})")
        if self.kind == "circle":
            arr = np.mod(arr, 1.0)
        return arr


def _restore(template, arr):
    """Return ``arr`` in the same flavour as the user-supplied ``template``."""
    if isinstance(template, str):
        return "".join(np.base_repr(int(s), 36).lower() for s in arr)
    if np.ndim(template) == 0:
        return float(arr[0])
    return arr


# --------------------------------------------------------------------------
# maps


class Map:
    """A forward map ``T : X -> X`` evaluable on batches of states."""

    kind = "abstract"

    def __init__(self, space: Space):
        self.space = space

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return apply(self, x)

    def __repr__(self):
        return f"{type(self).__name__}({self.space.tag})"


class LinearMap(Map):
    kind = "linear"

    def __init__(self, matrix, det_tol: float = 1e-12):
        A = np.array(matrix, dtype=float, ndmin=2)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError("linear maps need a square matrix")
        if not np.all(np.isfinite(A)):
            raise DomainError("matrix entries must be finite")
        scale = max(1.0, float(np.abs(A).max()))
        if abs(np.linalg.det(A / scale)) <= det_tol:
            raise DomainError("matrix is not invertible")
        super().__init__(Space("euclidean", A.shape[0]))
        self.matrix = A

    def apply_batch(self, X):
        return X @ self.matrix.T

    def __repr__(self):
        return f"LinearMap({self.matrix.tolist()})"


class IdentityMap(Map):
    kind = "identity"

    def apply_batch(self, X):
        return X.copy()


class CircleDoubling(Map):
    """``x -> 2x mod 1``, i.e. ``z -> z^2`` on the unit circle."""

    kind = "circle_doubling"

    def __init__(self):
        super().__init__(Space("circle"))

    def apply_batch(self, X):
        return np.mod(2.0 * X, 1.0)


class CircleRotation(Map):
    """Rigid rotation by ``angle`` turns; an isometry of the arc metric."""

    kind = "circle_rotation"

    def __init__(self, angle: float):
        super().__init__(Space("circle"))
        self.angle = float(angle)

    def apply_batch(self, X):
        return np.mod(X + self.angle, 1.0)


class FullShift(Map):
    """Left shift on words; each application drops the leading symbol.

    Words of length ``word_length`` stand in for infinite sequences; the
    cylinder metric on truncations is exact up to ``2**-word_length``.
    """

    kind = "full_shift"

    def __init__(self, alphabet: int = 2, word_length: int = 32):
        super().__init__(Space("shift", alphabet=alphabet))
        self.word_length = int(word_length)

    def apply_batch(self, X):
        if X.shape[1] == 0:
            raise DomainError("cannot shift an exhausted (empty) word")
        return X[:, 1:]


class ComposedMap(Map):
    """``maps[-1] o ... o maps[0]``: the first map is applied first."""

    kind = "custom_composition"

    def __init__(self, maps: Sequence[Map]):
        maps = list(maps)
        if not maps:
            raise DomainError("empty composition")
        if any(m.space != maps[0].space for m in maps):
            raise DomainError("composed maps must share a space")
        super().__init__(maps[0].space)
        self.maps = maps

    def apply_batch(self, X):
        for m in self.maps:
            X = m.apply_batch(X)
        return X


def _check_finite(arr, index):
    if arr.dtype.kind == "f" and arr.size:
        if not np.all(np.isfinite(arr)) or np.abs(arr).max() > DIVERGENCE_LIMIT:
            raise DivergenceError(index)


def apply(map: Map, x):
    """Evaluate ``T(x)`` for a single state; ``T(INFINITY) = INFINITY``."""
    if x is INFINITY:
        if map.space.kind != "euclidean":
            raise DomainError("only maps on R^d extend to the point at infinity")
        return INFINITY
    p = map.space.point(x)
    out = map.apply_batch(p[None, :])[0]
    _check_finite(out, 1)
    return _restore(x, out)


def orbit(map: Map, x, n: int) -> list:
    """``[x, T(x), ..., T^n(x)]``."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if x is INFINITY:
        apply(map, x)
        return [INFINITY] * (n + 1)
    p = map.space.point(x)
    return [_restore(x, row[0]) for row in orbit_batch(map, p[None, :], n)]


def orbit_batch(map: Map, X: np.ndarray, n: int) -> list[np.ndarray]:
    """Orbits of a batch: element ``i`` holds ``T^i`` of every row of ``X``.

    Raises :class:`DivergenceError` carrying the first iterate that left the
    representable range.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    X = map.space.batch(X)
    out = [X]
    for i in range(1, n + 1):
        X = map.apply_batch(X)
        _check_finite(X, i)
        out.append(X)
    return out


# --------------------------------------------------------------------------
# metrics


class Metric:
    """Distance on a state space, evaluable pairwise on batches."""

    kind = "abstract"
    space_kind = "euclidean"

    def pairwise(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distance(self, x, y, space: Space | None = None) -> float:
        space = space or self._default_space(x, y)
        return float(self.pairwise(space.point(x)[None, :], space.point(y)[None, :])[0, 0])

    def _default_space(self, x, y):
        if self.space_kind == "shift":
            return Space("shift", alphabet=36)
        if self.space_kind == "circle":
            return Space("circle")
        dim = np.atleast_1d(np.asarray(x, dtype=float)).size
        return Space("euclidean", dim)

    def __repr__(self):
        return f"{type(self).__name__}()"


def _sq_dists(A, B):
    # coordinate-wise accumulation avoids the cancellation of the Gram trick
    D = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        D += diff * diff
    return D


class Euclidean(Metric):
    kind = "euclidean"

    def pairwise(self, A, B):
        return np.sqrt(_sq_dists(A, B))


class CircleArc(Metric):
    """Arc-length distance ``min(|x-y|, 1-|x-y|)`` on [0, 1)."""

    kind = "circle_arc"
    space_kind = "circle"

    def pairwise(self, A, B):
        # reduce the inputs once so the pairwise gap is already in [0, 1)
        d = np.abs(np.mod(A[:, 0], 1.0)[:, None] - np.mod(B[:, 0], 1.0)[None, :])
        return np.minimum(d, 1.0 - d, out=d)


class ShiftCylinder(Metric):
    """``d(u, v) = 2**-k`` with ``k`` the length of the common prefix.

    Equal (truncated) words are at distance 0.
    """

    kind = "shift_cylinder"
    space_kind = "shift"

    def pairwise(self, A, B):
        if A.shape[1] != B.shape[1]:
            raise DomainError("cylinder distance needs words of equal length")
        L = A.shape[1]
        eq = np.ones((A.shape[0], B.shape[0]), dtype=bool)
        lcp = np.zeros(eq.shape, dtype=np.int32)
        for p in range(L):
            eq &= A[:, p, None] == B[None, :, p]
            if not eq.any():
                break
            lcp += eq
        return np.where(lcp == L, 0.0, np.ldexp(1.0, -lcp))


class Compactified(Metric):
    """Chordal metric of R^d pulled back from the sphere S^d.

    ``d(x, y) = 2|x - y| / sqrt((1 + |x|^2)(1 + |y|^2))`` and
    ``d(x, INFINITY) = 2 / sqrt(1 + |x|^2)``; the diameter is 2.
    """

    kind = "compactified"

    def __init__(self, base_dimension: int = 1):
        self.base_dimension = int(base_dimension)

    def pairwise(self, A, B):
        if A.shape[1] != self.base_dimension or B.shape[1] != self.base_dimension:
            raise DomainError(f"compactified metric is on R^{self.base_dimension}")
        ra = np.sqrt(1.0 + np.einsum("ij,ij->i", A, A))
        rb = np.sqrt(1.0 + np.einsum("ij,ij->i", B, B))
        diff = np.sqrt(_sq_dists(A, B))
        return np.minimum(2.0 * (diff / ra[:, None]) / rb[None, :], 2.0)

    def embed(self, X: np.ndarray) -> np.ndarray:
        """Inverse stereographic projection of a batch onto S^d."""
        sq = np.einsum("ij,ij->i", X, X)
        top = 2.0 * X / (1.0 + sq)[:, None]
        last = ((sq - 1.0) / (sq + 1.0))[:, None]
        return np.hstack([top, last])

    def distance(self, x, y, space=None):
        if x is INFINITY and y is INFINITY:
            return 0.0
        if x is INFINITY or y is INFINITY:
            p = np.atleast_1d(np.asarray(y if x is INFINITY else x, dtype=float))
            if p.size != self.base_dimension:
                raise DomainError(f"compactified metric is on R^{self.base_dimension}")
            return float(2.0 / np.sqrt(1.0 + p @ p))
        return super().distance(x, y, space or Space("euclidean", self.base_dimension))

    def __repr__(self):
        return f"Compactified({self.base_dimension})"


def distance(metric: Metric, x, y, space: Space | None = None) -> float:
    return metric.distance(x, y, space)


def bowen_distance(map: Map, metric: Metric, n: int, x, y) -> float:
    """``d_n(x, y) = max_{0<=i<=n} d(T^i x, T^i y)``."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if x is INFINITY or y is INFINITY:
        ox, oy = orbit(map, x, n), orbit(map, y, n)
        return max(metric.distance(a, b) for a, b in zip(ox, oy))
    pair = np.stack([map.space.point(x), map.space.point(y)])
    best = 0.0
    for step in orbit_batch(map, pair, n):
        best = max(best, float(metric.pairwise(step[:1], step[1:])[0, 0]))
    return best


def pairwise_chunked(metric: Metric, A: np.ndarray, B: np.ndarray, chunk: int = CHUNK):
    """Yield ``(start, block)`` with ``block = metric.pairwise(A[start:start+chunk], B)``."""
    for start in range(0, A.shape[0], chunk):
        yield start, metric.pairwise(A[start:start + chunk], B)


# --------------------------------------------------------------------------
# declarative construction

MAP_KINDS = ("linear", "identity", "circle_doubling", "circle_rotation", "full_shift",
             "heisenberg_automorphism", "custom_composition")
METRIC_KINDS = ("euclidean", "circle_arc", "shift_cylinder", "compactified")


def map_from_config(cfg: dict) -> Map:
    """Build a map from ``{"kind": ..., <parameters>}``."""
    kind = cfg.get("kind")
    if kind == "linear":
        return LinearMap(cfg["matrix"])
    if kind == "identity":
        return IdentityMap(Space(cfg.get("space", "euclidean"), cfg.get("dim", 1)))
    if kind == "circle_doubling":
        return CircleDoubling()
    if kind == "circle_rotation":
        return CircleRotation(cfg["angle"])
    if kind == "full_shift":
        return FullShift(cfg.get("alphabet_size", 2), cfg.get("word_length", 32))
    if kind == "heisenberg_automorphism":
        from .heisenberg import HeisenbergAutomorphism
        return HeisenbergAutomorphism(cfg["algebra_matrix"], coords=cfg.get("coords", "exp"))
    if kind == "custom_composition":
        return ComposedMap([map_from_config(c) for c in cfg["maps"]])
    raise DomainError(f"unknown map kind {kind!r}")


def metric_from_config(cfg: dict) -> Metric:
    kind = cfg.get("kind")
    if kind == "euclidean":
        return Euclidean()
    if kind == "circle_arc":
        return CircleArc()
    if kind == "shift_cylinder":
        return ShiftCylinder()
    if kind == "compactified":
        return Compactified(cfg.get("base_dimension", 1))
    raise DomainError(f"unknown metric kind {kind!r}")
