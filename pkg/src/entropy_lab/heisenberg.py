"""The three-dimensional Heisenberg group and its automorphisms.

The Lie algebra has basis X, Y, Z with ``[X, Y] = Z``. An algebra element
``aX + bY + cZ`` is the strictly upper triangular matrix with entries
``(1,2) = a``, ``(2,3) = b``, ``(1,3) = c``. Group elements are stored by
the same three entries of their unipotent matrix; since the algebra is
2-step nilpotent the exponential series stops after the square term:

    exp(a, b, c) = (a, b, c + ab/2),    log(x, y, z) = (x, y, z - xy/2).

Automorphisms are given on the algebra (a bracket-preserving 3x3 matrix
``L``) and act on the group by ``g -> exp(L log g)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import Map, Metric, Space
from .errors import DomainError

BRACKET_TOL = 1e-12


# --------------------------------------------------------------------------
# elements


@dataclass(frozen=True)
class AlgebraElement:
    a: float
    b: float
    c: float

    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    def matrix(self) -> np.ndarray:
        return np.array([[0.0, self.a, self.c], [0.0, 0.0, self.b], [0.0, 0.0, 0.0]])

    def bracket(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(0.0, 0.0, self.a * other.b - self.b * other.a)

    def __add__(self, other):
        return AlgebraElement(self.a + other.a, self.b + other.b, self.c + other.c)


@dataclass(frozen=True)
class GroupElement:
    """Unipotent matrix with ``(1,2) = x``, ``(2,3) = y``, ``(1,3) = z``."""

    x: float
    y: float
    z: float

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def matrix(self) -> np.ndarray:
        return np.array([[1.0, self.x, self.z], [0.0, 1.0, self.y], [0.0, 0.0, 1.0]])

    @classmethod
    def from_matrix(cls, M) -> "GroupElement":
        M = np.asarray(M, dtype=float)
        if M.shape != (3, 3) or not np.array_equal(np.tril(M), np.eye(3)):
            raise DomainError("not a unipotent upper triangular 3x3 matrix")
        return cls(float(M[0, 1]), float(M[1, 2]), float(M[0, 2]))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.x + other.x, self.y + other.y, self.z + other.z + self.x * other.y)

    def inverse(self) -> "GroupElement":
        return GroupElement(-self.x, -self.y, self.x * self.y - self.z)


IDENTITY = GroupElement(0.0, 0.0, 0.0)


def exp_algebra(X: AlgebraElement) -> GroupElement:
    return GroupElement(X.a, X.b, X.c + X.a * X.b / 2)


def log_group(g: GroupElement) -> AlgebraElement:
    return AlgebraElement(g.x, g.y, g.z - g.x * g.y / 2)


def exp_batch(A: np.ndarray) -> np.ndarray:
    """Row-wise exp from algebra coordinates to matrix coordinates."""
    A = np.asarray(A, dtype=float)
    out = A.copy()
    out[:, 2] = A[:, 2] + A[:, 0] * A[:, 1] / 2
    return out


def log_batch(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    out = G.copy()
    out[:, 2] = G[:, 2] - G[:, 0] * G[:, 1] / 2
    return out


def group_multiply_batch(G: np.ndarray, K: np.ndarray) -> np.ndarray:
    out = G + K
    out[:, 2] += G[:, 0] * K[:, 1]
    return out


# --------------------------------------------------------------------------
# automorphisms


def _bracket_vec(u, v):
    return np.array([0.0, 0.0, u[0] * v[1] - u[1] * v[0]])


class AlgebraAutomorphism:
    """A bracket-preserving invertible map of the algebra."""

    def __init__(self, L, tol: float = BRACKET_TOL):
        L = np.asarray(L, dtype=float)
        if L.shape != (3, 3) or not np.all(np.isfinite(L)):
            raise DomainError("an algebra automorphism is a finite 3x3 matrix")
        if abs(np.linalg.det(L)) <= 1e-12:
            raise DomainError("algebra automorphism must be invertible")
        self.L = L
        self.residual = bracket_residual(L)
        if self.residual > tol * max(1.0, np.max(np.abs(L)) ** 2):
            raise DomainError(f"matrix does not preserve brackets (residual {self.residual:.3e})")

    def __call__(self, X: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(*(self.L @ X.vector()))

    def __repr__(self):
        return f"AlgebraAutomorphism({self.L.tolist()})"


def bracket_residual(L) -> float:
    """``max |L[u, v] - [Lu, Lv]|`` over basis pairs."""
    L = np.asarray(L, dtype=float)
    e = np.eye(3)
    worst = 0.0
    for i in range(3):
        for j in range(3):
            lhs = L @ _bracket_vec(e[i], e[j])
            rhs = _bracket_vec(L @ e[i], L @ e[j])
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def graded_dilation(lam: float, mu: float) -> AlgebraAutomorphism:
    return AlgebraAutomorphism(np.diag([lam, mu, lam * mu]))


def automorphism_apply(L, g: GroupElement) -> GroupElement:
    """The group automorphism with differential ``L``: ``exp(L log g)``."""
    if not isinstance(L, AlgebraAutomorphism):
        L = AlgebraAutomorphism(L)
    return exp_algebra(L(log_group(g)))


class HeisenbergAutomorphism(Map):
    """Automorphism of the group as a map on R^3.

    With ``coords="exp"`` states are algebra coordinates of ``g`` and the
    map is linear; with ``coords="matrix"`` states are the matrix entries of
    ``g`` and the map is ``exp o L o log``.
    """

    kind = "heisenberg_automorphism"

    def __init__(self, algebra_matrix, coords: str = "exp"):
        if coords not in ("exp", "matrix"):
            raise DomainError("coords must be 'exp' or 'matrix'")
        super().__init__(Space("euclidean", 3))
        self.aut = algebra_matrix if isinstance(algebra_matrix, AlgebraAutomorphism) \
            else AlgebraAutomorphism(algebra_matrix)
        self.coords = coords

    @property
    def matrix(self) -> np.ndarray:
        return self.aut.L

    def apply_batch(self, X):
        if self.coords == "exp":
            return X @ self.aut.L.T
        return exp_batch(log_batch(X) @ self.aut.L.T)

    def __repr__(self):
        return f"HeisenbergAutomorphism({self.aut.L.tolist()}, coords={self.coords!r})"


def homomorphism_residual(L, G: np.ndarray, K: np.ndarray) -> float:
    """``max |phi(gk) - phi(g) phi(k)|`` over paired rows (matrix coordinates)."""
    phi = HeisenbergAutomorphism(L, coords="matrix")
    lhs = phi.apply_batch(group_multiply_batch(G, K))
    rhs = group_multiply_batch(phi.apply_batch(G), phi.apply_batch(K))
    return float(np.max(np.abs(lhs - rhs)))


class TransportedMetric(Metric):
    """``d(chart(p), chart(q))`` for a base metric and a coordinate change."""

    kind = "transported"

    def __init__(self, base: Metric, chart: Callable[[np.ndarray], np.ndarray], name: str = "chart"):
        self.base, self.chart, self.name = base, chart, name

    def pairwise(self, A, B):
        return self.base.pairwise(self.chart(A), self.chart(B))

    def __repr__(self):
        return f"TransportedMetric({self.base!r}, {self.name})"


# --------------------------------------------------------------------------
# semiconjugacies


@dataclass
class SemiconjugacyReport:
    """Findings of :func:`semiconjugacy_check`; the probe is a heuristic, not a proof."""

    residual: float
    probe_hits: list              # (shell radius, hits, samples)
    proper_probe: bool
    entropy_source: float | None = None
    entropy_target: float | None = None

    @property
    def entropy_gap(self) -> float | None:
        if self.entropy_source is None or self.entropy_target is None:
            return None
        return abs(self.entropy_target - self.entropy_source)


def semiconjugacy_check(f: Callable[[np.ndarray], np.ndarray], S: Map, T: Map, samples: np.ndarray,
                        target_metric: Metric, ball_center, ball_radius: float,
                        shells=(1e1, 1e2, 1e3, 1e4, 1e5, 1e6), per_shell: int = 2000,
                        entropy_source: Callable[[], float] | None = None,
                        entropy_target: Callable[[], float] | None = None,
                        seed: int = 0) -> SemiconjugacyReport:
    """Check ``f o S = T o f`` on ``samples`` and probe properness of ``f``.

    The probe draws points of the source with norms in ``[R, 2R]`` for each
    shell radius ``R`` and counts those that ``f`` sends into the target
    ball. Preimages of a compact set under a proper map are bounded, so hits
    on the outer half of the shells flag ``f`` as not proper.
    """
    Y = S.space.batch(samples)
    lhs = T.space.batch(f(S.apply_batch(Y)))
    rhs = T.apply_batch(T.space.batch(f(Y)))
    residual = max((float(np.max(np.diag(target_metric.pairwise(lhs[i:i + 256], rhs[i:i + 256]))))
                    for i in range(0, len(Y), 256)), default=0.0)

    rng = np.random.default_rng(seed)
    centre = T.space.batch(np.atleast_2d(np.asarray(ball_center, dtype=float)))
    dim = S.space.dim
    hits = []
    for R in shells:
        u = rng.standard_normal((per_shell, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        P = u * rng.uniform(R, 2 * R, size=(per_shell, 1))
        img = T.space.batch(f(P))
        inside = target_metric.pairwise(img, centre)[:, 0] < ball_radius
        hits.append((float(R), int(inside.sum()), per_shell))
    outer = hits[len(hits) // 2:]
    proper = all(h == 0 for _, h, _ in outer)
    return SemiconjugacyReport(residual, hits, proper,
                               entropy_source() if entropy_source else None,
                               entropy_target() if entropy_target else None)


def circle_cover(X: np.ndarray) -> np.ndarray:
    """``x -> e^{ix}`` written in the [0, 1) parameter of the circle."""
    return np.mod(np.asarray(X, dtype=float)[:, :1] / (2 * np.pi), 1.0)


__all__ = [
    "AlgebraElement", "GroupElement", "IDENTITY", "exp_algebra", "log_group", "exp_batch",
    "log_batch", "group_multiply_batch", "AlgebraAutomorphism", "bracket_residual",
    "graded_dilation", "automorphism_apply", "HeisenbergAutomorphism", "homomorphism_residual",
    "TransportedMetric", "SemiconjugacyReport", "semiconjugacy_check", "circle_cover",
]
