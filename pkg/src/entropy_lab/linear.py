"""Multiplicative Jordan decomposition and recurrence of linear maps.

An invertible ``T`` factors as ``T = H E U`` with commuting factors: ``H``
diagonalisable with positive eigenvalues, ``E`` diagonalisable with
eigenvalues on the unit circle and ``U`` unipotent. The recurrent set of
``T`` is ``fix(H) & fix(U)``.

The factors are read off the generalised eigenspaces. If ``P_k`` is the
spectral projection onto the space of eigenvalue ``l_k`` then
``S = sum l_k P_k``, ``H = sum |l_k| P_k``, ``E = sum (l_k / |l_k|) P_k``
and ``U = S^-1 T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

CLUSTER_TOL = 1e-8
RANK_TOL = 1e-9
INVARIANT_TOL = 1e-9
ESCAPE_LIMIT = 1e150


def _as_square(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.ndim == 1 and T.size == 1:
        T = T.reshape(1, 1)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] == 0:
        raise DomainError("expected a nonempty square matrix")
    if not np.all(np.isfinite(T)):
        raise DomainError("matrix has non-finite entries")
    return T


def _check_invertible(T: np.ndarray):
    scale = np.max(np.abs(T))
    if scale == 0 or abs(np.linalg.det(T / scale)) <= 1e-12:
        raise DomainError("matrix is singular (|det| <= 1e-12 after scaling)")


def _cluster(eigs: np.ndarray, tol: float) -> list[np.ndarray]:
    """Single-linkage groups of eigenvalues closer than ``tol * max(1, |l|)``."""
    n = len(eigs)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= tol * max(1.0, abs(eigs[i]), abs(eigs[j])):
                parent[root(i)] = root(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    # order by modulus then argument so output is reproducible
    out = [np.array(g) for g in groups.values()]
    out.sort(key=lambda g: (round(float(np.abs(eigs[g]).mean()), 12), float(np.angle(eigs[g].mean()))))
    return out


def _null_basis(M: np.ndarray, dim: int) -> np.ndarray:
    """The ``dim`` right singular vectors of ``M`` with the smallest singular values."""
    _, _, Vh = np.linalg.svd(M)
    return Vh[M.shape[1] - dim:].conj().T


@dataclass
class InvariantReport:
    """Pass/fail and residual of each defining property of a triple."""

    checks: dict = field(default_factory=dict)   # name -> (passed, residual)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def failures(self) -> list:
        return [k for k, (ok, _) in self.checks.items() if not ok]


@dataclass
class JordanTriple:
    """Hyperbolic, elliptic and unipotent factors of ``T = H E U``."""

    H: np.ndarray
    E: np.ndarray
    U: np.ndarray
    T: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)            # columns span the generalised eigenspaces
    warnings: list = field(default_factory=list)

    @property
    def S(self) -> np.ndarray:
        return self.H @ self.E

    def adapted_norm(self, v) -> float:
        """A norm in which ``E`` is an isometry: ``|V^-1 v|`` for the eigenbasis ``V``."""
        return float(np.linalg.norm(np.linalg.solve(self.basis, np.asarray(v, dtype=complex))))

    def invariants(self, tol: float = INVARIANT_TOL, k_max: int = 200) -> InvariantReport:
        H, E, U, T = self.H, self.E, self.U, self.T
        d = T.shape[0]
        I = np.eye(d)
        rep = InvariantReport()

        r = np.linalg.norm(H @ E @ U - T) / np.linalg.norm(T)
        rep.checks["recomposition"] = (r <= tol, float(r))

        comm = max(np.linalg.norm(A @ B - B @ A) for A, B in ((H, E), (H, U), (E, U)))
        rep.checks["commutation"] = (comm <= tol, float(comm))

        # H is diagonalised by the eigenbasis with positive real eigenvalues
        Vinv = np.linalg.inv(self.basis)
        D = Vinv @ H @ self.basis
        off = np.linalg.norm(D - np.diag(np.diag(D))) / np.linalg.norm(H)
        hev = np.diag(D)
        ok = off <= tol and np.all(hev.real > 0) and np.max(np.abs(hev.imag)) <= tol * np.max(np.abs(hev))
        rep.checks["hyperbolic_positive"] = (bool(ok), float(max(off, np.max(np.abs(hev.imag)))))

        N = np.linalg.matrix_power(U - I, d)
        nil = np.linalg.norm(N)
        rep.checks["unipotent"] = (nil <= tol, float(nil))

        # ||E^k|| stays below the conditioning of the eigenbasis, which bounds
        # the operator norm of any matrix that is unitary in the adapted norm
        bound = np.linalg.cond(self.basis)
        P, worst = np.eye(d), 0.0
        for _ in range(k_max):
            P = P @ E
            worst = max(worst, float(np.linalg.norm(P, 2)))
        rep.checks["elliptic_bounded"] = (worst <= bound * (1 + 1e-6), worst / bound)
        return rep


def jordan_multiplicative(T, cluster_tol: float = CLUSTER_TOL) -> JordanTriple:
    """``T = H E U`` from the generalised eigenspaces of ``T``."""
    T = _as_square(T)
    _check_invertible(T)
    d = T.shape[0]
    eigs = np.linalg.eigvals(T)
    groups = _cluster(eigs, cluster_tol)

    warnings = []
    centres = [complex(eigs[g].mean()) for g in groups]
    for i in range(len(centres)):
        for j in range(i + 1, len(centres)):
            gap = abs(centres[i] - centres[j])
            if gap < 1e3 * cluster_tol * max(1.0, abs(centres[i])):
                warnings.append(f"eigenvalues {centres[i]:.6g} and {centres[j]:.6g} are only {gap:.2e} apart")

    blocks, lam = [], []
    I = np.eye(d, dtype=complex)
    for g, c in zip(groups, centres):
        m = len(g)
        W = _null_basis(np.linalg.matrix_power(T.astype(complex) - c * I, m), m)
        blocks.append(W)
        lam += [c] * m
    V = np.hstack(blocks)
    lam = np.array(lam)
    kappa = np.linalg.cond(V)
    if not np.isfinite(kappa) or kappa > 1e8:
        warnings.append(f"eigenbasis condition number {kappa:.2e}")
    Vinv = np.linalg.inv(V)

    def spectral(values):
        return np.real((V * values) @ Vinv)

    H = spectral(np.abs(lam))
    E = spectral(lam / np.abs(lam))
    S = spectral(lam)
    U = np.linalg.solve(S, T)
    return JordanTriple(H, E, U, T, eigs, V, warnings)


# --------------------------------------------------------------------------
# subspaces and recurrence


@dataclass
class Subspace:
    """Span of the orthonormal columns of ``basis`` (shape ``d x k``)."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, v, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.linalg.norm(v - self.projector() @ v) <= tol * max(1.0, np.linalg.norm(v)))

    def complement(self) -> "Subspace":
        if self.dim == self.ambient:
            return Subspace(np.zeros((self.ambient, 0)))
        if self.dim == 0:
            return Subspace(np.eye(self.ambient))
        U, _, _ = np.linalg.svd(self.basis, full_matrices=True)
        return Subspace(U[:, self.dim:])


def _kernel(M: np.ndarray, tol: float = RANK_TOL) -> Subspace:
    _, s, Vh = np.linalg.svd(M)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return Subspace(Vh[rank:].T.copy())


def fixed_subspace(M, tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis of ``ker(M - I)``."""
    M = _as_square(M)
    return _kernel(M - np.eye(M.shape[0]), tol)


def recurrent_set(T, tol: float = RANK_TOL) -> Subspace:
    """``fix(H) & fix(U)`` as the kernel of the stacked ``[H - I; U - I]``."""
    tr = jordan_multiplicative(T)
    I = np.eye(tr.T.shape[0])
    return _kernel(np.vstack([tr.H - I, tr.U - I]), tol)


@dataclass(frozen=True)
class RecurrenceResult:
    recurrent: bool
    k: int | None          # first return time when recurrent
    escaped: bool

    def __bool__(self):
        return self.recurrent


def recurrence_oracle(T, x, eps: float, n_max: int) -> RecurrenceResult:
    """Whether ``|T^k x - x| < eps`` for some ``1 <= k <= n_max``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    T = _as_square(T)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (T.shape[0],):
        raise DomainError("point and matrix dimensions differ")
    y = x.copy()
    for k in range(1, n_max + 1):
        y = T @ y
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > ESCAPE_LIMIT:
            return RecurrenceResult(False, None, True)
        if np.linalg.norm(y - x) < eps:
            return RecurrenceResult(True, k, False)
    return RecurrenceResult(False, None, False)


@dataclass
class RecurrenceCheck:
    dimension: int
    basis_recurrent: list
    complement_recurrent: list

    @property
    def agrees(self) -> bool:
        return all(self.basis_recurrent) and not any(self.complement_recurrent)


def check_recurrence(T, eps: float = 1e-3, n_max: int = 500, samples: int = 8,
                     rng: np.random.Generator | None = None) -> RecurrenceCheck:
    """Compare ``recurrent_set`` with the oracle on its basis and on random unit
    vectors of the orthogonal complement."""
    rng = rng or np.random.default_rng(0)
    R = recurrent_set(T)
    inside = [recurrence_oracle(T, v, eps, n_max).recurrent for v in R.basis.T]
    C = R.complement()
    outside = []
    if C.dim:
        for _ in range(samples):
            v = C.basis @ rng.standard_normal(C.dim)
            outside.append(recurrence_oracle(T, v / np.linalg.norm(v), eps, n_max).recurrent)
    return RecurrenceCheck(R.dim, inside, outside)


def classical_entropy(T, tol: float = 1e-12) -> float:
    """``sum log|l|`` over eigenvalues with ``|l| > 1`` (moduli within ``tol`` of 1 count as 1)."""
    T = _as_square(T)
    _check_invertible(T)
    mods = np.abs(np.linalg.eigvals(T))
    return math.fsum(float(np.log(m)) for m in mods if m > 1 + tol)


__all__ = [
    "JordanTriple", "InvariantReport", "jordan_multiplicative", "Subspace", "fixed_subspace",
    "recurrent_set", "RecurrenceResult", "recurrence_oracle", "RecurrenceCheck",
    "check_recurrence", "classical_entropy",
]
