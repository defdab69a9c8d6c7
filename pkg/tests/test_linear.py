import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_lab.errors import DomainError
from entropy_lab.experiments import standard_recurrence_battery
from entropy_lab.linear import (check_recurrence, classical_entropy, fixed_subspace,
                                jordan_multiplicative, recurrence_oracle, recurrent_set)


def rot(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


@st.composite
def invertible(draw, max_dim=5):
    d = draw(st.integers(1, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    while True:
        A = rng.uniform(-2, 2, size=(d, d))
        if abs(np.linalg.det(A)) >= 1e-3:
            return A


def test_diagonal_example():
    tr = jordan_multiplicative(np.diag([2.0, -3.0]))
    assert np.allclose(tr.H, np.diag([2.0, 3.0]))
    assert np.allclose(tr.E, np.diag([1.0, -1.0]))
    assert np.allclose(tr.U, np.eye(2))


def test_scaled_rotation():
    tr = jordan_multiplicative(3.0 * rot(0.7))
    assert np.allclose(tr.H, 3 * np.eye(2))
    assert np.allclose(tr.E, rot(0.7))
    assert np.allclose(tr.U, np.eye(2))


def test_jordan_block():
    tr = jordan_multiplicative(np.array([[2.0, 1.0], [0.0, 2.0]]))
    assert np.allclose(tr.H, 2 * np.eye(2))
    assert np.allclose(tr.E, np.eye(2))
    assert np.allclose(tr.U, [[1.0, 0.5], [0.0, 1.0]])


def test_negative_jordan_block():
    tr = jordan_multiplicative(np.array([[-1.0, 1.0], [0.0, -1.0]]))
    assert np.allclose(tr.H, np.eye(2), atol=1e-9)
    assert np.allclose(tr.E, -np.eye(2), atol=1e-9)
    assert np.allclose(tr.U, [[1.0, -1.0], [0.0, 1.0]], atol=1e-9)


@settings(max_examples=150)
@given(invertible())
def test_invariants_on_random_matrices(A):
    rep = jordan_multiplicative(A).invariants()
    assert rep.passed, rep.checks


@settings(max_examples=60)
@given(invertible(max_dim=4))
def test_uniqueness_on_recomposition(A):
    tr = jordan_multiplicative(A)
    again = jordan_multiplicative(tr.H @ tr.E @ tr.U)
    for X, Y in ((tr.H, again.H), (tr.E, again.E), (tr.U, again.U)):
        assert np.allclose(X, Y, atol=1e-8)


@settings(max_examples=60)
@given(invertible(max_dim=4), st.integers(0, 2**32 - 1))
def test_conjugation_equivariance(A, seed):
    P = np.random.default_rng(seed).normal(size=A.shape) + 3 * np.eye(len(A))
    Pinv = np.linalg.inv(P)
    tr, tc = jordan_multiplicative(A), jordan_multiplicative(P @ A @ Pinv)
    scale = np.linalg.cond(P) * np.linalg.cond(tr.basis)
    for X, Y in ((tr.H, tc.H), (tr.E, tc.E), (tr.U, tc.U)):
        assert np.max(np.abs(P @ X @ Pinv - Y)) <= 1e-9 * scale * max(1, np.abs(Y).max())


def test_singular_rejected():
    with pytest.raises(DomainError):
        jordan_multiplicative([[1.0, 2.0], [2.0, 4.0]])


def test_fixed_subspace():
    F = fixed_subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert F.dim == 1 and F.contains([3.0, 0.0]) and not F.contains([0.0, 1.0])


@pytest.mark.parametrize("T, dim", [
    (rot(2 * math.pi / 5), 2),
    (np.diag([2.0, 0.5]), 0),
    (np.array([[1.0, 1.0], [0.0, 1.0]]), 1),
    (np.array([[-1.0, 1.0], [0.0, -1.0]]), 1),   # e1 has period 2
    (np.eye(3), 3),
    (np.diag([2.0, 1.0, -1.0]), 2),
])
def test_recurrent_set_examples(T, dim):
    assert recurrent_set(T).dim == dim


def test_oracle_basic():
    assert recurrence_oracle(rot(2 * math.pi / 7), [1.0, 0.0], 1e-6, 10).k == 7
    assert recurrence_oracle(np.diag([2.0]), [1.0], 1e-3, 100).recurrent is False
    assert recurrence_oracle(np.diag([10.0]), [1.0], 1e-3, 500).escaped


def test_standard_battery_has_thirty_cases():
    bat = standard_recurrence_battery()
    assert len(bat) == 30
    assert len({label for label, _ in bat}) == 30


@pytest.mark.parametrize("label, T", standard_recurrence_battery())
def test_recurrence_battery_agrees(label, T):
    assert check_recurrence(T, 1e-3, 500, 8, np.random.default_rng(0)).agrees, label


def test_classical_entropy():
    assert classical_entropy(np.diag([2.0, 3.0, 0.5])) == pytest.approx(math.log(6), abs=1e-12)
    assert classical_entropy(rot(1.0)) == 0.0
    cat = np.array([[2.0, 1.0], [1.0, 1.0]])
    assert classical_entropy(cat) == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-12)
