import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropy_lab.dynamics import (INFINITY, CircleArc, CircleDoubling, CircleRotation, Compactified,
                                  ComposedMap, Euclidean, FullShift, LinearMap, ShiftCylinder, Space,
                                  apply, bowen_distance, map_from_config, metric_from_config, orbit,
                                  orbit_batch, pairwise_chunked)
from entropy_lab.errors import DivergenceError, DomainError

import oracles

finite = st.floats(-1e3, 1e3, allow_nan=False)
unit = st.floats(0, 1, allow_nan=False, exclude_max=True)
words = st.text(alphabet="01", min_size=6, max_size=6)


def test_linear_orbit():
    T = LinearMap([[2.0, 0.0], [0.0, 0.5]])
    assert np.allclose(orbit(T, (1.0, 1.0), 3)[-1], [8.0, 0.125])


def test_orbit_length_and_flavour():
    assert orbit(CircleDoubling(), 0.3, 2) == pytest.approx([0.3, 0.6, 0.2])
    assert orbit(FullShift(), "0110", 2) == ["0110", "110", "10"]


def test_divergence_reports_index():
    with pytest.raises(DivergenceError) as info:
        orbit_batch(LinearMap([[1e100]]), np.array([[1.0]]), 5)
    assert info.value.index == 2


def test_singular_linear_map_rejected():
    with pytest.raises(DomainError):
        LinearMap([[1.0, 2.0], [2.0, 4.0]])


def test_infinity_is_fixed():
    assert apply(LinearMap([[2.0]]), INFINITY) is INFINITY
    with pytest.raises(DomainError):
        apply(CircleDoubling(), INFINITY)


def test_space_validation():
    with pytest.raises(DomainError):
        Space("euclidean", 2).point([1.0])
    with pytest.raises(DomainError):
        Space("shift", alphabet=2).point("012")
    with pytest.raises(DomainError):
        Space("torus")


def test_composition_order():
    rot = CircleRotation(0.25)
    f = ComposedMap([rot, CircleDoubling()])
    assert apply(f, 0.1) == pytest.approx(0.7)


def test_config_builders():
    assert isinstance(map_from_config({"kind": "linear", "matrix": [[2.0]]}), LinearMap)
    assert metric_from_config({"kind": "compactified", "base_dimension": 2}).base_dimension == 2
    with pytest.raises(DomainError):
        metric_from_config({"kind": "taxicab"})


def test_compactified_diameter_and_infinity():
    d = Compactified(1)
    assert d.distance(INFINITY, INFINITY) == 0.0
    assert d.distance(0.0, INFINITY) == pytest.approx(2.0)
    assert d.distance(1e8, INFINITY) == pytest.approx(2e-8)
    assert d.distance(-1.0, 1.0) == pytest.approx(2.0)


@given(finite, finite)
def test_chordal_formula(x, y):
    assert Compactified(1).distance(x, y) == pytest.approx(oracles.chordal([x], [y]), abs=1e-12)


@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=2, max_size=2))
def test_chordal_equals_sphere_distance(x, y):
    d = Compactified(2)
    E = d.embed(np.array([x, y]))
    assert d.distance(x, y) == pytest.approx(np.linalg.norm(E[0] - E[1]), abs=1e-9)
    assert np.allclose(np.linalg.norm(E, axis=1), 1.0)


@given(unit, unit)
def test_circle_arc_matches_oracle(x, y):
    assert CircleArc().distance(x, y) == pytest.approx(oracles.circle_arc(x, y), abs=1e-15)


@given(words, words)
def test_shift_cylinder_prefix(u, v):
    k = next((i for i, (a, b) in enumerate(zip(u, v)) if a != b), None)
    expected = 0.0 if k is None else 2.0**-k
    assert ShiftCylinder().distance(u, v) == expected


def _metric_points():
    return st.sampled_from([
        (Euclidean(), st.lists(finite, min_size=2, max_size=2), Space("euclidean", 2)),
        (Compactified(2), st.lists(finite, min_size=2, max_size=2), Space("euclidean", 2)),
        (CircleArc(), unit, Space("circle")),
        (ShiftCylinder(), words, Space("shift", alphabet=2)),
    ])


@given(st.data())
def test_metric_axioms(data):
    metric, points, space = data.draw(_metric_points())
    x, y, z = (data.draw(points) for _ in range(3))
    dxy, dyx = metric.distance(x, y, space), metric.distance(y, x, space)
    assert dxy >= 0
    assert dxy == pytest.approx(dyx, abs=1e-12)
    assert metric.distance(x, x, space) == pytest.approx(0.0, abs=1e-12)
    assert dxy <= metric.distance(x, z, space) + metric.distance(z, y, space) + 1e-9


@given(unit, unit, st.integers(0, 8))
def test_bowen_distance_monotone_and_explicit(x, y, n):
    T = CircleDoubling()
    dn = bowen_distance(T, CircleArc(), n, x, y)
    assert bowen_distance(T, CircleArc(), n + 1, x, y) >= dn
    expected = max(oracles.circle_arc(x * 2**i, y * 2**i) for i in range(n + 1))
    assert dn == pytest.approx(expected, abs=1e-9)


@given(unit, unit, st.floats(-1, 1))
def test_rotation_is_isometry(x, y, angle):
    R = CircleRotation(angle)
    d = CircleArc()
    assert bowen_distance(R, d, 5, x, y) == pytest.approx(d.distance(x, y), abs=1e-9)


def test_pairwise_chunked_matches_full():
    rng = np.random.default_rng(3)
    A, B = rng.normal(size=(1100, 2)), rng.normal(size=(40, 2))
    full = Euclidean().pairwise(A, B)
    blocks = np.vstack([b for _, b in pairwise_chunked(Euclidean(), A, B, chunk=256)])
    assert np.array_equal(full, blocks)


def test_bowen_distance_with_infinity():
    d = bowen_distance(LinearMap([[2.0]]), Compactified(1), 3, 1.0, INFINITY)
    assert d == pytest.approx(max(2 / math.sqrt(1 + 4.0**i) for i in range(4)))
