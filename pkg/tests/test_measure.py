import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_lab.dynamics import CircleDoubling, FullShift
from entropy_lab.errors import CapabilityError, DomainError
from entropy_lab.measure import (ArcPartition, Bernoulli, CylinderPartition, LebesgueCircle,
                                 LiftedMeasure, Markov, dyadic_partition, generator_partition,
                                 lifted_identity, measure_entropy_estimate, partition_entropy, phi,
                                 refine_partition, stationary_vector)

import oracles

probs = st.floats(0.01, 0.99)
SHIFT = FullShift(2, 24)


@st.composite
def stochastic(draw, k=None):
    k = k or draw(st.integers(2, 3))
    rows = []
    for _ in range(k):
        w = np.array([draw(st.floats(0.05, 1.0)) for _ in range(k)])
        rows.append(w / w.sum())
    return np.array(rows)


def test_phi_values():
    assert phi(0.0) == 0.0 and phi(1.0) == 0.0
    assert phi(1 / math.e) == pytest.approx(1 / math.e)
    assert phi(1 + 1e-13) == 0.0
    with pytest.raises(DomainError):
        phi(1.01)
    with pytest.raises(DomainError):
        phi(-0.1)


@given(probs, st.integers(0, 12))
def test_bernoulli_closed_form(p, n):
    ref = refine_partition(generator_partition(), SHIFT, n)
    H = partition_entropy(Bernoulli([p, 1 - p]), ref)
    assert H == pytest.approx((n + 1) * oracles.binary_entropy(p), abs=1e-12)
    assert len(ref) == 2 ** (n + 1)


@settings(max_examples=30)
@given(stochastic(), st.integers(0, 5))
def test_markov_block_entropy(P, n):
    pi = oracles.stationary_by_power(P)
    mu = Markov(P)
    assert np.allclose(mu.pi, pi, atol=1e-10)
    shift = FullShift(len(P), 24)
    ref = refine_partition(generator_partition(len(P)), shift, n)
    H = partition_entropy(mu, ref)
    assert H == pytest.approx(oracles.markov_block_entropy_enumerated(P, pi, n), abs=1e-10)
    assert H == pytest.approx(oracles.markov_block_entropy(P, pi, n), abs=1e-10)


def test_markov_rejects_non_stationary_pi():
    with pytest.raises(DomainError):
        Markov([[0.9, 0.1], [0.4, 0.6]], pi=[0.5, 0.5])


def test_stationary_vector_known():
    assert np.allclose(stationary_vector([[0.9, 0.1], [0.4, 0.6]]), [0.8, 0.2])


def test_variable_length_cylinders():
    part = CylinderPartition(["0", "10", "11"])
    p = 0.3
    ref = refine_partition(part, SHIFT, 0)
    H = partition_entropy(Bernoulli([p, 1 - p]), ref)
    assert H == pytest.approx(oracles.entropy_of_masses([p, (1 - p) * p, (1 - p) ** 2]), abs=1e-14)
    # refinements keep only cylinders that are consistent with the shifted words
    ref2 = refine_partition(part, SHIFT, 2)
    m = Bernoulli([p, 1 - p]).cell_masses(ref2)
    assert math.fsum(m) == pytest.approx(1.0, abs=1e-14)


def test_cylinder_partition_validation():
    with pytest.raises(DomainError):
        CylinderPartition(["0", "01", "1"])
    with pytest.raises(DomainError):
        CylinderPartition(["0", "10"])
    with pytest.raises(DomainError):
        CylinderPartition(["0", "1"], infinity_cell=2)


@given(st.integers(1, 3), st.integers(0, 8))
def test_lebesgue_dyadic(k, n):
    ref = refine_partition(dyadic_partition(k), CircleDoubling(), n)
    assert partition_entropy(LebesgueCircle(), ref) == pytest.approx((k + n) * math.log(2), abs=1e-12)


def test_trivial_partition_stays_trivial():
    ref = refine_partition(dyadic_partition(0), CircleDoubling(), 5)
    assert len(ref) == 1 and partition_entropy(LebesgueCircle(), ref) == 0.0


def test_lebesgue_uneven_arcs_against_itineraries():
    part = ArcPartition([Fraction(0), Fraction(1, 3)])
    n = 3
    ref = refine_partition(part, CircleDoubling(), n)
    H = partition_entropy(LebesgueCircle(), ref)
    # itinerary frequencies on a fine midpoint grid
    x = (np.arange(3 * 2**14) + 0.5) / (3 * 2**14)
    codes = np.zeros_like(x, dtype=np.int64)
    for i in range(n + 1):
        y = (x * 2**i) % 1.0
        codes = 2 * codes + (y >= 1 / 3)
    _, counts = np.unique(codes, return_counts=True)
    assert H == pytest.approx(oracles.entropy_of_masses(counts / counts.sum()), abs=1e-3)


def test_invariance_is_checked():
    with pytest.raises(CapabilityError):
        measure_entropy_estimate(Bernoulli([0.5, 0.5]), dyadic_partition(1), CircleDoubling(), 4)
    with pytest.raises(CapabilityError):
        refine_partition(dyadic_partition(1), SHIFT, 2)


@given(probs, st.integers(2, 10))
def test_estimate_sequence_is_subadditive(p, n_max):
    r = measure_entropy_estimate(Bernoulli([p, 1 - p]), generator_partition(), SHIFT, n_max)
    assert r.subadditive
    assert r.value == pytest.approx(oracles.binary_entropy(p), abs=1e-12)
    assert r.cells == [2 ** (n + 1) for n in range(n_max + 1)]


@given(probs, st.floats(0, 1), st.integers(0, 8), st.sampled_from([0, 1]))
def test_lifted_masses_and_identity(p, c, n, inf_cell):
    part = generator_partition(infinity_cell=inf_cell)
    mu = Bernoulli([p, 1 - p])
    ref = refine_partition(part, SHIFT, n)
    base = mu.cell_masses(ref)
    # the point at infinity sits in the cell labelled inf_cell at every time
    k = [i for i, lab in enumerate(ref.labels.tolist()) if all(s == inf_cell for s in lab)][0]
    masses = (1 - c) * base
    masses[k] += c
    direct = oracles.entropy_of_masses(masses)
    li = lifted_identity(mu, c, part, SHIFT, n)
    assert li.direct == pytest.approx(direct, abs=1e-12)
    assert li.residual <= 1e-12
    assert li.bound_ok
    assert partition_entropy(LiftedMeasure(mu, c), ref) == pytest.approx(direct, abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_lift_bound(c, m_inf):
    a = 1 - c
    b = phi(min(c + a * m_inf, 1.0)) - phi(a * m_inf)
    assert b + phi(a) <= 2 / math.e + 1e-15


def test_lift_needs_infinity_cell():
    with pytest.raises(DomainError):
        lifted_identity(Bernoulli([0.5, 0.5]), 0.5, generator_partition(), SHIFT, 2)
