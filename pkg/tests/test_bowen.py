import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_lab.bowen import (BowenTable, SampleRegion, Schedule, box_grid, circle_grid,
                               epsilon_slope, metric_entropy_estimate, shift_words, spanning_counts,
                               spanning_set)
from entropy_lab.dynamics import (CircleArc, CircleDoubling, CircleRotation, Compactified,
                                  Euclidean, FullShift, LinearMap, ShiftCylinder, Space,
                                  bowen_distance)
from entropy_lab.errors import DomainError

import oracles


@pytest.mark.parametrize("n_grid", [512, 1024, 4096])
def test_doubling_counts_match_closed_form(n_grid):
    eps_list = [2.0**-4, 2.0**-5, 2.0**-6]
    counts = spanning_counts(CircleDoubling(), CircleArc(), circle_grid(n_grid), eps_list, range(0, 9))
    for (n, e), c in counts.items():
        assert c == oracles.doubling_grid_count(n_grid, e, n), (n, e)


def test_table_matches_bowen_distance():
    region = SampleRegion(np.random.default_rng(1).random(30), Space("circle"))
    table = BowenTable(CircleDoubling(), CircleArc(), region, 5)
    for n, D in table:
        i, j = 3, 17
        assert D[i, j] == pytest.approx(
            bowen_distance(CircleDoubling(), CircleArc(), n, region.points[i], region.points[j]))


@settings(max_examples=20)
@given(st.integers(40, 300), st.floats(0.02, 0.3))
def test_schedule_counts_match_single_cells(n_grid, eps):
    region = circle_grid(n_grid, offset=0.37)
    c = spanning_counts(CircleDoubling(), CircleArc(), region, [eps, eps / 2], range(6))
    exact = {(n, e): spanning_set(CircleDoubling(), CircleArc(), region, n, e).count for n, e in c}
    assert c == exact
    for e in (eps, eps / 2):
        assert all(c[(n, e)] >= 1 for n in range(6))
    # the exact optimum is monotone even where greedy is not
    if n_grid <= 80:
        for n in range(5):
            a = spanning_set(CircleDoubling(), CircleArc(), region, n, eps, mode="exact_small").count
            b = spanning_set(CircleDoubling(), CircleArc(), region, n + 1, eps, mode="exact_small").count
            assert a <= b


@settings(max_examples=20)
@given(st.integers(10, 60), st.floats(0.03, 0.4), st.integers(0, 4), st.integers(0, 2**31))
def test_greedy_sandwiches_exact(n_points, eps, n, seed):
    region = SampleRegion(np.random.default_rng(seed).random(n_points), Space("circle"))
    g = spanning_set(CircleDoubling(), CircleArc(), region, n, eps)
    x = spanning_set(CircleDoubling(), CircleArc(), region, n, eps, mode="exact_small")
    assert x.exact
    assert x.count <= g.count <= x.count * (1 + math.log(n_points)) + 1e-9
    assert g.lower <= x.count


@given(st.floats(-1, 1), st.integers(100, 400))
def test_isometry_counts_constant_in_n(angle, n_grid):
    # 0.0513 * n_grid is never within 1e-3 of an integer here, so rounding in
    # the rotation cannot move a grid distance across the ball boundary
    c = spanning_counts(CircleRotation(angle), CircleArc(), circle_grid(n_grid), [0.0513], range(8))
    assert len(set(c.values())) == 1


def test_spanning_set_really_spans():
    region = circle_grid(300)
    res = spanning_set(CircleDoubling(), CircleArc(), region, 4, 0.05)
    X = region.points[:, 0]
    C = X[list(res.centres)]
    for x in X:
        assert min(max(oracles.circle_arc(x * 2**i, c * 2**i) for i in range(5)) for c in C) < 0.05


def test_epsilon_slope_doubling():
    s = epsilon_slope(CircleDoubling(), CircleArc(), circle_grid(4096), 2.0**-5, range(1, 5))
    assert s == pytest.approx(math.log(2), rel=0.15)
    with pytest.raises(DomainError):
        epsilon_slope(CircleDoubling(), CircleArc(), circle_grid(64), 0.1, [1, 2])


def test_full_shift_counts_are_cylinders():
    region = shift_words(2, 10)
    counts = spanning_counts(FullShift(2, 10), ShiftCylinder(), region, [0.5, 0.25], range(4))
    # d_n < 2^-k fixes the first n + k + 1 symbols
    assert counts == {(n, e): 2 ** (n + k + 1) for n in range(4) for k, e in ((1, 0.5), (2, 0.25))}


def test_schedule_validation():
    with pytest.raises(DomainError):
        Schedule([0.1, 0.2], 1, 5)
    with pytest.raises(DomainError):
        Schedule([], 1, 5)
    with pytest.raises(DomainError):
        Schedule([0.1], 5, 5)


def test_resolution_guard():
    with pytest.raises(DomainError):
        metric_entropy_estimate(CircleDoubling(), CircleArc(), circle_grid(64), Schedule([0.05], 1, 4))
    # the guard only applies when the grid spacing is measured in the same metric
    est = metric_entropy_estimate(LinearMap([[2.0]]), Compactified(1), box_grid([-1], [1], [41]),
                                  Schedule([0.08], 1, 4))
    assert est.diagnostics["region_size"] == 41


def test_estimate_envelope_and_resolved_cells():
    est = metric_entropy_estimate(CircleDoubling(), CircleArc(), circle_grid(1024),
                                  Schedule([2.0**-3, 2.0**-4], 1, 6))
    for (n, e), c in est.counts.items():
        assert c >= est.raw_counts[(n, e)]
    for n, e, raw, c, res in est.rows():
        assert res == (c <= 0.25 * 1024)
    assert est.value == max(s for s in est.slopes.values() if s is not None)


def test_unresolved_schedule_gives_nan():
    est = metric_entropy_estimate(CircleDoubling(), CircleArc(), circle_grid(64),
                                  Schedule([0.25], 10, 12))
    assert math.isnan(est.value) and est.diagnostics["usable_scales"] == 0


def test_euclidean_vs_compactified_small():
    sched = Schedule([2.0**-4, 2.0**-5], 2, 7)
    e = metric_entropy_estimate(LinearMap([[2.0]]), Euclidean(), box_grid([0], [1], [1024]), sched)
    c = metric_entropy_estimate(LinearMap([[2.0]]), Compactified(1),
                                box_grid([-1000], [1000], [1024]), sched)
    assert e.value == pytest.approx(math.log(2), rel=0.15)
    assert c.value <= 0.1


def test_threads_do_not_change_counts():
    args = (CircleDoubling(), CircleArc(), circle_grid(2048), [2.0**-4, 2.0**-5, 2.0**-6], range(3, 9))
    assert spanning_counts(*args, threads=1) == spanning_counts(*args, threads=4)
