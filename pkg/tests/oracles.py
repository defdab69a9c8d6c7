"""Independent reference computations used by the tests.

Nothing here imports the package; each function recomputes a quantity by
brute force or from a closed form.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_cover(sets, n_points):
    """Smallest number of sets (iterables of ints) covering range(n_points)."""
    masks = [sum(1 << p for p in set(s)) for s in sets]
    full = (1 << n_points) - 1
    if n_points == 0:
        return 0
    for k in range(1, len(masks) + 1):
        for combo in itertools.combinations(masks, k):
            acc = 0
            for m in combo:
                acc |= m
            if acc == full:
                return k
    return None


def doubling_grid_count(n_grid, eps, n):
    """Greedy spanning count for x -> 2x on the grid k/n_grid with strict d_n-balls.

    Two grid points j steps apart are within ``eps`` in d_n exactly when
    ``j * 2**n / n_grid < eps`` (the doubled gap grows until it exceeds eps,
    and it cannot wrap while below 1/4). Balls are arcs of ``2m + 1`` grid
    points and greedy on a cycle takes every ``(2m + 1)``-th point.
    """
    m = math.ceil(eps * n_grid / 2**n) - 1
    return math.ceil(n_grid / (2 * m + 1))


def circle_arc(x, y):
    d = abs((x % 1.0) - (y % 1.0))
    return min(d, 1.0 - d)


def chordal(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return 2 * np.linalg.norm(x - y) / math.sqrt((1 + x @ x) * (1 + y @ y))


def in_arc(x, a, b):
    r = (x - a) % 1.0
    return 0 < r < b - a


def arc_refinement_cover(arcs, n, universe):
    """N(alpha^n) for arcs under doubling by explicit orbits and brute force."""
    cells = {}
    for idx, x in enumerate(universe):
        orbit = [(x * 2**i) % 1.0 for i in range(n + 1)]
        choices = [[k for k, (a, b) in enumerate(arcs) if in_arc(y, a, b)] for y in orbit]
        for word in itertools.product(*choices):
            cells.setdefault(word, set()).add(idx)
    return brute_force_cover(list(cells.values()), len(universe))


def binary_entropy(p):
    return -sum(q * math.log(q) for q in (p, 1 - p) if q > 0)


def markov_block_entropy(P, pi, n):
    """H of the (n+1)-blocks of a stationary Markov chain."""
    P, pi = np.asarray(P, float), np.asarray(pi, float)
    h0 = -sum(p * math.log(p) for p in pi if p > 0)
    rate = -sum(pi[i] * P[i, j] * math.log(P[i, j])
                for i in range(len(pi)) for j in range(len(pi)) if P[i, j] > 0)
    return h0 + n * rate


def markov_block_entropy_enumerated(P, pi, n):
    """Same quantity by summing over all words."""
    P, pi = np.asarray(P, float), np.asarray(pi, float)
    k = len(pi)
    total = 0.0
    for word in itertools.product(range(k), repeat=n + 1):
        m = pi[word[0]]
        for a, b in zip(word, word[1:]):
            m *= P[a, b]
        if m > 0:
            total -= m * math.log(m)
    return total


def entropy_of_masses(masses):
    return -math.fsum(m * math.log(m) for m in masses if m > 0)


def stationary_by_power(P, steps=5000):
    v = np.full(len(P), 1.0 / len(P))
    for _ in range(steps):
        v = v @ np.asarray(P, float)
    return v


def heisenberg_product(g, k):
    """Product of unipotent matrices read off as (x, y, z)."""
    G = np.array([[1, g[0], g[2]], [0, 1, g[1]], [0, 0, 1]], float)
    K = np.array([[1, k[0], k[2]], [0, 1, k[1]], [0, 0, 1]], float)
    M = G @ K
    return np.array([M[0, 1], M[1, 2], M[0, 2]])


def matrix_exp_nilpotent(a, b, c):
    """exp of the strictly upper triangular algebra element by its power series."""
    X = np.array([[0, a, c], [0, 0, b], [0, 0, 0]], float)
    M = np.eye(3) + X + X @ X / 2
    return np.array([M[0, 1], M[1, 2], M[0, 2]])
