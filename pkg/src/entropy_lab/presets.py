"""Named experiment configs; their checks are the acceptance thresholds."""

from __future__ import annotations

import copy
import math

LOG2 = math.log(2)

_DYADIC_SCHEDULE = {"eps_list": [2.0**-5, 2.0**-6, 2.0**-7], "n_min": 4, "n_max": 12}


def _within(quantity, target, rel, label):
    return {"quantity": quantity, "min": target * (1 - rel), "max": target * (1 + rel), "label": label}


def _at_most(quantity, bound, label):
    return {"quantity": quantity, "max": bound, "label": label}


def _is(quantity, value, label):
    return {"quantity": quantity, "equals": value, "label": label}


_DOUBLING_BOWEN = {
    "id": "doubling_bowen",
    "kind": "bowen",
    "map": {"kind": "circle_doubling"},
    "metric": {"kind": "circle_arc"},
    "region": {"kind": "circle_grid", "points": 4096},
    "schedule": _DYADIC_SCHEDULE,
    "checks": [_within("value", LOG2, 0.10, "doubling Bowen entropy within 10% of log 2")],
}

_THREE_ARCS = [{"arc": [j / 3 + 1 / 17 - 0.2, j / 3 + 1 / 17 + 0.2]} for j in range(3)]

_LINEAR_EUCLID = {
    "id": "linear_euclid",
    "kind": "bowen",
    "map": {"kind": "linear", "matrix": [[2.0]]},
    "metric": {"kind": "euclidean"},
    "region": {"kind": "box_grid", "lo": [0.0], "hi": [1.0], "shape": [4096]},
    "schedule": _DYADIC_SCHEDULE,
    "checks": [_within("value", LOG2, 0.10, "Euclidean estimate for x -> 2x within 10% of log 2")],
}

_LINEAR_COMPACT = {
    "id": "linear_compactified",
    "kind": "bowen",
    "map": {"kind": "linear", "matrix": [[2.0]]},
    "metric": {"kind": "compactified", "base_dimension": 1},
    "region": {"kind": "symmetric_grid", "radius": 1000.0, "points": 4096, "dim": 1},
    "schedule": _DYADIC_SCHEDULE,
    "checks": [_at_most("value", 0.1, "compactified estimate for x -> 2x at most 0.1")],
}

_BERNOULLI = {"bernoulli": [0.3, 0.7]}
_MARKOV = {"markov": {"P": [[0.9, 0.1], [0.4, 0.6]]}}

PRESETS = {
    "doubling-bowen": {
        "name": "doubling-bowen",
        "experiments": [_DOUBLING_BOWEN],
    },
    "doubling-cover": {
        "name": "doubling-cover",
        "experiments": [{
            "id": "doubling_cover",
            "kind": "cover",
            "map": {"kind": "circle_doubling"},
            "covering": {"elements": _THREE_ARCS},
            "universe": {"kind": "circle_atoms", "n_max": 12, "degree": 2},
            "n_max": 12,
            "checks": [
                _within("slope", LOG2, 0.10, "covering slope within 10% of log 2"),
                _is("subadditive", True, "log N(alpha^n) subadditive on all computed depths"),
                _is("exact", True, "every set cover solved to optimality"),
            ],
        }],
    },
    "linear-euclid-vs-compactified": {
        "name": "linear-euclid-vs-compactified",
        "experiments": [_LINEAR_EUCLID, _LINEAR_COMPACT],
    },
    "jordan-battery": {
        "name": "jordan-battery",
        "seed": 0,
        "experiments": [
            {
                "id": "jordan",
                "kind": "jordan_battery",
                "count": 200,
                "dims": [2, 5],
                "entry_bound": 2.0,
                "det_min": 1e-3,
                "checks": [
                    _is("failures", 0, "all five invariants hold on every matrix"),
                    _at_most("max_recomposition", 1e-9, "recomposition residual at most 1e-9"),
                ],
            },
            {
                "id": "recurrence",
                "kind": "recurrence_battery",
                "eps": 1e-3,
                "n_max": 500,
                "checks": [_is("agreements", 30, "recurrent set matches the oracle in 30/30 cases")],
            },
        ],
    },
    "variational-shift": {
        "name": "variational-shift",
        "experiments": [{
            "id": "variational",
            "kind": "variational_shift",
            "p_grid": [round(0.1 * k, 10) for k in range(1, 10)],
            "n": 20,
            "n_max": 12,
            "checks": [
                _at_most("max_closed_form_error", 1e-12, "Bernoulli entropy matches closed form to 1e-12"),
                {"quantity": "argmax_p", "equals": 0.5, "tol": 1e-12, "label": "maximum at p = 0.5"},
                _at_most("max_rate_error_vs_log2", 1e-12, "maximal rate equals log 2"),
                _at_most("rate_vs_cover_gap", 1e-9, "maximal rate equals the cylinder-cover entropy"),
            ],
        }],
    },
    "lifted-measure": {
        "name": "lifted-measure",
        "experiments": [{
            "id": "lifted",
            "kind": "lifted_identity",
            "measures": [_BERNOULLI, _MARKOV],
            "c_list": [0.0, 0.25, 0.5, 0.9, 1.0],
            "partition": {"cylinders": ["0", "1"], "alphabet": 2, "infinity_cell": 0},
            "map": {"kind": "full_shift", "alphabet_size": 2, "word_length": 16},
            "n_max": 12,
            "checks": [
                _at_most("max_residual", 1e-12, "lifted identity residual at most 1e-12"),
                _is("bound_holds", True, "b + phi(a) at most 2/e"),
            ],
        }],
    },
    "heisenberg-zero": {
        "name": "heisenberg-zero",
        "seed": 0,
        "experiments": [{
            "id": "heisenberg",
            "kind": "heisenberg",
            "algebra_matrix": [[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 6.0]],
            "samples": 1000,
            "pairs": 100,
            "metric": {"kind": "compactified", "base_dimension": 3},
            "region": {"kind": "symmetric_grid", "radius": 4.0, "points": 16, "dim": 3},
            "schedule": {"eps_list": [0.5, 0.25, 0.125], "n_min": 4, "n_max": 12},
            "checks": [
                _at_most("roundtrip_error", 1e-15, "exp/log round trip exact to 1e-15"),
                _at_most("homomorphism_residual", 1e-12, "homomorphism residual at most 1e-12"),
                _at_most("classical_error", 1e-12, "classical entropy equals log 2 + log 3 + log 6"),
                _at_most("bowen_value", 0.1, "compactified Bowen estimate at most 0.1"),
            ],
        }],
    },
    "counterexample-circle": {
        "name": "counterexample-circle",
        "seed": 0,
        "experiments": [{
            "id": "circle_cover",
            "kind": "semiconjugacy",
            "semiconjugacy": "circle_cover",
            "map": {"kind": "circle_doubling"},
            "metric": {"kind": "circle_arc"},
            "region": {"kind": "circle_grid", "points": 4096},
            "source_map": {"kind": "linear", "matrix": [[2.0]]},
            "source_metric": {"kind": "compactified", "base_dimension": 1},
            "source_region": {"kind": "symmetric_grid", "radius": 1000.0, "points": 4096, "dim": 1},
            "schedule": _DYADIC_SCHEDULE,
            "samples": 1001,
            "ball": {"center": 0.0, "radius": 0.1},
            "checks": [
                _at_most("residual", 1e-12, "semiconjugacy residual at most 1e-12"),
                _is("proper_probe", False, "properness probe fails"),
                {"quantity": "entropy_gap", "min": 0.5, "label": "entropy estimates differ by at least 0.5"},
            ],
        }],
    },
}


def get_preset(name: str) -> dict:
    """A fresh copy of the named preset; ``KeyError`` when unknown."""
    return copy.deepcopy(PRESETS[name])


__all__ = ["PRESETS", "get_preset"]
