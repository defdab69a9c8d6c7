"""Experiment configuration documents and their validation.

A config is a JSON object ``{"name", "seed"?, "experiments": [...],
"comparisons"?: [...]}``. Each experiment has an ``id``, a ``kind`` and a
list of ``checks`` on the quantities it reports. Structural validation uses
JSON Schema; the few semantic rules it cannot express (decreasing eps
lists, bracket-free kinds) are checked afterwards with the same error type.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .dynamics import MAP_KINDS, METRIC_KINDS

SCHEMA_VERSION = "1.0"

EXPERIMENT_KINDS = ("bowen", "cover", "jordan_battery", "recurrence_battery", "measure",
                    "variational_shift", "lifted_identity", "heisenberg", "semiconjugacy")


class ConfigError(ValueError):
    """Schema or semantic violation; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


_number_list = {"type": "array", "items": {"type": "number"}}
_matrix = {"type": "array", "minItems": 1, "items": _number_list}

_map = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(MAP_KINDS)},
        "matrix": _matrix,
        "algebra_matrix": _matrix,
        "coords": {"enum": ["exp", "matrix"]},
        "angle": {"type": "number"},
        "alphabet_size": {"type": "integer", "minimum": 2},
        "word_length": {"type": "integer", "minimum": 1},
        "maps": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/map"}},
        "space": {"enum": ["euclidean", "circle", "shift"]},
        "dim": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_metric = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(METRIC_KINDS)},
        "base_dimension": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_region = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["circle_grid", "box_grid", "symmetric_grid", "shift_words", "circle_atoms"]},
        "points": {"type": "integer", "minimum": 1},
        "offset": {"type": "number"},
        "lo": _number_list,
        "hi": _number_list,
        "shape": {"type": "array", "items": {"type": "integer", "minimum": 2}},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "dim": {"type": "integer", "minimum": 1},
        "alphabet": {"type": "integer", "minimum": 2},
        "length": {"type": "integer", "minimum": 1},
        "n_max": {"type": "integer", "minimum": 0},
        "degree": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

_schedule = {
    "type": "object",
    "required": ["eps_list", "n_min", "n_max"],
    "properties": {
        "eps_list": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "n_min": {"type": "integer", "minimum": 0},
        "n_max": {"type": "integer", "minimum": 1},
        "resolved_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "min_cells": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

_open_set = {
    "type": "object",
    "minProperties": 1,
    "maxProperties": 1,
    "properties": {
        "arc": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "ball": {"$ref": "#/$defs/ball"},
        "complement_ball": {"$ref": "#/$defs/ball"},
        "cylinder": {"type": "string", "minLength": 1},
    },
    "additionalProperties": False,
}

_measure = {
    "oneOf": [
        {"const": "lebesgue_circle"},
        {"type": "object", "required": ["lebesgue_circle"], "maxProperties": 1},
        {"type": "object", "required": ["bernoulli"], "maxProperties": 1,
         "properties": {"bernoulli": {"type": "array", "minItems": 2, "items": {"type": "number", "minimum": 0}}}},
        {"type": "object", "required": ["markov"], "maxProperties": 1,
         "properties": {"markov": {"type": "object", "required": ["P"],
                                   "properties": {"P": _matrix, "pi": _number_list},
                                   "additionalProperties": False}}},
        {"type": "object", "required": ["lift"], "maxProperties": 1,
         "properties": {"lift": {"type": "object", "required": ["base", "c"],
                                 "properties": {"base": {"$ref": "#/$defs/measure"},
                                                "c": {"type": "number", "minimum": 0, "maximum": 1}},
                                 "additionalProperties": False}}},
    ]
}

_partition = {
    "type": "object",
    "properties": {
        "cylinders": {"type": "array", "minItems": 1, "items": {"type": "string", "minLength": 1}},
        "breakpoints": {"type": "array", "minItems": 1, "items": {"type": ["number", "string"]}},
        "alphabet": {"type": "integer", "minimum": 2},
        "infinity_cell": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

_check = {
    "type": "object",
    "required": ["quantity"],
    "properties": {
        "quantity": {"type": "string"},
        "min": {"type": "number"},
        "max": {"type": "number"},
        "equals": {},
        "tol": {"type": "number", "minimum": 0},
        "label": {"type": "string"},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "experiments"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "experiments": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/experiment"}},
        "comparisons": {"type": "array", "items": {"$ref": "#/$defs/comparison"}},
    },
    "additionalProperties": False,
    "$defs": {
        "map": _map,
        "metric": _metric,
        "region": _region,
        "schedule": _schedule,
        "open_set": _open_set,
        "measure": _measure,
        "partition": _partition,
        "check": _check,
        "ball": {"type": "object", "required": ["center", "radius"],
                 "properties": {"center": {"type": ["number", "array"]}, "radius": {"type": "number"}},
                 "additionalProperties": False},
        "comparison": {
            "type": "object",
            "required": ["left", "right", "relation"],
            "properties": {
                "left": {"type": "string"},
                "right": {"type": "string"},
                "relation": {"enum": ["le", "ge", "abs_diff_le", "abs_diff_ge"]},
                "margin": {"type": "number"},
                "label": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "experiment": {
            "type": "object",
            "required": ["id", "kind"],
            "properties": {
                "id": {"type": "string", "pattern": "^[A-Za-z0-9_-]+$"},
                "kind": {"enum": list(EXPERIMENT_KINDS)},
                "checks": {"type": "array", "items": {"$ref": "#/$defs/check"}},
                "map": {"$ref": "#/$defs/map"},
                "source_map": {"$ref": "#/$defs/map"},
                "metric": {"$ref": "#/$defs/metric"},
                "source_metric": {"$ref": "#/$defs/metric"},
                "region": {"$ref": "#/$defs/region"},
                "source_region": {"$ref": "#/$defs/region"},
                "universe": {"$ref": "#/$defs/region"},
                "schedule": {"$ref": "#/$defs/schedule"},
                "covering": {"type": "object", "required": ["elements"],
                             "properties": {"elements": {"type": "array", "minItems": 1,
                                                         "items": {"$ref": "#/$defs/open_set"}},
                                            "max_unbounded": {"type": "integer", "minimum": 0}},
                             "additionalProperties": False},
                "n_max": {"type": "integer", "minimum": 0},
                "node_budget": {"type": "integer", "minimum": 1},
                "measure": {"$ref": "#/$defs/measure"},
                "measures": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/measure"}},
                "partition": {"$ref": "#/$defs/partition"},
                "c_list": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "minimum": 0, "maximum": 1}},
                "p_grid": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                "n": {"type": "integer", "minimum": 0},
                "word_length": {"type": "integer", "minimum": 1},
                "count": {"type": "integer", "minimum": 1},
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 2, "maxItems": 2},
                "entry_bound": {"type": "number", "exclusiveMinimum": 0},
                "det_min": {"type": "number", "minimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "matrices": {"type": "array", "items": _matrix},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "samples": {"type": "integer", "minimum": 1},
                "algebra_matrix": _matrix,
                "pairs": {"type": "integer", "minimum": 1},
                "semiconjugacy": {"enum": ["circle_cover"]},
                "ball": {"$ref": "#/$defs/ball"},
            },
            "additionalProperties": False,
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_config(cfg) -> dict:
    """Raise :class:`ConfigError` on the first violation; return ``cfg``."""
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(_pointer(err.absolute_path), err.message)
    seen = set()
    for i, exp in enumerate(cfg["experiments"]):
        base = f"/experiments/{i}"
        if exp["id"] in seen:
            raise ConfigError(base + "/id", f"duplicate experiment id {exp['id']!r}")
        seen.add(exp["id"])
        sched = exp.get("schedule")
        if sched is not None:
            eps = sched["eps_list"]
            if any(a <= b for a, b in zip(eps, eps[1:])):
                raise ConfigError(base + "/schedule/eps_list", "eps values must be strictly decreasing")
            if sched["n_min"] >= sched["n_max"]:
                raise ConfigError(base + "/schedule/n_min", "n_min must be below n_max")
        for field in _REQUIRED[exp["kind"]]:
            if field not in exp:
                raise ConfigError(base, f"experiment kind {exp['kind']!r} needs {field!r}")
    ids = {e["id"] for e in cfg["experiments"]}
    for j, comp in enumerate(cfg.get("comparisons", [])):
        for side in ("left", "right"):
            ref = comp[side]
            if ref.split(".", 1)[0] not in ids or "." not in ref:
                raise ConfigError(f"/comparisons/{j}/{side}", f"{ref!r} is not <experiment id>.<quantity>")
    return cfg


_REQUIRED = {
    "bowen": ("map", "metric", "region", "schedule"),
    "cover": ("map", "covering", "universe", "n_max"),
    "jordan_battery": ("count",),
    "recurrence_battery": (),
    "measure": ("measure", "partition", "map", "n_max"),
    "variational_shift": ("p_grid", "n", "n_max"),
    "lifted_identity": ("measures", "c_list", "partition", "map", "n_max"),
    "heisenberg": ("algebra_matrix", "metric", "region", "schedule"),
    "semiconjugacy": ("semiconjugacy", "map", "source_map", "metric", "source_metric",
                      "region", "source_region", "schedule"),
}


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("/", f"cannot read {p}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return validate_config(cfg)


__all__ = ["SCHEMA", "SCHEMA_VERSION", "ConfigError", "validate_config", "load_config",
           "EXPERIMENT_KINDS"]
