"""Runners for each experiment kind, check evaluation and output writing.

Every runner returns an :class:`ExperimentResult` holding tables (written as
CSV), scalar quantities (targets of checks) and free-form diagnostics.
Tables never contain timings, so CSV output is a pure function of the
config and the seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bowen, cover_entropy, heisenberg, linear, measure
from .config import SCHEMA_VERSION, validate_config
from .dynamics import map_from_config, metric_from_config


@dataclass
class Table:
    columns: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _plain(v):
    """JSON-friendly copy of nested results."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    return v


@dataclass
class ExperimentResult:
    id: str
    kind: str
    tables: dict = field(default_factory=dict)
    quantities: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0


@dataclass
class Context:
    seed: int = 0
    threads: int = 1

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


# --------------------------------------------------------------------------
# runners


def _schedule(cfg):
    return bowen.Schedule.from_config(cfg)


def _bowen_table(est: bowen.EntropyEstimate) -> Table:
    return Table(["n", "eps", "raw_count", "count", "resolved"], est.rows())


def _estimate(exp, ctx, map_key="map", metric_key="metric", region_key="region"):
    m = map_from_config(exp[map_key])
    d = metric_from_config(exp[metric_key])
    r = bowen.region_from_config(exp[region_key])
    return bowen.metric_entropy_estimate(m, d, r, _schedule(exp["schedule"]), threads=ctx.threads)


def run_bowen(exp, ctx) -> ExperimentResult:
    est = _estimate(exp, ctx)
    res = ExperimentResult(exp["id"], "bowen")
    res.tables["counts"] = _bowen_table(est)
    res.quantities = {"value": est.value, "usable_scales": est.diagnostics["usable_scales"],
                      "monotone_in_n": est.diagnostics["monotone_in_n"],
                      "monotone_in_eps": est.diagnostics["monotone_in_eps"]}
    res.diagnostics = {"slopes": {repr(k): v for k, v in est.slopes.items()},
                       "fit_residuals": {repr(k): v for k, v in est.diagnostics["fit_residuals"].items()}}
    return res


def _universe(exp, elements, space):
    u = exp["universe"]
    if u["kind"] == "circle_atoms":
        return cover_entropy.circle_atom_universe(elements, u.get("n_max", exp["n_max"]), u.get("degree", 2))
    return bowen.region_from_config(u).points


def run_cover(exp, ctx) -> ExperimentResult:
    m = map_from_config(exp["map"])
    elements = [cover_entropy.open_set_from_config(c) for c in exp["covering"]["elements"]]
    cov = cover_entropy.CoveringSpec(elements, _universe(exp, elements, m.space), m.space,
                                     exp["covering"].get("max_unbounded", 1))
    est = cover_entropy.covering_entropy(cov, m, exp["n_max"],
                                         exp.get("node_budget", cover_entropy.DEFAULT_NODE_BUDGET))
    res = ExperimentResult(exp["id"], "cover")
    res.tables["counts"] = Table(["n", "count", "lower", "exact"], est.rows)
    d = est.diagnostics
    res.quantities = {"slope": est.slope, "subadditive": d["subadditive"], "exact": d["exact"],
                      "nondecreasing": d["nondecreasing"], "universe_size": len(cov.universe)}
    res.diagnostics = {"fit_range": est.fit_range, "violations": d["subadditivity_violations"]}
    return res


def _random_invertible(rng, dims, bound, det_min):
    while True:
        d = int(rng.integers(dims[0], dims[1] + 1))
        A = rng.uniform(-bound, bound, size=(d, d))
        if abs(np.linalg.det(A)) >= det_min:
            return A


INVARIANTS = ("recomposition", "commutation", "hyperbolic_positive", "unipotent", "elliptic_bounded")


def run_jordan_battery(exp, ctx) -> ExperimentResult:
    rng = ctx.rng(4)
    dims = exp.get("dims", [2, 5])
    mats = [_random_invertible(rng, dims, exp.get("entry_bound", 2.0), exp.get("det_min", 1e-3))
            for _ in range(exp["count"])]
    tol = exp.get("tol", linear.INVARIANT_TOL)

    def one(A):
        tr = linear.jordan_multiplicative(A)
        rep = tr.invariants(tol)
        again = linear.jordan_multiplicative(tr.H @ tr.E @ tr.U)
        uniq = max(np.max(np.abs(x - y)) for x, y in ((tr.H, again.H), (tr.E, again.E), (tr.U, again.U)))
        return A, rep, float(uniq)

    with ThreadPoolExecutor(max_workers=max(1, ctx.threads)) as pool:
        results = list(pool.map(one, mats))
    rows, failures, worst = [], 0, {k: 0.0 for k in INVARIANTS}
    uniq_fail = 0
    for i, (A, rep, uniq) in enumerate(results):
        failures += not rep.passed
        uniq_fail += uniq > 1e-8
        for k in INVARIANTS:
            worst[k] = max(worst[k], rep.checks[k][1])
        rows.append([i, A.shape[0], float(np.linalg.det(A))] + [rep.checks[k][1] for k in INVARIANTS]
                    + [uniq, rep.passed])
    res = ExperimentResult(exp["id"], "jordan_battery")
    res.tables["battery"] = Table(["index", "d", "det"] + list(INVARIANTS) + ["uniqueness", "passed"], rows)
    res.quantities = {"failures": failures, "matrices": len(mats), "pass_rate": 1 - failures / len(mats),
                      "uniqueness_failures": uniq_fail}
    res.quantities.update({f"max_{k}": v for k, v in worst.items()})
    return res


def _rot(p, q):
    t = 2 * np.pi * p / q
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def _blocks(*bs):
    bs = [np.atleast_2d(np.asarray(b, dtype=float)) for b in bs]
    n = sum(b.shape[0] for b in bs)
    out = np.zeros((n, n))
    k = 0
    for b in bs:
        out[k:k + b.shape[0], k:k + b.shape[0]] = b
        k += b.shape[0]
    return out


def standard_recurrence_battery() -> list:
    """Thirty labelled matrices: rational rotations, hyperbolic, shears and mixtures."""
    shear = [[1, 1], [0, 1]]
    P = np.array([[1.0, 0.5], [0.25, 1.0]])
    conj = lambda M: P @ M @ np.linalg.inv(P)   # noqa: E731
    out = [(f"rotation {p}/{q}", _rot(p, q)) for p, q in
           [(1, 4), (1, 3), (2, 5), (1, 6), (3, 8), (1, 12), (5, 12), (2, 7)]]
    out += [
        ("hyperbolic diag(2,1/2)", np.diag([2.0, 0.5])),
        ("hyperbolic diag(3,1/3)", np.diag([3.0, 1 / 3])),
        ("cat map", np.array([[2.0, 1.0], [1.0, 1.0]])),
        ("expanding diag(1.5,2)", np.diag([1.5, 2.0])),
        ("contracting diag(1/2,1/4)", np.diag([0.5, 0.25])),
        ("hyperbolic [[1,1],[1,2]]", np.array([[1.0, 1.0], [1.0, 2.0]])),
        ("shear", np.array(shear, dtype=float)),
        ("lower shear", np.array([[1.0, 0.0], [2.0, 1.0]])),
        ("jordan block 3", np.array([[1.0, 1, 0], [0, 1, 1], [0, 0, 1]])),
        ("negative shear", np.array([[-1.0, 1.0], [0.0, -1.0]])),
        ("shear (+) rotation 1/4", _blocks(shear, _rot(1, 4))),
        ("rotation 1/4 (+) 2", _blocks(_rot(1, 4), 2)),
        ("rotation 1/5 (+) shear", _blocks(_rot(1, 5), shear)),
        ("-1 (+) diag(3,1/3)", _blocks(-1, np.diag([3.0, 1 / 3]))),
        ("rotation 1/3 (+) rotation 1/8", _blocks(_rot(1, 3), _rot(1, 8))),
        ("rotation 1/6 (+) 1", _blocks(_rot(1, 6), 1)),
        ("diag(2,1,1/2)", np.diag([2.0, 1.0, 0.5])),
        ("[[1,1],[0,2]]", np.array([[1.0, 1.0], [0.0, 2.0]])),
        ("rotation 1/4 (+) diag(2,1/2)", _blocks(_rot(1, 4), np.diag([2.0, 0.5]))),
        ("-1 (+) rotation 1/5 (+) shear", _blocks(-1, _rot(1, 5), shear)),
        ("conjugated rotation 1/5", conj(_rot(1, 5))),
        ("conjugated diag(-1,3)", conj(np.diag([-1.0, 3.0]))),
    ]
    return out


def run_recurrence_battery(exp, ctx) -> ExperimentResult:
    if "matrices" in exp:
        battery = [(f"matrix {i}", np.asarray(M, dtype=float)) for i, M in enumerate(exp["matrices"])]
    else:
        battery = standard_recurrence_battery()
    eps, n_max, samples = exp.get("eps", 1e-3), exp.get("n_max", 500), exp.get("samples", 8)
    rows, agree = [], 0
    for i, (label, M) in enumerate(battery):
        chk = linear.check_recurrence(M, eps, n_max, samples, ctx.rng(1000 + i))
        agree += chk.agrees
        rows.append([i, label, M.shape[0], chk.dimension, all(chk.basis_recurrent),
                     not any(chk.complement_recurrent), chk.agrees])
    res = ExperimentResult(exp["id"], "recurrence_battery")
    res.tables["battery"] = Table(["index", "label", "d", "recurrent_dim", "basis_recurrent",
                                   "complement_nonrecurrent", "agrees"], rows)
    res.quantities = {"agreements": agree, "cases": len(battery), "disagreements": len(battery) - agree}
    return res


def run_measure(exp, ctx) -> ExperimentResult:
    mu = measure.measure_from_config(exp["measure"])
    part = measure.partition_from_config(exp["partition"])
    m = map_from_config(exp["map"])
    r = measure.measure_entropy_estimate(mu, part, m, exp["n_max"])
    res = ExperimentResult(exp["id"], "measure")
    res.tables["entropy"] = Table(["n", "H", "cells"], [[n, h, c] for n, (h, c) in
                                                         enumerate(zip(r.sequence, r.cells))])
    res.quantities = {"value": r.value, "subadditive": r.subadditive}
    return res


def run_variational_shift(exp, ctx) -> ExperimentResult:
    from .dynamics import FullShift

    n, n_cov = exp["n"], exp["n_max"]
    shift = FullShift(2, max(n, n_cov) + 2)
    ref = measure.refine_partition(measure.generator_partition(), shift, n)
    rows = []
    for p in exp["p_grid"]:
        mu = measure.Bernoulli([p, 1 - p])
        H = measure.partition_entropy(mu, ref)
        closed = (n + 1) * (measure.phi(p) + measure.phi(1 - p))
        rows.append([p, H, closed, abs(H - closed), H / (n + 1)])
    best = max(rows, key=lambda r: (r[4], -abs(r[0] - 0.5)))

    L = exp.get("word_length", n_cov + 1)
    words = bowen.shift_words(2, L).points
    cov_shift = FullShift(2, L)
    cov = cover_entropy.CoveringSpec([cover_entropy.cylinder("0"), cover_entropy.cylinder("1")],
                                     words, cov_shift.space)
    cest = cover_entropy.covering_entropy(cov, cov_shift, n_cov)

    res = ExperimentResult(exp["id"], "variational_shift")
    res.tables["bernoulli"] = Table(["p", "H_n", "closed_form", "abs_error", "rate"], rows)
    res.tables["cover"] = Table(["n", "count", "lower", "exact"], cest.rows)
    res.quantities = {
        "max_closed_form_error": max(r[3] for r in rows),
        "argmax_p": best[0],
        "max_rate": best[4],
        "max_rate_error_vs_log2": abs(best[4] - math.log(2)),
        "cover_slope": cest.slope,
        "rate_vs_cover_gap": abs(best[4] - cest.slope),
        "cover_exact": cest.diagnostics["exact"],
    }
    return res


def run_lifted_identity(exp, ctx) -> ExperimentResult:
    part = measure.partition_from_config(exp["partition"])
    m = map_from_config(exp["map"])
    mus = [measure.measure_from_config(c) for c in exp["measures"]]
    rows, worst, worst_bound, bound_ok = [], 0.0, -math.inf, True
    for n in range(exp["n_max"] + 1):
        ref = measure.refine_partition(part, m, n)
        for j, mu in enumerate(mus):
            for c in exp["c_list"]:
                li = measure.lifted_identity_on(mu, c, ref)
                worst = max(worst, li.residual)
                worst_bound = max(worst_bound, li.b + li.phi_a)
                bound_ok &= li.bound_ok
                rows.append([j, repr(mu), c, n, li.direct, li.formula, li.residual, li.b + li.phi_a])
    res = ExperimentResult(exp["id"], "lifted_identity")
    res.tables["identity"] = Table(["measure_index", "measure", "c", "n", "direct", "formula",
                                    "residual", "b_plus_phi_a"], rows)
    res.quantities = {"max_residual": worst, "max_b_plus_phi_a": worst_bound,
                      "bound_holds": bound_ok}
    return res


def run_heisenberg(exp, ctx) -> ExperimentResult:
    L = np.asarray(exp["algebra_matrix"], dtype=float)
    aut = heisenberg.AlgebraAutomorphism(L)
    rng = ctx.rng(8)
    samples = rng.uniform(-1, 1, size=(exp.get("samples", 1000), 3))
    samples = np.vstack([[1.0, 2.0, 3.0], samples])
    roundtrip = float(np.max(np.abs(heisenberg.log_batch(heisenberg.exp_batch(samples)) - samples)))
    pairs = exp.get("pairs", 100)
    G, K = rng.uniform(-1, 1, size=(pairs, 3)), rng.uniform(-1, 1, size=(pairs, 3))
    hom = heisenberg.homomorphism_residual(aut, G, K)

    # eigenvalues of an automorphism are those of its 2x2 block and its determinant
    A = L[:2, :2]
    lam = list(np.linalg.eigvals(A)) + [np.linalg.det(A)]
    expected = math.fsum(math.log(abs(x)) for x in lam if abs(x) > 1 + 1e-12)
    h_classical = linear.classical_entropy(L)

    phi_map = heisenberg.HeisenbergAutomorphism(aut, coords="matrix")
    d = metric_from_config(exp["metric"])
    region = bowen.region_from_config(exp["region"])
    est = bowen.metric_entropy_estimate(phi_map, d, region, _schedule(exp["schedule"]), threads=ctx.threads)

    res = ExperimentResult(exp["id"], "heisenberg")
    res.tables["counts"] = _bowen_table(est)
    res.quantities = {"roundtrip_error": roundtrip, "homomorphism_residual": hom,
                      "bracket_residual": aut.residual, "classical_entropy": h_classical,
                      "classical_expected": expected, "classical_error": abs(h_classical - expected),
                      "bowen_value": est.value}
    return res


def run_semiconjugacy(exp, ctx) -> ExperimentResult:
    T = map_from_config(exp["map"])
    S = map_from_config(exp["source_map"])
    f = heisenberg.circle_cover
    n_samples = exp.get("samples", 1001)
    src_region = bowen.region_from_config(exp["source_region"])
    Y = np.linspace(src_region.points.min(), src_region.points.max(), n_samples)
    ball = exp.get("ball", {"center": 0.0, "radius": 0.1})
    est_t = _estimate(exp, ctx)
    est_s = _estimate(exp, ctx, "source_map", "source_metric", "source_region")
    rep = heisenberg.semiconjugacy_check(f, S, T, Y, metric_from_config(exp["metric"]),
                                         [ball["center"]], ball["radius"], seed=ctx.seed,
                                         entropy_source=lambda: est_s.value,
                                         entropy_target=lambda: est_t.value)
    res = ExperimentResult(exp["id"], "semiconjugacy")
    res.tables["probe"] = Table(["shell_radius", "hits", "samples"], rep.probe_hits)
    res.tables["target_counts"] = _bowen_table(est_t)
    res.tables["source_counts"] = _bowen_table(est_s)
    res.quantities = {"residual": rep.residual, "proper_probe": rep.proper_probe,
                      "entropy_target": rep.entropy_target, "entropy_source": rep.entropy_source,
                      "entropy_gap": rep.entropy_gap}
    return res


RUNNERS = {
    "bowen": run_bowen,
    "cover": run_cover,
    "jordan_battery": run_jordan_battery,
    "recurrence_battery": run_recurrence_battery,
    "measure": run_measure,
    "variational_shift": run_variational_shift,
    "lifted_identity": run_lifted_identity,
    "heisenberg": run_heisenberg,
    "semiconjugacy": run_semiconjugacy,
}


# --------------------------------------------------------------------------
# checks


@dataclass
class Assertion:
    experiment: str
    label: str
    quantity: str
    value: object
    bound: str
    passed: bool


def _evaluate(exp_id, chk, quantities) -> Assertion:
    q = chk["quantity"]
    label = chk.get("label", q)
    if q not in quantities:
        return Assertion(exp_id, label, q, None, "quantity missing", False)
    v = quantities[q]
    parts, ok = [], True
    if "equals" in chk:
        target = chk["equals"]
        if isinstance(target, bool) or not isinstance(target, (int, float)):
            ok &= v == target
            parts.append(f"== {_cell(target)}")
        else:
            tol = chk.get("tol", 0.0)
            ok &= v is not None and abs(float(v) - target) <= tol
            parts.append(f"== {_cell(target)} +- {_cell(tol)}")
    if "min" in chk:
        ok &= v is not None and float(v) >= chk["min"]
        parts.append(f">= {_cell(float(chk['min']))}")
    if "max" in chk:
        ok &= v is not None and float(v) <= chk["max"]
        parts.append(f"<= {_cell(float(chk['max']))}")
    if isinstance(v, float) and math.isnan(v):
        ok = False
    return Assertion(exp_id, label, q, v, " and ".join(parts), bool(ok))


def _compare(comp, results) -> Assertion:
    def get(ref):
        eid, q = ref.split(".", 1)
        return results[eid].quantities.get(q)

    a, b = get(comp["left"]), get(comp["right"])
    margin = comp.get("margin", 0.0)
    rel = comp["relation"]
    ok = a is not None and b is not None and {
        "le": lambda: a <= b + margin,
        "ge": lambda: a >= b - margin,
        "abs_diff_le": lambda: abs(a - b) <= margin,
        "abs_diff_ge": lambda: abs(a - b) >= margin,
    }[rel]()
    value = None if a is None or b is None else a - b
    return Assertion("comparison", comp.get("label", f"{comp['left']} {rel} {comp['right']}"),
                     f"{comp['left']} - {comp['right']}", value, f"{rel} {_cell(float(margin))}", bool(ok))


@dataclass
class RunOutcome:
    name: str
    seed: int
    results: list
    assertions: list

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def failing(self) -> list:
        return [a for a in self.assertions if not a.passed]

    def csv_files(self) -> dict:
        files = {}
        for r in self.results:
            for tname, table in r.tables.items():
                files[f"{r.id}__{tname}.csv"] = table.to_csv()
        files["assertions.csv"] = Table(
            ["experiment", "label", "quantity", "value", "bound", "passed"],
            [[a.experiment, a.label, a.quantity, a.value, a.bound, a.passed] for a in self.assertions],
        ).to_csv()
        return files

    def summary(self, threads: int) -> dict:
        return _plain({
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "threads": threads,
            "passed": self.passed,
            "experiments": {r.id: {"kind": r.kind, "quantities": r.quantities,
                                   "diagnostics": r.diagnostics, "wall_time_s": r.wall_time}
                            for r in self.results},
            "assertions": [{"experiment": a.experiment, "label": a.label, "quantity": a.quantity,
                            "value": a.value, "bound": a.bound, "passed": a.passed}
                           for a in self.assertions],
        })


def run_config(cfg: dict, seed: int | None = None, threads: int = 1) -> RunOutcome:
    """Validate and run every experiment of ``cfg``; checks never raise."""
    validate_config(cfg)
    seed = cfg.get("seed", 0) if seed is None else int(seed)
    ctx = Context(seed, max(1, int(threads)))
    results, assertions = {}, []
    for exp in cfg["experiments"]:
        t0 = time.perf_counter()
        res = RUNNERS[exp["kind"]](exp, ctx)
        res.wall_time = time.perf_counter() - t0
        results[exp["id"]] = res
        assertions += [_evaluate(exp["id"], chk, res.quantities) for chk in exp.get("checks", [])]
    assertions += [_compare(c, results) for c in cfg.get("comparisons", [])]
    return RunOutcome(cfg["name"], seed, list(results.values()), assertions)


def write_outputs(outcome: RunOutcome, out_dir, fmt: str = "both", threads: int = 1) -> list:
    """Write CSV tables and/or the JSON summary; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        for name, text in sorted(outcome.csv_files().items()):
            p = out / name
            p.write_text(text)
            written.append(p)
    if fmt in ("json", "both"):
        p = out / "summary.json"
        p.write_text(json.dumps(outcome.summary(threads), indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written


__all__ = ["Table", "ExperimentResult", "Assertion", "RunOutcome", "run_config", "write_outputs",
           "standard_recurrence_battery", "RUNNERS"]
