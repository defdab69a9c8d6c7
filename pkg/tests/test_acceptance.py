"""The ten acceptance criteria, each at its stated tolerance.

Presets are run once per session with one thread. Criterion 10 reruns every
preset with three threads and compares the CSV bytes.
"""

import math

import pytest

from entropy_lab.experiments import run_config
from entropy_lab.presets import PRESETS, get_preset

LOG2 = math.log(2)
_CACHE = {}


def run(name, threads=1):
    key = (name, threads)
    if key not in _CACHE:
        _CACHE[key] = run_config(get_preset(name), seed=0, threads=threads)
    return _CACHE[key]


def q(outcome, exp_id):
    return next(r for r in outcome.results if r.id == exp_id).quantities


def wall(outcome):
    return sum(r.wall_time for r in outcome.results)


def test_criterion_01_doubling_bowen(acceptance):
    out = run("doubling-bowen")
    v, t = q(out, "doubling_bowen")["value"], wall(out)
    ok = abs(v - LOG2) <= 0.10 * LOG2 and t <= 30
    acceptance(1, ok, f"doubling Bowen estimate {v:.5f} vs log 2 (+-10%), {t:.1f} s <= 30 s")
    assert out.passed and ok


def test_criterion_02_doubling_cover(acceptance):
    out = run("doubling-cover")
    res = q(out, "doubling_cover")
    ok = abs(res["slope"] - LOG2) <= 0.10 * LOG2 and res["subadditive"] and res["exact"]
    acceptance(2, ok, f"cover slope {res['slope']:.5f}, subadditive={res['subadditive']}, "
                      f"exact={res['exact']}")
    assert out.passed and ok


def test_criterion_03_euclid_vs_compactified(acceptance):
    out = run("linear-euclid-vs-compactified")
    e = q(out, "linear_euclid")["value"]
    c = q(out, "linear_compactified")["value"]
    t = wall(out)
    ok = abs(e - LOG2) <= 0.10 * LOG2 and c <= 0.1 and t <= 60
    acceptance(3, ok, f"Euclidean {e:.5f} (log 2 +-10%), compactified {c:.5f} <= 0.1, {t:.1f} s <= 60 s")
    assert out.passed and ok


def test_criterion_04_jordan_battery(acceptance):
    out = run("jordan-battery")
    res = q(out, "jordan")
    ok = res["matrices"] == 200 and res["failures"] == 0 and res["max_recomposition"] <= 1e-9
    acceptance(4, ok, f"{res['matrices'] - res['failures']}/{res['matrices']} matrices pass all five "
                      f"invariants, max recomposition {res['max_recomposition']:.2e}")
    assert ok


def test_criterion_05_recurrence_battery(acceptance):
    out = run("jordan-battery")
    res = q(out, "recurrence")
    ok = res["cases"] == 30 and res["agreements"] == 30
    acceptance(5, ok, f"recurrent set agrees with oracle in {res['agreements']}/{res['cases']} cases")
    assert out.passed and ok


def test_criterion_06_variational_shift(acceptance):
    out = run("variational-shift")
    res = q(out, "variational")
    ok = (res["max_closed_form_error"] <= 1e-12 and res["argmax_p"] == 0.5
          and abs(res["max_rate"] - LOG2) <= 1e-12 and res["rate_vs_cover_gap"] <= 1e-9)
    acceptance(6, ok, f"closed-form error {res['max_closed_form_error']:.1e}, argmax p={res['argmax_p']}, "
                      f"|max - log 2| {abs(res['max_rate'] - LOG2):.1e}, "
                      f"gap to cover entropy {res['rate_vs_cover_gap']:.1e}")
    assert out.passed and ok


def test_criterion_07_lifted_identity(acceptance):
    out = run("lifted-measure")
    res = q(out, "lifted")
    rows = next(r for r in out.results if r.id == "lifted").tables["identity"].rows
    cs = sorted({row[2] for row in rows})
    ns = sorted({row[3] for row in rows})
    ok = (res["max_residual"] <= 1e-12 and res["bound_holds"]
          and cs == [0.0, 0.25, 0.5, 0.9, 1.0] and ns == list(range(13)))
    acceptance(7, ok, f"max identity residual {res['max_residual']:.1e}, "
                      f"max b + phi(a) {res['max_b_plus_phi_a']:.5f} <= 2/e")
    assert out.passed and ok


def test_criterion_08_heisenberg(acceptance):
    out = run("heisenberg-zero")
    res = q(out, "heisenberg")
    classical = math.log(2) + math.log(3) + math.log(6)
    ok = (res["roundtrip_error"] <= 1e-15 and res["homomorphism_residual"] <= 1e-12
          and abs(res["classical_entropy"] - classical) <= 1e-12 and res["bowen_value"] <= 0.1)
    acceptance(8, ok, f"round trip {res['roundtrip_error']:.1e}, homomorphism {res['homomorphism_residual']:.1e}, "
                      f"classical {res['classical_entropy']:.12f}, Bowen {res['bowen_value']:.4f}")
    assert out.passed and ok


def test_criterion_09_counterexample(acceptance):
    out = run("counterexample-circle")
    res = q(out, "circle_cover")
    ok = res["residual"] <= 1e-12 and res["proper_probe"] is False and res["entropy_gap"] >= 0.5
    acceptance(9, ok, f"residual {res['residual']:.1e}, probe proper={res['proper_probe']}, "
                      f"entropy gap {res['entropy_gap']:.4f} >= 0.5")
    assert out.passed and ok


def test_criterion_10_determinism(acceptance):
    differing = []
    for name in PRESETS:
        a = run(name, threads=1).csv_files()
        b = run(name, threads=3).csv_files()
        if a != b:
            differing.append(name)
    ok = not differing
    acceptance(10, ok, f"{len(PRESETS) - len(differing)}/{len(PRESETS)} presets byte-identical "
                       "across 1 and 3 threads")
    assert ok, differing


@pytest.mark.parametrize("name", list(PRESETS))
def test_every_preset_emits_assertions(name):
    out = run(name)
    assert out.assertions and out.passed
