"""Acceptance gate: every verification criterion at its stated tolerance.

The module-scoped fixture runs all nine computational criteria once with
per-criterion wall timing, reruns the whole battery a second time, and
byte-compares the rendered reports (criterion 10). Each test then re-asserts
the stated tolerances on the recorded numbers and emits one pass/fail line,
so `pytest -v tests/test_acceptance.py` reads as the acceptance checklist.
"""

import math
import time

import pytest

from biobstacle import verify
from biobstacle.reporting import render_json

SEED = 7


@pytest.fixture(scope="module")
def acceptance():
    timings = {}
    criteria = []
    for fn in verify.CRITERIA:
        start = time.perf_counter()
        result = fn(SEED)
        timings[result["criterion"]] = time.perf_counter() - start
        criteria.append(result)
    first = {
        "experiment": "verify-all",
        "seed": SEED,
        "criteria": criteria,
        "all_passed": bool(all(c["passed"] for c in criteria)),
    }
    second = verify.run_all(SEED)
    identical = render_json(first) == render_json(second)
    by_number = {c["criterion"]: c for c in criteria}
    by_number[10] = {
        "criterion": 10,
        "name": "determinism",
        "byte_identical": identical,
        "passed": identical,
    }
    return {"criteria": by_number, "timings": timings}


def _line(result):
    verdict = "PASS" if result["passed"] else "FAIL"
    print(f"criterion {result['criterion']} ({result['name']}): {verdict}")


def test_criterion_01_brute_force_equivalence(acceptance):
    result = acceptance["criteria"][1]
    _line(result)
    assert result["worst_y_gap"] <= 1e-8
    assert result["pattern_mismatches"] == 0
    assert acceptance["timings"][1] < 60.0
    assert result["passed"]


def test_criterion_02_monotonicity_suites(acceptance):
    result = acceptance["criteria"][2]
    _line(result)
    assert result["worst_state_violation_u"] <= 1e-10
    assert result["worst_state_violation_psi"] <= 1e-10
    assert result["set_inclusion_violations"] == 0
    assert result["reflection_swap_mismatches"] == 0
    assert result["worst_multiplier_violation"] <= 1e-10
    assert result["shared_contact_nodes"] > 0
    assert acceptance["timings"][2] < 300.0
    assert result["passed"]


def test_criterion_03_obstacle_invariance(acceptance):
    result = acceptance["criteria"][3]
    _line(result)
    assert result["worst_state_change"] <= 1e-9
    assert result["lowered_nodes"] > 0
    assert result["passed"]


def test_criterion_04_reflection_symmetry(acceptance):
    result = acceptance["criteria"][4]
    _line(result)
    assert result["worst_state_gap"] <= 1e-10
    assert result["swap_mismatches"] == 0
    assert result["passed"]


def test_criterion_05_multiplier_split(acceptance):
    result = acceptance["criteria"][5]
    _line(result)
    assert result["split_defect"] == 0.0
    assert result["worst_pairing_gap"] <= 1e-8
    assert result["support_violations"] == 0
    assert result["passed"]


def test_criterion_06_derivative_consistency(acceptance):
    result = acceptance["criteria"][6]
    _line(result)
    assert result["weak_nodes"] == 0
    assert result["agreement_plus"] <= 1e-9
    assert result["agreement_minus"] <= 1e-9
    assert result["fd_order"] >= 0.9
    assert result["passed"]


def test_criterion_07_mosco_limit(acceptance):
    result = acceptance["criteria"][7]
    _line(result)
    assert result["weak_nodes"] > 0
    assert result["final_error_lower"] <= 1e-4
    assert result["final_error_upper"] <= 1e-4
    assert result["tail_nonincreasing_lower"]
    assert result["tail_nonincreasing_upper"]
    assert result["side_gap"] > 1e-3
    assert result["passed"]


def test_criterion_08_adjoint_subgradient(acceptance):
    result = acceptance["criteria"][8]
    _line(result)
    assert result["generic_weak_nodes"] == 0
    assert result["worst_adjoint_identity_gap"] <= 1e-12
    assert result["worst_cd_relative_error"] <= 1e-4
    assert result["descent_steps"] >= 50
    assert result["descent_strictly_decreasing"]
    assert result["descent_termination"] == "max_steps"
    assert result["passed"]


def test_criterion_09_ring_series(acceptance):
    result = acceptance["criteria"][9]
    _line(result)
    assert result["max_tail_increment"] < 1e-6
    assert result["bounded_limit_estimate"] <= result["measure_mass_bound"]
    assert result["slope_rel_err"] <= 0.25
    assert math.isfinite(result["C0"])
    assert all(entry["ok"] for entry in result["h1_checks"].values())
    assert result["gap_bounds_ok"]
    assert result["vi_property_ok"]
    assert acceptance["timings"][9] < 30.0
    assert result["passed"]


def test_criterion_10_determinism(acceptance):
    result = acceptance["criteria"][10]
    _line(result)
    assert result["byte_identical"]
    assert result["passed"]


def test_all_criteria_passed(acceptance):
    failed = [c["name"] for c in acceptance["criteria"].values()
              if not c["passed"]]
    print(f"acceptance summary: {10 - len(failed)}/10 criteria passed")
    assert failed == []
