"""Acceptance criteria at their stated tolerances, one PASS/FAIL line each.

Run with pytest, or directly: ``python3 tests/test_acceptance.py [--profile fast]``.
Every test re-checks the criterion's thresholds against the report outputs and
recomputes closed-form reference values here rather than trusting the
report's own verdict alone.
"""

import argparse
import math
import sys
from fractions import Fraction

import pytest

from deltaconvex.acceptance import CRITERIA, Profile, format_line, run_criterion

PROFILE = Profile.full()
SEED = 0

# runtime ceilings where a criterion states one (seconds)
RUNTIME = {1: 5, 2: 30, 3: 1, 4: 10, 5: 60, 6: 60}


def gamma_of(n, delta):
    return (1 + (2 - n) * delta) / (1 + delta)


def _check(num, rep):
    out = rep.outputs
    if num == 1:
        assert len(out["cases"]) == 3 * 3 + 1
        for c in out["cases"]:
            assert c["max_spectrum_rel_error"] <= 1e-10
            assert c["max_abs_F"] <= 1e-10
    elif num == 2:
        assert len(out["cases"]) == 2 + 2 + 3
        assert all(c["min_margin"] >= -1e-9 for c in out["cases"])
        for c in out["cases"]:
            n, k = c["n"], c["k"]
            assert c["delta"] == Fraction(n - k, n * (k - 1))
        assert abs(out["extremal_margin"]) <= 1e-12
    elif num == 3:
        for c in out["cases"]:
            n, k = c["n"], c["k"]
            assert c["exact"] and c["gamma"] and c["p_delta_nk"] and c["p_delta_p0"]
            assert c["beta"] and c["delta0"]
            d = Fraction(n - k, n * (k - 1))
            assert gamma_of(n, d) == 2 - Fraction(n, k)
        assert len(out["cases"]) == sum(n - n // 2 for n in range(3, 9))
    elif num == 4:
        assert out["min_margin"] >= -1e-9
        assert all(c["max_abs_margin"] <= 1e-9 for c in out["model_cases"])
        assert all(c["max_hessian_mismatch"] <= 1e-12 for c in out["model_cases"])
    elif num == 5:
        g = float(gamma_of(3, Fraction(1, 3)))
        assert abs(out["holder"]["exponent"] - g) <= 0.02
        assert out["barrier_passed"] and out["barrier"]["min_slack"] >= 0
    elif num == 6:
        assert out["p_delta"] == 6.0
        lo, hi = out["flip"]
        assert 6.0 - 0.25 <= lo < hi <= 6.0 + 0.25
        assert out["verdict_changes"] == 1
    elif num == 7:
        assert max(out["reproduction_errors"].values()) <= 1e-12
        assert len(out["scales"]) == 2
        for s in out["scales"]:
            assert s["precondition"] == "ok" and s["min_output_margin"] >= -1e-10
    elif num == 8:
        assert min(out["observed_orders"]) >= 1.0
        assert out["max_defect"][-1] < out["max_defect"][0]
        assert max(out["quadratic_rel_error"]) <= 0.02 and all(out["quadratic_positive"])
    elif num == 9:
        assert out["log_singular"]["class"] == "greens-rate"
        assert abs(out["log_singular"]["slope"] - 2) <= 0.05
        assert out["stereographic"]["class"] == "bounded-extendable"
        assert abs(out["scale_invariant_sup"] - 2) <= 1e-12
    elif num == 10:
        assert abs(out["unit_ball"] / (4 * math.pi / 3) - 1) <= 0.01
        assert out["log_singular_verdict"] == "diverging"
        assert abs(out["log_singular_rate"] - 3) <= 0.3
        assert abs(out["sphere"] / (2 * math.pi ** 2) - 1) <= 0.01
    elif num == 11:
        assert out["n3"] <= 1e-9 and out["n4"] <= 1e-9
    elif num == 12:
        assert out["flat_max_error"] <= 1e-8
        assert out["sphere_max_error"] <= 1e-6
        assert out["cross_check_max_error"] <= 1e-10
    elif num == 13:
        for c in out["cases"]:
            assert c["min_margin"] >= -1e-9
            assert c["boundary_max_abs"] <= 1e-9
            assert c["tensor_gap"] >= -1e-9


@pytest.mark.slow
@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, capsys):
    rep = run_criterion(num, PROFILE, SEED)
    err = None
    try:
        _check(num, rep)
        if num in RUNTIME:
            assert rep.runtime < RUNTIME[num], f"runtime {rep.runtime:.1f}s"
    except AssertionError as exc:
        err = exc
    line = format_line(num, rep)
    if err is not None:
        line = line.replace("[PASS]", "[FAIL]")
    with capsys.disabled():
        print("\n" + line)
    if err is not None:
        raise err
    assert rep.passed


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profile", choices=("fast", "full"), default="full")
    prof = Profile.named(ap.parse_args(argv).profile)
    failed = 0
    for num in sorted(CRITERIA):
        rep = run_criterion(num, prof, SEED)
        try:
            _check(num, rep)
            ok = rep.passed
        except AssertionError:
            ok = False
        failed += not ok
        line = format_line(num, rep)
        print(line if ok else line.replace("[PASS]", "[FAIL]"))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
