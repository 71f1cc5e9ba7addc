"""Acceptance criteria 1-11 at full resolution, one test per criterion.

Each test prints and records a single pass/fail line; the lines are repeated in
the terminal summary of the pytest run.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from cknstab import acceptance
from cknstab.bubbles import interaction
from cknstab.grid import experiment_grid
from cknstab.params import make_params
from conftest import ACCEPTANCE_LINES

FULL = acceptance.Settings(quick=False)


def record(result, limit_seconds):
    ok = result.passed and result.seconds < limit_seconds
    line = f"criterion {result.number:2d} [{'PASS' if ok else 'FAIL'}] {result.name}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def test_criterion_01_best_constant():
    res = acceptance.check_best_constant(FULL)
    assert record(res, 1.0), res.measured
    assert res.measured["best_const_inv"] == pytest.approx(5.4779, abs=1e-4)
    assert res.measured["rel_err"] < 1e-8


def test_criterion_02_isometry():
    res = acceptance.check_isometry(FULL)
    assert record(res, 5.0), res.measured
    assert len(res.measured) == 5
    for m in res.measured.values():
        assert m["rel_isometry"] < 1e-8 and m["rel_deficit"] < 1e-8


def test_criterion_03_spectrum():
    res = acceptance.check_spectrum(FULL)
    assert record(res, 30.0), res.measured
    for case in res.measured.values():
        assert case["mode0_negative_count"] == 1
        for mode in ("mode0", "mode1", "mode2"):
            assert case[mode]["max_abs_err"] < 1e-6
            assert all(abs(o - 2.0) <= 0.1 for o in case[mode]["orders"])


def test_criterion_04_felli_schneider():
    res = acceptance.check_felli_schneider(FULL)
    assert record(res, 60.0), res.measured
    assert set(res.measured) == {"(3,-1.0)", "(4,-0.5)", "(5,-2.0)"}


def test_criterion_05_interaction():
    res = acceptance.check_interaction(FULL)
    assert record(res, 10.0), res.measured
    for m in res.measured.values():
        assert m["slope_rel_err"] < 0.02 and m["prefactor_rel_diff"] < 0.01


def test_criterion_06_reduction_scaling():
    res = acceptance.check_reduction(FULL)
    assert record(res, 300.0), res.measured
    assert abs(res.measured["p=5"]["exponent"] - 1.0) <= 0.05
    assert abs(res.measured["p=5/3"]["exponent"] - 5.0 / 6.0) <= 0.05
    assert res.measured["p=2"]["log_statistic_ratio"] < 3.0


def test_criterion_07_residual_scale():
    res = acceptance.check_residual_scale(FULL)
    assert record(res, 300.0), res.measured


def test_criterion_08_one_bubble():
    res = acceptance.check_one_bubble(FULL)
    assert record(res, 60.0), res.measured
    for m in res.measured.values():
        assert abs(m["exponent"] - 1.0) <= 0.03 and m["ratio"] < 3.0


def test_criterion_09_multi_bubble():
    res = acceptance.check_multi_bubble(FULL)
    assert record(res, 600.0), res.measured
    assert abs(res.measured["p=5"]["exponent"] - 1.0) <= 0.05
    assert abs(res.measured["p=5/3"]["exponent"] - 5.0 / 6.0) <= 0.05


def test_criterion_10_deficit_law():
    res = acceptance.check_deficit_law(FULL)
    assert record(res, 120.0), res.measured
    m = res.measured
    assert m["min_ratio"] > 0 and 0.5 <= m["min_ratio"] / m["min_ratio_doubled"] <= 2.0
    assert m["oracle_rel_err"] < 0.05


def _verify_quick(out_dir):
    env = dict(os.environ, CKN_OUTPUT_DIR=str(out_dir))
    return subprocess.run([sys.executable, "-m", "cknstab", "verify-all", "--quick"], env=env,
                          capture_output=True, check=False)


def test_criterion_11_determinism(tmp_path):
    start = time.perf_counter()
    first = _verify_quick(tmp_path / "a")
    second = _verify_quick(tmp_path / "b")
    elapsed = time.perf_counter() - start
    a = (tmp_path / "a" / "verify-all.json").read_bytes()
    b = (tmp_path / "b" / "verify-all.json").read_bytes()
    # The printed table is identical too once the differing output directories are blanked out.
    tables = [r.stdout.decode().replace(str(tmp_path / d), "") for r, d in ((first, "a"), (second, "b"))]
    ok = first.returncode == 0 and second.returncode == 0 and a == b and tables[0] == tables[1]
    line = f"criterion 11 [{'PASS' if ok and elapsed < 180 else 'FAIL'}] verify-all --quick is byte-identical"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, first.stderr.decode() + second.stderr.decode()
    assert elapsed < 180.0


# The interaction window [10/c, 20/c] is pre-asymptotic when p is close to 1:
# the next correction decays only like exp(-(p - 1) c s).

def _interaction_slope(params, lo, hi, points=11):
    c = params.c
    grid = experiment_grid(params, (0.0, hi / c), h=0.01)
    s = np.linspace(lo / c, hi / c, points)
    vals = [interaction(params, grid, 0.0, x) for x in s]
    slope = np.polyfit(s, np.log(vals), 1)[0]
    pref = [interaction(params, grid, 0.0, x / c) * math.exp(x) for x in ((lo + hi) / 2, hi)]
    return slope / -c, abs(pref[0] - pref[1]) / pref[1]


@pytest.mark.xfail(strict=True, reason="window [10/c, 20/c] is pre-asymptotic for p = 17/13")
def test_interaction_near_window_for_p_close_to_one():
    ratio, drift = _interaction_slope(make_params(3, -1, -0.2), 10.0, 20.0)
    assert abs(ratio - 1.0) < 0.02 and drift < 0.01


def test_interaction_far_window_for_p_close_to_one():
    ratio, _ = _interaction_slope(make_params(3, -1, -0.2), 40.0, 60.0)
    assert abs(ratio - 1.0) < 0.02
