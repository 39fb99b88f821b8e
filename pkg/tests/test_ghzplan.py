import csv
import json
import math

import numpy as np
import pytest

from rydgate.ghzplan import (
    GrowthStep, asymptotic_ratio, combine, discrepancy_report, mean_ratio, plan_errors,
    plan_steps, shell, write_plan_csv, write_plan_json,
)

V_NN = 2.7
TAU = 0.44


def brute_ratio(s):
    """Independent enumeration: mean over shell-s sites of (sum over shell s-1 of d^-3)^-2."""
    def ring(k):
        return [(x, y) for x in range(-k, k + 1) for y in range(-k, k + 1) if abs(x) + abs(y) == k]
    ctrl = np.array(ring(s - 1), dtype=float)
    vals = []
    for t in ring(s):
        d = np.linalg.norm(ctrl - np.array(t, dtype=float), axis=1)
        vals.append(np.sum(d ** -3) ** -2)
    return float(np.mean(vals))


def test_plan_geometry_examples():
    assert [st.size for st in plan_steps(1)] == [5]
    steps = plan_steps(3)
    assert [st.size for st in steps] == [5, 13, 25]
    assert [(st.n_c, st.n_t) for st in steps] == [(1, 4), (4, 8), (8, 12)]
    assert steps[-1].size == 25
    assert plan_steps(6)[-1].size == 85 == 2 * 36 + 2 * 6 + 1
    with pytest.raises(ValueError):
        plan_steps(0)


def test_geometry_invariants():
    steps = plan_steps(8)
    ghz = {(0, 0)}
    for prev, cur in zip([None] + steps[:-1], steps):
        if prev is not None:
            assert set(cur.controls) == set(prev.targets)
        assert not set(cur.targets) & ghz
        ghz |= set(cur.targets)
        for sites in (cur.controls, cur.targets):
            s = set(sites)
            for x, y in s:
                for img in ((-y, x), (x, -y), (-x, y), (y, x)):
                    assert img in s


def test_mean_ratio_examples():
    steps = plan_steps(3)
    assert mean_ratio(steps[0]) == 1.0
    assert mean_ratio(steps[1]) == pytest.approx(0.443, abs=5e-3)
    for s, st in enumerate(steps, start=1):
        assert mean_ratio(st) == pytest.approx(brute_ratio(s), rel=1e-12)


def test_step_two_components():
    st = plan_steps(2)[1]
    r = [1 / (1 + 2 * 5 ** -1.5 + 1 / 27) ** 2, 1 / (2 + 2 * 5 ** -1.5) ** 2]
    assert r[0] == pytest.approx(0.676, abs=1e-3)
    assert r[1] == pytest.approx(0.21, abs=1e-2)
    assert mean_ratio(st) == pytest.approx(np.mean(r), rel=1e-12)


def test_ratio_strictly_decreasing():
    vals = [mean_ratio(st) for st in plan_steps(12)]
    assert np.all(np.diff(vals) < 0)


def test_asymptotic_limit():
    ext = asymptotic_ratio(40)
    assert ext.converged
    assert ext.limit == pytest.approx(0.196, abs=5e-3)
    assert np.all(np.diff(ext.values) < 0)
    assert np.all(ext.values >= ext.limit)
    with pytest.raises(ValueError):
        asymptotic_ratio(5)


def test_plan_error_examples():
    plan = plan_errors(3, V_NN, TAU)
    assert plan.per_step_eps[0] == pytest.approx(0.0196, abs=5e-5)
    assert abs(plan.cumulative_eps[1] - 0.045) <= 0.015
    assert abs(plan.cumulative_eps[2] - 0.078) <= 0.025
    prod = plan_errors(3, V_NN, TAU, "product")
    assert abs(prod.cumulative_eps[1] - 0.045) <= 0.015
    assert abs(prod.cumulative_eps[2] - 0.078) <= 0.025


def test_cumulative_consistency():
    plan = plan_errors(6, V_NN, TAU)
    cum, per = plan.cumulative_eps, plan.per_step_eps
    assert np.all(np.diff(cum) >= 0)
    assert cum[0] == per[0]
    for s in range(1, len(cum)):
        assert cum[s] - cum[s - 1] == pytest.approx(per[s], rel=1e-12)
    prod = combine(per, "product")
    assert np.all(np.diff(prod) >= 0) and all(p <= c for p, c in zip(prod, cum))
    with pytest.raises(ValueError):
        combine(per, "max")


def test_infinite_lifetime():
    plan = plan_errors(3, V_NN, math.inf)
    assert all(e == 0 for e in plan.per_step_eps)


def test_discrepancy_report():
    plan = plan_errors(3, V_NN, TAU)
    rep = discrepancy_report(plan, [0.02, 0.045, 0.078])
    assert set(rep) >= {"sum", "product", "sum_minus_product", "sum_minus_reference",
                        "product_minus_reference"}
    assert rep["sum"] == plan.cumulative_eps
    assert rep["sum_minus_reference"][2] == pytest.approx(plan.cumulative_eps[2] - 0.078)


def test_plan_outputs(tmp_path):
    plan = plan_errors(3, V_NN, TAU)
    write_plan_csv(plan, tmp_path / "plan.csv")
    rows = list(csv.reader(open(tmp_path / "plan.csv")))
    assert rows[0] == ["step", "n_c", "n_t", "mean_ratio", "omega_opt_MHz", "eps", "cumulative"]
    assert len(rows) == 4 and rows[2][:3] == ["2", "4", "8"]
    write_plan_json(plan, tmp_path / "plan.json")
    doc = json.load(open(tmp_path / "plan.json"))
    assert doc["combination"] == "sum"
    assert len(doc["steps"]) == 3


def test_shell_and_step_basics():
    assert shell(0) == [(0, 0)]
    assert len(shell(4)) == 16
    st = GrowthStep(1, ((0, 0),), tuple(shell(1)))
    assert st.mean_ratio == 1.0
