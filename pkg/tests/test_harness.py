import json
import math

import numpy as np
import pytest
from scipy.stats import binom

from tcpengset import acceptance
from tcpengset._validation import InvalidParameters
from tcpengset.harness import (SweepSpec, capacity_sharing, compare, model_for, percent_error, run_sweep,
                               size_interval_stats, solve_n_for_load, table5, table6, table10)
from tcpengset.netsim import run_scenario, scenario_from_label

T6 = "100M10M2M-R50-W44-B200-F12-E"


@pytest.fixture(scope="module")
def independent():
    # N <= s: sources never share the bottleneck, a plain binomial system
    sc = scenario_from_label("100M10M2M-R50-W44-F12-N10")
    return sc, run_scenario(sc, packets=2 * 10**5)


@pytest.fixture(scope="module")
def skewed():
    sc = scenario_from_label("100M10M2M-R50-W44-B100-F12-EE7-N60")
    return run_scenario(sc, packets=2 * 10**5)


def test_percent_error_sign():
    assert percent_error(110, 100) == pytest.approx(10.0)
    assert percent_error(90, 100) == pytest.approx(-10.0)
    assert math.isnan(percent_error(1, 0))


@pytest.mark.parametrize("target,N", [(1.0, 82), (1.635, 134)])
def test_load_target_gives_n(target, N):
    sc = scenario_from_label(f"{T6}-N1")
    assert solve_n_for_load(sc, target) == N
    assert model_for(sc.with_(N=N)).sol.rho0 >= target
    assert model_for(sc.with_(N=N - 1)).sol.rho0 < target


def test_per_source_target_is_one_source():
    sc = scenario_from_label(f"{T6}-N1")
    rho1 = model_for(sc).sol.rho0
    assert solve_n_for_load(sc, rho1) == 1


def test_compare_without_simulation_is_model_only():
    res = model_for(scenario_from_label(f"{T6}-N82"))
    rep = compare(res)
    assert rep.measured == {} and rep.errors == {}
    assert rep.model["h"] == res.sol.h


def test_compare_refuses_mismatched_settings(independent):
    _, m = independent
    other = model_for(scenario_from_label("100M10M2M-R50-W12-F12-N10"))
    with pytest.raises(InvalidParameters):
        compare(other, m)


def test_independent_regime_matches_binomial(independent):
    sc, m = independent
    res = model_for(sc)
    assert sc.N <= res.sol.s
    assert m.L_meas == 0.0
    # model collapses to independent sources
    a = res.sol.ON0 / (res.sol.ON0 + sc.OFF)
    oracle = binom.pmf(np.arange(sc.N + 1), sc.N, a)
    assert np.allclose(res.sol.probs, oracle, atol=1e-12)
    # measured utilization within sampling error of the model
    sigma = res.sol.rho / math.sqrt(m.completed)
    assert abs(m.rho_meas - res.sol.rho) <= 4 * sigma
    occ = m.bd_occupancy()[:sc.N + 1]
    assert 0.5 * np.abs(occ - oracle).sum() < 0.01


def test_compare_report_fields(independent):
    sc, m = independent
    rep = compare(model_for(sc), m)
    assert set(rep.errors) >= {"h", "ON", "rho"}
    assert rep.errors["h"] == pytest.approx(percent_error(rep.model["h"], rep.measured["h"]))
    assert sum(r["measured"] for r in rep.occupancy) == pytest.approx(1.0)
    assert all(r["samples"] >= 10 for r in rep.sharing)
    assert json.loads(json.dumps(rep.to_dict(), default=float))["scenario"] == sc.name()


def test_fixed_size_intervals_have_equal_rates(independent):
    _, m = independent
    rows = size_interval_stats(m)
    assert len(rows) == 1 and rows[0]["interval"] == "7-14"
    assert rows[0]["h2"] == pytest.approx(rows[0]["h"], rel=1e-3)
    assert rows[0]["prop_pct"] == pytest.approx(100.0)


def test_skewed_sizes_h2_at_least_h_per_interval(skewed):
    rows = size_interval_stats(skewed)
    assert sum(r["prop_pct"] for r in rows) == pytest.approx(100.0)
    assert all(r["count"] > 0 for r in rows)
    for r in rows:
        if r["count"] >= 10:
            assert r["h2"] >= r["h"], r


def test_capacity_sharing_sample_threshold(skewed):
    rows = capacity_sharing(skewed, min_samples=50)
    assert rows and all(r["samples"] >= 50 for r in rows)
    assert len(capacity_sharing(skewed, min_samples=10**9)) == 0


def test_sweep_without_simulation_has_model_columns():
    spec = SweepSpec(scenario_from_label(f"{T6}-N1"), "rho0", [0.4, 1.0, 1.4], simulate=False)
    rows = run_sweep(spec)
    assert [r["N"] for r in rows] == sorted(r["N"] for r in rows)
    assert all("model_h" in r and "meas_h" not in r for r in rows)
    assert rows[1]["N"] == 82


def test_model_report_is_reproducible():
    a = json.dumps(run_sweep(SweepSpec(scenario_from_label(f"{T6}-N1"), "N", [82, 134], simulate=False)))
    b = json.dumps(run_sweep(SweepSpec(scenario_from_label(f"{T6}-N1"), "N", [82, 134], simulate=False)))
    assert a == b


def test_simulation_report_is_reproducible():
    sc = scenario_from_label("100M10M2M-R50-W44-B50-F12-E-N100-Nc300")
    a = run_scenario(sc).summary()
    b = run_scenario(sc).summary()
    assert json.dumps(a, default=float) == json.dumps(b, default=float)


def test_table5_rows():
    rows = table5()
    assert [r["C_Mbps"] for r in rows] == [2, 10, 50]
    assert "engset_rule" not in rows[0]
    for r in rows[1:]:
        assert r["engset_rule"] % 10 == 0 and r["engset_rule"] >= r["engset_raw"] - 5


def test_table6_theory_rows():
    rows = table6()
    assert [r["N"] for r in rows] == [82, 98, 115, 134]
    assert [round(r["rho0_pct"], 1) for r in rows] == [100.1, 119.6, 140.3, 163.5]
    assert all(a["theory_h_kbps"] > b["theory_h_kbps"] for a, b in zip(rows, rows[1:]))


def test_table10_theory_loss_falls_with_buffer():
    theory = table10()[0]
    losses = [theory[f"B{B}_L_pct"] for B in (50, 75, 100, 150, 200, 300, 500, 750)]
    assert all(x > y for x, y in zip(losses, losses[1:]))


@pytest.mark.slow
def test_accuracy_improves_with_load():
    # mean |error of h| over the two settings, lowest vs highest load bucket
    low, high = [], []
    for label in acceptance.SWEEP_LABELS:
        rows = acceptance.load_sweep(label)
        low.append(abs(rows[0]["err_h_pct"]))
        high.append(abs(rows[-1]["err_h_pct"]))
    assert np.mean(high) < np.mean(low)
