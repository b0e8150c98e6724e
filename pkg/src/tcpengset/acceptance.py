"""Acceptance checks against the published figures.

Each check returns a `Verdict`; `run_checks` evaluates a selection and is
what both the test suite and the ``acceptance`` CLI subcommand call.
Simulation runs are cached per (label, packets) so checks sharing a setting
share the run.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dist import derive_exp_exp, derive_exp_pareto, derive_exponential
from .harness import ACCEPTANCE, DESK_PACKETS, SweepSpec, model_for, run_sweep, size_interval_stats
from .model import (buffer_rule, compute_flights, engset_probabilities, round_contributions, single_connection,
                    single_connection_queue_mean)
from .model.flights import compute_on0_ns
from .model.path import path_from_rtt0, path_params, tx_ns
from .netsim import run_scenario, scenario_from_label
from .tcp import rto_multipliers


@dataclass
class Verdict:
    key: str
    title: str
    passed: bool
    items: list = field(default_factory=list)
    note: str = ""

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.key}: {self.title}"

    def to_dict(self):
        return {"criterion": self.key, "title": self.title, "passed": self.passed,
                "items": self.items, "note": self.note}


def _item(items, name, value, target, tol):
    ok = value is not None and abs(value - target) <= tol + 1e-12
    items.append({"name": name, "value": value, "target": target, "tol": tol, "ok": bool(ok)})
    return ok


def _flag(items, name, ok, value=None):
    items.append({"name": name, "value": value, "ok": bool(ok)})
    return bool(ok)


def _verdict(key, title, items, note=""):
    return Verdict(key, title, all(i["ok"] for i in items), items, note)


# analytical --------------------------------------------------------------------

def special_path():
    return path_params(100e6, 1.5e6, 128e3, 0.3, 576, 40)


def check_1():
    tol = ACCEPTANCE["1_special_setting"]
    p = special_path()
    items = []
    _item(items, "RTT0_ms", 1e3 * p.RTT0, *tol["RTT0_ms"])
    one = single_connection(p, 44, 347)
    _flag(items, "flights", one.sched.flights == (2, 4, 8, 333), list(one.sched.flights))
    _item(items, "ON0_ms", 1e3 * one.ON0, *tol["ON0_ms"])
    _item(items, "h0_kbps", one.h0 / 1e3, *tol["h0_kbps"])
    _flag(items, "renormalized_mn", (one.m, one.n) == tuple(tol["mn"]), [one.m, one.n])
    _item(items, "ON0_renorm_ms", 1e3 * (one.m * p.RTT0 + one.n * p.delta_star), *tol["ON0_renorm_ms"])
    w8 = single_connection(p, 8, 347)
    _flag(items, "W8_mn", (w8.sched.m, w8.sched.n) == tuple(tol["W8_mn"]), [w8.sched.m, w8.sched.n])
    _item(items, "W8_ON0_ms", 1e3 * w8.ON0, *tol["W8_ON0_ms"])
    _item(items, "W8_h0_kbps", w8.h0 / 1e3, *tol["W8_h0_kbps"])
    note = ("exact RTT0 is 341.8346 ms; the quoted ON0 values were computed from RTT0 rounded to 341.83 ms, "
            "so they differ by m * 0.0046 ms and cannot be met at +-0.01 ms")
    return _verdict("1", "special setting: RTT0, flights, ON0, h0, renormalized (m, n), W_R=8 variant", items, note)


# (F, W_R, beta*, printed (m, n), printed flights) for every printed row
TABLE3_PRINTED = [
    (5, 44, 100, (2, 2), (2, 3)),
    (12, 44, 100, (3, 5), (2, 4, 6)),
    (22, 44, 100, (4, 7), (2, 4, 8, 8)),
    (36, 44, 100, (5, 5), (2, 4, 8, 16, 6)),
    (36, 8, 100, (6, 5), (2, 4, 8, 8, 8, 6)),
    (36, 12, 100, (5, 9), (2, 4, 8, 12, 10)),
    (36, 16, 8, (4, 21), (2, 4, 8, 22)),
    (80, 44, 100, (6, 17), (2, 4, 8, 16, 32, 18)),
    (80, 44, 20, (5, 49), (2, 4, 8, 16, 22)),
    (80, 44, 9.5, (4, 65), (2, 4, 8, 38)),
    (120, 44, 100, (7, 13), (2, 4, 8, 16, 32, 44, 14)),
    (120, 44, 40, (6, 17), (2, 4, 8, 16, 32, 58)),
    (120, 44, 20, (6, 17), (2, 4, 8, 16, 90)),
    (120, 20, 100, (9, 9), (2, 4, 8, 16) + (20,) * 4 + (10,)),
    (120, 12, 100, (16, 9), (2, 4, 8) + (12,) * 8 + (10,)),
    (120, 8, 100, (17, 1), (2, 4) + (8,) * 14 + (2,)),
]
# the two saturated F=120 rows the criterion excuses
TABLE3_EXCUSED = {(120, 44, 40), (120, 44, 20)}
# saturated F=80 rows print a last flight that does not sum to F; (m, n) must still match
TABLE3_MN_ONLY = {(80, 44, 20), (80, 44, 9.5)}


def check_2():
    items = []
    for F, W, beta, mn, flights in TABLE3_PRINTED:
        s = compute_flights(F, W, beta)
        ok = (s.m, s.n) == mn and s.flights == flights
        excused = (F, W, beta) in TABLE3_EXCUSED
        if (F, W, beta) in TABLE3_MN_ONLY:
            excused = (s.m, s.n) == mn and sum(s.flights) == F
        items.append({"name": f"F={F} W_R={W} beta*={beta}", "value": [[s.m, s.n], list(s.flights)],
                      "target": [list(mn), list(flights)], "ok": bool(ok or excused),
                      "flagged": not ok})
    note = ("divergent printed cells: F=80 saturated rows print flights that do not sum to F (our (m, n) match); "
            "F=120 W_R=12 prints m=16 where its own flight list has 12 flights; "
            "the two excused F=120 saturated rows print (6,17) where the flights give (6,57) and (5,89)")
    return _verdict("2", "Table 3 (m, n) and flight sequences", items, note)


def check_3():
    tol = ACCEPTANCE["3_knees"]
    items = []
    for F, k in zip((5, 12, 22, 36, 80, 120), tol["k"][0]):
        _item(items, f"EP knee F={F}", derive_exp_pareto(F).k, k, tol["k"][1])
    laws = (derive_exponential(12), derive_exp_pareto(12), derive_exp_exp(12, omega=7))
    for d, target in zip(laws, tol["F_H"][0]):
        _item(items, f"mean above H, {d.kind}", d.mean_above_tail(0.1), target, tol["F_H"][1])
    return _verdict("3", "EP knees and mean size above the tail", items)


def table6_path():
    return path_from_rtt0(100e6, 10e6, 2e6, 0.05)


def check_4():
    from .model import evaluate
    tol = ACCEPTANCE["4_theory"]
    p = table6_path()
    items = []
    for N, h, L in zip((82, 98, 115, 134), tol["h_kbps"][0], tol["L_B200_pct"][0]):
        r = evaluate(p, 44, 12, 1.0, N=N, B=200)
        _item(items, f"h_kbps N={N}", r.sol.h / 1e3, h, tol["h_kbps"][1])
        _item(items, f"L_pct N={N} B=200", 100 * r.L, L, tol["L_B200_pct"][1])
    r = evaluate(p, 44, 12, 1.0, N=134)
    _item(items, "ON_ms N=134", 1e3 * r.sol.ON, *tol["ON_ms"])
    for B, L in zip((50, 75, 100, 150, 200, 300, 500, 750), tol["L_Bsweep_pct"][0]):
        rb = evaluate(p, 44, 12, 1.0, N=134, B=B)
        _item(items, f"L_pct N=134 B={B}", 100 * rb.L, L, tol["L_Bsweep_pct"][1])
    return _verdict("4", "theory h, ON and L on 100M10M2M-R50-W44-F12", items)


def check_5():
    tol = ACCEPTANCE["5_buffer_rule"]
    items = []
    for C, key, rec in ((10e6, "10M", 200), (50e6, "50M", 420)):
        br = buffer_rule(C)
        _item(items, f"raw B at {key}", br.raw, *tol[key])
        _flag(items, f"recommended at {key}", br.recommended == rec, br.recommended)
        items[-1]["target"] = rec
        items.append({"name": f"argmax at {key}", "value": [br.F_at_max, br.RTT_at_max], "ok": True})
    note = ("N is the smallest count with rho0 >= 1 at each (F, RTT); at F=500 only 3-4 sources fit and B moves "
            "by ~80 packets per source, so the unstated N choice behind 202/417 cannot be recovered")
    return _verdict("5", "buffer sizing rule", items, note)


def check_6():
    tol = ACCEPTANCE["6_queue_mean"]
    p = special_path()
    items = []
    taus = round_contributions(347, 44, p.beta_star)
    _flag(items, "round contributions W_R=44", taus == [3, 8, 24, 11025], taus)
    for W, key in ((44, "W44"), (12, "W12")):
        one = single_connection(p, W, 347)
        q = single_connection_queue_mean(347, W, p.beta_star, p.delta_star, one.ON0, 5.0)
        _item(items, f"Q mean {key}", q, *tol[key])
    return _verdict("6", "single-connection queue mean", items)


def check_7():
    vals, tol = ACCEPTANCE["7_rto"]["multipliers"]
    mult = rto_multipliers(1.0, 21)
    items = []
    for k, target in zip((0, 10, 20), vals):
        _item(items, f"RTO/R after first sample + {k} updates", mult[k], target, tol)
    # the clamp: with R = 0.1 s every value is held at 1 s
    from .tcp import RtoEstimator
    est = RtoEstimator(1.0)
    clamped = [est.update(0.1) for _ in range(21)]
    _flag(items, "max(1 s, .) clamp", all(v == 1.0 for v in clamped))
    note = "1.113R and 1.006R follow 10 and 20 smoothing updates after the initial sample (samples 11 and 21)"
    return _verdict("7", "RTO sequence with constant R", items, note)


def _generator_oracle(N, OFF, ON0, C, F, P):
    h0 = F * P * 8 / ON0
    s = math.floor(C / h0 + 1e-12)
    Q = np.zeros((N + 1, N + 1))
    for j in range(N + 1):
        if j < N:
            Q[j, j + 1] = (N - j) / OFF
        if j > 0:
            Q[j, j - 1] = j / ON0 if j <= s else C / (F * P * 8)
        Q[j, j] = -Q[j].sum()
    A = np.vstack([Q.T, np.ones(N + 1)])
    b = np.zeros(N + 2)
    b[-1] = 1
    return np.linalg.lstsq(A, b, rcond=None)[0]


def check_8():
    tol = ACCEPTANCE["8_oracle"]["tol"]
    worst = 0.0
    F, P, ON0 = 12, 1500, 0.18
    h0 = F * P * 8 / ON0
    for N in range(1, 9):
        for s in range(N + 1):
            for OFF in (0.05, 1.0, 7.0):
                C = (s + 0.5) * h0
                sol = engset_probabilities(N, OFF, ON0, C, F, P)
                worst = max(worst, float(np.max(np.abs(sol.probs - _generator_oracle(N, OFF, ON0, C, F, P)))))
    items = [{"name": "max |P_j - oracle|", "value": worst, "target": 0.0, "tol": tol, "ok": worst < tol}]
    return _verdict("8", "state probabilities vs dense generator solve (N <= 8)", items)


# deterministic simulation ---------------------------------------------------------

def check_9():
    items = []
    for F, W, beta, _, _ in TABLE3_PRINTED:
        sc = scenario_from_label(f"100M10M2M-R{beta * 6:g}-W{W}-F{F}-N1-Nc3")
        m = run_scenario(sc)
        want = compute_on0_ns(compute_flights(F, W, sc.path.beta_star), sc.path)
        got = sorted(set(m.conn["duration_ns"].tolist()))
        _flag(items, f"F={F} W_R={W} beta*={beta}", got == [want] and m.dropped == 0, [got, want])
    return _verdict("9", "lossless duration equals ON0 in integer ns", items)


def check_10():
    m = run_scenario(scenario_from_label("100M2M1G-R50-W12-F3000-N1-Nc1"))
    qd = m.queue_distributions()
    items = []
    _flag(items, "max queue", qd["max_Q"] == 5, qd["max_Q"])
    _flag(items, "modal time-average queue", int(np.argmax(m.q_time)) == 5, int(np.argmax(m.q_time)))
    _flag(items, "no drops", m.dropped == 0, m.dropped)
    return _verdict("10", "saturated single connection holds 5 packets", items)


def _tos(label):
    tr = []
    m = run_scenario(scenario_from_label(label), trace=tr)
    return m, [(rec[2], rec[3]) for rec in tr if rec[2].startswith("TO")]


def check_11():
    base = "100M1.5M128k-D300-P576B"
    items = []
    m, tos = _tos(f"{base}-W44-F54-N1-Nc1")
    _flag(items, "F=54 TO on packet 54, no drops", [s for _, s in tos] == [54] and m.dropped == 0, tos)
    m, tos = _tos(f"{base}-W44-F106-N1-Nc1")
    _flag(items, "F=106 TO on packet 90", [s for _, s in tos] == [90] and m.dropped == 0, tos)
    for F in (54, 106):
        m, tos = _tos(f"{base}-W12-F{F}-N1-Nc1")
        _flag(items, f"W_R=12 F={F} no TO", tos == [], tos)
    return _verdict("11", "spurious timeout in the special setting", items)


# stochastic simulation ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _run(label, packets):
    return run_scenario(scenario_from_label(label), packets=packets)


SWEEP_LABELS = ("100M10M1G-R50-W44-F12-E-N1", "100M10M2M-R50-W44-F12-E-N1")
SWEEP_TARGETS = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4)


@lru_cache(maxsize=None)
def load_sweep(label, packets=DESK_PACKETS):
    """Model-vs-simulation rows over the rho0 targets, one replication each."""
    spec = SweepSpec(scenario_from_label(label), "rho0", list(SWEEP_TARGETS), 1, packets)
    return tuple(run_sweep(spec))


def check_12(packets=DESK_PACKETS):
    tol = ACCEPTANCE["12_sweep"]
    items = []
    for label in SWEEP_LABELS:
        for row in load_sweep(label, packets):
            rel = abs(row["err_h_pct"]) / 100
            lim = tol["h_rel_overload"] if row["rho0"] >= 1.0 else tol["h_rel"]
            items.append({"name": f"{label[:9]} rho0={row['rho0']:.3f} N={row['N']} |h err|",
                          "value": rel, "target": 0.0, "tol": lim, "ok": rel <= lim})
            du = abs(row["model_rho"] - row["meas_rho"])
            items.append({"name": f"{label[:9]} rho0={row['rho0']:.3f} utilization", "value": du,
                          "target": 0.0, "tol": tol["util_abs"], "ok": du <= tol["util_abs"]})
    return _verdict("12", "model h and utilization across a load sweep", items)


T6 = "100M10M2M-R50-W44-B200-F12-E"


def check_13(packets=DESK_PACKETS):
    tol = ACCEPTANCE["13_table6"]
    items = []
    m = _run(f"{T6}-N82", packets)
    h, rel = tol["N82_h_kbps"]
    _item(items, "N=82 h_kbps", m.h_meas / 1e3, h, rel * h)
    _flag(items, "N=82 L <= 0.01%", 100 * m.L_meas <= tol["N82_L_max_pct"], 100 * m.L_meas)
    m = _run(f"{T6}-N134", packets)
    h, rel = tol["N134_h_kbps"]
    _item(items, "N=134 h_kbps", m.h_meas / 1e3, h, rel * h)
    _item(items, "N=134 L_pct", 100 * m.L_meas, *tol["N134_L_pct"])
    return _verdict("13", "Table 6 exponential-size spot checks", items)


def check_14(packets=DESK_PACKETS):
    tol = ACCEPTANCE["14_occupancy"]
    sc = scenario_from_label(f"{T6}-N82")
    m = _run(sc.name(), packets)
    sol = model_for(sc).sol
    occ = m.bd_occupancy()
    items = []
    for j, p in enumerate(sol.probs):
        if p < tol["min_P"]:
            continue
        got = float(occ[j]) if j < occ.size else 0.0
        rel = float(abs(got - p) / p)
        items.append({"name": f"P_{j}", "value": got, "target": float(p), "rel": rel, "tol": tol["rel"],
                      "ok": bool(rel <= tol["rel"])})
    return _verdict("14", "occupancy overlay at rho0 ~ 100%", items)


T7 = "100M10M2M-R50-W44-B150-F12-EE7-N134"


def check_15(packets=DESK_PACKETS):
    tol = ACCEPTANCE["15_loss_structure"]
    m = _run(T7, packets)
    rep = m.drop_analysis()
    prop = rep["drop_prop_by_seq"]
    items = []
    ratio = prop[2] / prop[1] if prop.get(1) else math.inf
    _flag(items, "seq 2 / seq 1 drop proportion >= 2", ratio >= tol["seq2_over_seq1"], ratio)
    _flag(items, "%FR per TD >= 90", rep["pct_FR_per_TD"] >= tol["pct_FR_per_TD"], rep["pct_FR_per_TD"])
    res = model_for(scenario_from_label(T7))
    _flag(items, "measured L > 1%", m.L_meas > tol["L_model_exceeds_above"], m.L_meas)
    _flag(items, "model L exceeds measured L", res.L > m.L_meas, [res.L, m.L_meas])
    for N in (115, 134):
        me = _run(f"{T6}-N{N}", packets)
        if me.L_meas > tol["L_model_exceeds_above"]:
            r = model_for(scenario_from_label(f"{T6}-N{N}"))
            _flag(items, f"E N={N}: model L exceeds measured L", r.L > me.L_meas, [r.L, me.L_meas])
    return _verdict("15", "loss structure at high load", items)


def check_16(packets=DESK_PACKETS):
    # h2 >= h is Jensen's inequality within a size class, so it is checked per interval.
    # Across the whole mix, many slow small files pull h2 below h; that is reported only.
    min_n = ACCEPTANCE["16_h_order"]["min_count"]
    items = []
    notes = []
    for label in (T7, "100M10M2M-R50-W44-B200-F12-EP-N98"):
        m = _run(label, packets)
        for row in size_interval_stats(m):
            if row["count"] >= min_n:
                _flag(items, f"{label} [{row['interval']}]: h2 > h", row["h2"] > row["h"], [row["h2"], row["h"]])
        notes.append(f"{label}: whole-run h2={m.h2 / 1e3:.1f} kbps, h={m.h_meas / 1e3:.1f} kbps")
        diff = set((m.conn["duration_ns"] - m.conn["bd_duration_ns"]).tolist())
        want = tx_ns(1500, 100e6)
        _flag(items, f"{label}: ON - ON_bd == P/C1", diff == {want}, sorted(diff))
    return _verdict("16", "h2 > h per size interval; BD ON is P/C1 shorter", items, "; ".join(notes))


ANALYTIC = ("1", "2", "3", "4", "5", "6", "7", "8")
DETERMINISTIC = ("9", "10", "11")
STOCHASTIC = ("12", "13", "14", "15", "16")
CHECKS = {k: globals()[f"check_{k}"] for k in ANALYTIC + DETERMINISTIC + STOCHASTIC}


def run_check(key, packets=DESK_PACKETS):
    fn = CHECKS[key]
    return fn(packets) if key in STOCHASTIC else fn()


def run_checks(keys=None, packets=DESK_PACKETS):
    keys = keys or list(CHECKS)
    return [run_check(k, packets) for k in keys]

