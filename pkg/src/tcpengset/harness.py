"""Model-versus-simulation experiments: load solving, comparison reports,
per-size statistics, sweeps and the data behind the result tables."""
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import InvalidParameters
from .model import evaluate, n_for_load
from .model.pipeline import buffer_rule, reference_rules
from .model.queueing import loss_rate
from .netsim import run_scenario
from .netsim.scenario import scenario_from_label

# size intervals used for the per-size tables, matching slow-start flights
TABLE1_INTERVALS = ((3, 6), (7, 14), (15, 30), (31, 62), (63, 128), (129, 256), (257, 512),
                    (513, 1024), (1025, 2048), (2049, 4096), (4097, math.inf))

DESK_PACKETS = 10**6
PAPER_PACKETS = 10**7
MIN_STATE_SAMPLES = 10

# acceptance tolerances, also reported by `--version` as a fingerprint
ACCEPTANCE = {
    "1_special_setting": {"RTT0_ms": [341.83, 0.01], "ON0_ms": [13319.32, 0.01], "h0_kbps": [120.05, 0.05],
                          "mn": [38, 9], "ON0_renorm_ms": [13313.54, 0.01], "W8_mn": [45, 4],
                          "W8_ON0_ms": [15526.35, 0.01], "W8_h0_kbps": [103.0, 0.05]},
    "2_table3": {"excused": ["F120-W44-sat6", "F120-W44-sat5"], "mn_only": ["F80-W44-sat5", "F80-W44-sat4"]},
    "3_knees": {"k": [[5.4, 17.2, 34.1, 57.8, 132.3, 200.0], 0.05], "F_H": [[33, 52, 89], 1.0]},
    "4_theory": {"h_kbps": [[547.8, 344.6, 219.5, 154.9], 0.1], "ON_ms": [929.6, 0.5],
                 "L_B200_pct": [[0.03, 4.91, 22.0, 38.3], 0.1],
                 "L_Bsweep_pct": [[78.7, 69.8, 61.9, 48.7, 38.3, 23.7, 9.1, 2.7], 0.1]},
    "5_buffer_rule": {"10M": [202, 2], "50M": [417, 4]},
    "6_queue_mean": {"W44": [21.7, 0.05], "W12": [3.3, 0.05]},
    "7_rto": {"multipliers": [[3.0, 1.113, 1.006], 0.001]},
    "8_oracle": {"tol": 1e-10},
    "9_lossless": {"tol_ns": 0},
    "10_saturated": {"Q": 5},
    "11_spurious": {"W44_F54": 54, "W44_F106": 90, "W12": None},
    "12_sweep": {"h_rel": 0.08, "h_rel_overload": 0.04, "util_abs": 0.03},
    "13_table6": {"N82_h_kbps": [563.1, 0.03], "N82_L_max_pct": 0.01, "N134_h_kbps": [154.7, 0.02],
                  "N134_L_pct": [2.55, 0.5]},
    "14_occupancy": {"rel": 0.15, "min_P": 1e-3},
    "15_loss_structure": {"seq2_over_seq1": 2.0, "pct_FR_per_TD": 90.0, "L_model_exceeds_above": 0.01},
    "16_h_order": {"bd_offset": "P/C1", "min_count": 10},
}


def acceptance_hash():
    blob = json.dumps(ACCEPTANCE, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def percent_error(model, measured):
    """100*(model - measured)/measured; positive when the model is larger."""
    if measured == 0 or measured is None or (isinstance(measured, float) and math.isnan(measured)):
        return float("nan")
    return 100.0 * (model - measured) / measured


def model_for(sc, B=None):
    """Model evaluation matching a scenario (mean size, path, window, N, buffer)."""
    F = sc.F
    if F != int(F):
        raise InvalidParameters(f"the model needs an integer mean size, got {F}")
    return evaluate(sc.path, sc.W_R, int(F), sc.OFF, N=sc.N, B=sc.B if B is None else B)


def solve_n_for_load(sc, rho0_target):
    """Smallest N whose open-loop load reaches rho0_target (N in `sc` is ignored)."""
    return n_for_load(sc.path, sc.W_R, int(sc.F), sc.OFF, rho0_target)


def capacity_sharing(metrics, min_samples=MIN_STATE_SAMPLES):
    """Per state j: j * (P*F_j/ON_j) / C from connections that started in state j."""
    m = metrics
    if not m.completed:
        return []
    j = m.conn["bd_state"]
    bits = m.sizes * m.bits_per_packet
    dur = m.durations
    C = m.scenario.path.C
    rows = []
    for state in np.unique(j):
        sel = j == state
        if sel.sum() < min_samples:
            continue
        h_j = bits[sel].mean() / dur[sel].mean()
        rows.append({"j": int(state), "samples": int(sel.sum()), "h_j": float(h_j),
                     "share": float(state * h_j / C)})
    return rows


def model_capacity_sharing(sol):
    """Model counterpart: j*min(h0, C/j)/C."""
    out = []
    for j in range(1, sol.N + 1):
        h_j = sol.h0 if j <= sol.s else sol.C / j
        out.append({"j": j, "share": j * h_j / sol.C})
    return out


@dataclass
class ComparisonReport:
    scenario: str
    model: dict
    measured: dict
    errors: dict
    occupancy: list = field(default_factory=list)
    sharing: list = field(default_factory=list)
    queue: list = field(default_factory=list)

    def to_dict(self):
        return {"scenario": self.scenario, "model": self.model, "measured": self.measured,
                "errors": self.errors, "occupancy": self.occupancy, "sharing": self.sharing,
                "queue": self.queue}


def _same_setting(res, sc):
    p, q = res.path, sc.path
    return (res.W_R == sc.W_R and res.F == sc.F and res.OFF == sc.OFF and res.sol.N == sc.N
            and (p.C1, p.C2, p.C3, p.P, p.a) == (q.C1, q.C2, q.C3, q.P, q.a)
            and abs(p.RTT0 - q.RTT0) < 1e-12)


def compare(res, metrics=None):
    """Model against measurement; with no measurement only the model side is filled."""
    sol = res.sol
    model = {"h": sol.h, "h1": sol.h1, "h2": sol.h2, "ON": sol.ON, "rho": sol.rho, "rho0": sol.rho0,
             "Q": res.queue.Q, "eta": res.queue.eta, "L": res.L, "RTT": res.queue.RTT,
             "avg_active": sol.avg_active}
    if metrics is None or metrics.completed == 0:
        name = metrics.scenario.name() if metrics is not None else ""
        return ComparisonReport(name, model, {}, {})
    sc = metrics.scenario
    if not _same_setting(res, sc):
        raise InvalidParameters("model and simulation were run for different settings")
    qd = metrics.queue_distributions()
    meas = {"h": metrics.h_meas, "h_per_source": metrics.h_per_source, "h2": metrics.h2,
            "ON": metrics.ON_meas, "rho": metrics.rho_meas, "L": metrics.L_meas,
            "Q": qd["mean_Q"], "Q_seen": qd["mean_Q_seen"], "avg_active": metrics.avg_active,
            "RTT": metrics.mean_rtt}
    errs = {"h": percent_error(sol.h, meas["h"]), "ON": percent_error(sol.ON, meas["ON"]),
            "rho": percent_error(sol.rho, meas["rho"])}
    if res.L is not None:
        errs["L"] = percent_error(res.L, meas["L"])
    occ = metrics.bd_occupancy()
    occupancy = [{"j": j, "model": float(sol.probs[j]), "measured": float(occ[j]) if j < occ.size else 0.0}
                 for j in range(sol.N + 1)]
    model_share = {r["j"]: r["share"] for r in model_capacity_sharing(sol)}
    sharing = [dict(r, model=model_share.get(r["j"])) for r in capacity_sharing(metrics)]
    ta, ar = qd["time_avg_survival"], qd["arrival_seen_survival"]
    queue = [{"x": x, "model": res.queue.survival(x),
              "time_avg": float(ta[x]) if x < ta.size else 0.0,
              "arrival": float(ar[x]) if x < ar.size else 0.0}
             for x in range(max(ta.size, ar.size))]
    return ComparisonReport(sc.name(), model, meas, errs, occupancy, sharing, queue)


def size_interval_stats(metrics, intervals=TABLE1_INTERVALS):
    m = metrics
    if not m.completed:
        return []
    F = m.sizes
    dur = m.durations
    bits = F * m.bits_per_packet
    c = m.conn
    rows = []
    for lo, hi in intervals:
        sel = (F >= lo) & (F <= hi)
        n = int(sel.sum())
        if n == 0:
            continue
        drops = float(c["drops"][sel].sum())
        seen = float(c["packets_seen"][sel].sum())
        rows.append({
            "interval": f"{lo}-{hi}" if not math.isinf(hi) else f">{lo - 1}",
            "count": n,
            "prop_pct": 100.0 * n / m.completed,
            "mean_size": float(F[sel].mean()),
            "h": float(bits[sel].sum() / dur[sel].sum()),
            "h2": float((bits[sel] / dur[sel]).mean()),
            "mean_Q_seen": float(c["qseen_sum"][sel].sum() / seen) if seen else 0.0,
            "pct_TO_per_drop": 100.0 * float(c["tos"][sel].sum()) / drops if drops else 0.0,
            "pct_rtx_FR_per_drop": 100.0 * float(c["fr_retransmissions"][sel].sum()) / drops if drops else 0.0,
            "pct_TO_time": 100.0 * float(c["to_time_ns"][sel].sum()) / float(c["duration_ns"][sel].sum()),
        })
    return rows


@dataclass
class SweepSpec:
    base: object
    axis: str
    values: list
    replications: int = 3
    packets: int = DESK_PACKETS
    simulate: bool = True
    workers: int = 1


def _point_scenarios(spec):
    out = []
    for v in spec.values:
        if spec.axis == "rho0":
            sc = spec.base.with_(N=solve_n_for_load(spec.base, v))
        else:
            sc = spec.base.with_(**{spec.axis: v})
        out.append((v, sc))
    return out


def _run_one(args):
    sc, packets = args
    m = run_scenario(sc, packets=packets)
    return m


def run_sweep(spec):
    """One record per sweep value: the model, and measured means over replications."""
    points = _point_scenarios(spec)
    jobs = []
    for v, sc in points:
        for r in range(spec.replications if spec.simulate else 0):
            jobs.append((sc.with_(seed=sc.seed + r), spec.packets))
    if spec.workers > 1 and jobs:
        with ProcessPoolExecutor(spec.workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    out = []
    it = iter(results)
    for v, sc in points:
        res = model_for(sc)
        reps = [next(it) for _ in range(spec.replications)] if spec.simulate else []
        rec = {"value": v, "scenario": sc.name(), "N": sc.N, "rho0": res.sol.rho0, "model_h": res.sol.h,
               "model_ON": res.sol.ON, "model_rho": res.sol.rho, "model_L": res.L}
        if reps:
            reports = [compare(res, m) for m in reps]
            for key in ("h", "h2", "ON", "rho", "L", "Q"):
                rec[f"meas_{key}"] = float(np.mean([r.measured[key] for r in reports]))
            rec["err_h_pct"] = percent_error(res.sol.h, rec["meas_h"])
            rec["err_rho_pct"] = percent_error(res.sol.rho, rec["meas_rho"])
        out.append(rec)
    return out


# table data ------------------------------------------------------------------

TABLE6_LABEL = "100M10M2M-R50-W44-B200-F12-E"
TABLE6_N = (82, 98, 115, 134)
TABLE10_B = (50, 75, 100, 150, 200, 300, 500, 750)


def table5(P=1500):
    rows = []
    for C in (2e6, 10e6, 50e6):
        refs = reference_rules(C, P)
        row = {"C_Mbps": C / 1e6, **refs}
        if C >= 10e6:
            br = buffer_rule(C)
            row.update({"engset_raw": br.raw, "engset_rule": br.recommended,
                        "engset_delay_ms": 1000 * br.recommended * P * 8 / C})
        rows.append(row)
    return rows


def table6(simulate=False, packets=DESK_PACKETS, seed=1):
    rows = []
    for N in TABLE6_N:
        sc = scenario_from_label(f"{TABLE6_LABEL}-N{N}", seed=seed)
        res = model_for(sc)
        row = {"N": N, "rho0_pct": 100 * res.sol.rho0, "theory_h_kbps": res.sol.h / 1000,
               "theory_L_pct": 100 * res.L, "theory_ON_ms": 1000 * res.sol.ON}
        if simulate:
            m = run_scenario(sc, packets=packets)
            row.update({"meas_h_kbps": m.h_meas / 1000, "meas_L_pct": 100 * m.L_meas,
                        "err_h_pct": percent_error(res.sol.h, m.h_meas), "meas_rho_pct": 100 * m.rho_meas})
        rows.append(row)
    return rows


def table10(simulate=False, packets=DESK_PACKETS, seed=1, dists=("EE7", "E")):
    base = scenario_from_label("100M10M2M-R50-W44-F12-E-N134", seed=seed)
    res = model_for(base)
    rows = []
    theory = {"dist": "theory"}
    for B in TABLE10_B:
        theory[f"B{B}_L_pct"] = 100 * loss_rate(res.sol.rho, res.queue.eta, B)
    theory["h_kbps"] = res.sol.h / 1000
    theory["ON_ms"] = 1000 * res.sol.ON
    rows.append(theory)
    if simulate:
        for d in dists:
            sc = scenario_from_label(f"100M10M2M-R50-W44-F12-{d}-N134", seed=seed)
            row = {"dist": d}
            for B in TABLE10_B:
                m = run_scenario(sc.with_(B=B), packets=packets)
                row[f"B{B}_L_pct"] = 100 * m.L_meas
                row[f"B{B}_h_kbps"] = m.h_meas / 1000
                row[f"B{B}_ON_ms"] = 1000 * m.ON_meas
            rows.append(row)
    return rows


def fig8_sweep(label="100M10M1G-R50-W44-F12-E-N1", targets=(0.4, 0.6, 0.8, 1.0, 1.2, 1.4),
               replications=1, packets=DESK_PACKETS, simulate=True, workers=1):
    base = scenario_from_label(label)
    spec = SweepSpec(base, "rho0", list(targets), replications, packets, simulate, workers)
    return run_sweep(spec)


TABLES = {
    "table5": table5,
    "table6": table6,
    "table10": table10,
    "fig8": fig8_sweep,
}
