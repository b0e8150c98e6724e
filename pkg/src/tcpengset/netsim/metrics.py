"""Measured statistics of a simulation run and the reports derived from them."""
import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..model.path import NS_PER_S
from ..tcp import TO_CATEGORIES

CONN_FIELDS = (
    "source", "F", "start_ns", "end_ns", "duration_ns", "bd_duration_ns", "bd_state", "sent",
    "retransmissions", "drops", "tos", "TOTO", "TDTO", "TObeg", "TOend", "TOther",
    "tds", "frs", "fr_retransmissions", "td_sent", "fr_new", "fr_exit_sent", "td_time_ns",
    "to_time_ns", "qseen_sum", "packets_seen", "rtt_sum_ns", "rtt_count",
)


@dataclass
class SimMetrics:
    scenario: object
    T_ns: int
    completed: int
    events: int
    conn: dict
    bd_time: np.ndarray
    q_time: np.ndarray
    q_seen: np.ndarray
    appearing: int
    dropped: int
    resident: int
    l2_busy_ns: int
    l3_sojourn_ns: int
    drops_by_seq: np.ndarray
    appear_by_seq: np.ndarray
    drops_ss: int
    drops_ca: int
    to_windows: dict = field(default_factory=dict)
    rtt_sum_ns: int = 0
    rtt_count: int = 0
    wall_s: float = 0.0

    # basic quantities ------------------------------------------------------
    @property
    def T(self):
        return self.T_ns / NS_PER_S

    @property
    def forwarded(self):
        return self.appearing - self.dropped

    @property
    def bits_per_packet(self):
        return self.scenario.P * 8.0

    def _col(self, name):
        return self.conn[name].astype(float)

    @property
    def durations(self):
        return self._col("duration_ns") / NS_PER_S

    @property
    def sizes(self):
        return self._col("F")

    @property
    def ON_meas(self):
        return float(self.durations.mean()) if self.completed else float("nan")

    @property
    def ON_bd(self):
        return float(self._col("bd_duration_ns").mean() / NS_PER_S) if self.completed else float("nan")

    @property
    def mean_size(self):
        return float(self.sizes.mean()) if self.completed else float("nan")

    @property
    def h_meas(self):
        """Total bits delivered over total transfer time (F/ON)."""
        if not self.completed:
            return float("nan")
        return float(self.sizes.sum() * self.bits_per_packet / self.durations.sum())

    @property
    def h_per_source(self):
        """Average over sources of each source's delivered bits over its busy time."""
        if not self.completed:
            return float("nan")
        src = self.conn["source"]
        bits = np.bincount(src, weights=self.sizes * self.bits_per_packet)
        dur = np.bincount(src, weights=self.durations)
        ok = dur > 0
        return float((bits[ok] / dur[ok]).mean())

    @property
    def h2(self):
        """Mean of the per-connection rates."""
        if not self.completed:
            return float("nan")
        return float((self.sizes * self.bits_per_packet / self.durations).mean())

    @property
    def rho_meas(self):
        return self.l2_busy_ns / self.T_ns if self.T_ns else float("nan")

    @property
    def L_meas(self):
        return self.dropped / self.appearing if self.appearing else 0.0

    @property
    def mean_rtt(self):
        return self.rtt_sum_ns / self.rtt_count / NS_PER_S if self.rtt_count else float("nan")

    @property
    def l3_mean_queue(self):
        """Time-average packets held at the receiver-side links, per receiver."""
        return self.l3_sojourn_ns / self.T_ns / self.scenario.N if self.T_ns else 0.0

    @property
    def avg_active(self):
        p = self.bd_occupancy()
        return float((np.arange(p.size) * p).sum())

    # distributions -----------------------------------------------------------
    def bd_occupancy(self):
        tot = self.bd_time.sum()
        return self.bd_time / tot if tot > 0 else self.bd_time

    def queue_distributions(self):
        return queue_distributions(self)

    def drop_analysis(self):
        return drop_analysis(self)

    def drop_proportion_by_seq(self):
        n = max(self.drops_by_seq.size, self.appear_by_seq.size)
        d = np.zeros(n)
        a = np.zeros(n)
        d[:self.drops_by_seq.size] = self.drops_by_seq
        a[:self.appear_by_seq.size] = self.appear_by_seq
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(a > 0, d / a, 0.0)

    def summary(self):
        qd = self.queue_distributions()
        return {
            "scenario": self.scenario.name(),
            "completed": self.completed,
            "T_s": self.T,
            "events": self.events,
            "h_meas_bps": self.h_meas,
            "h_per_source_bps": self.h_per_source,
            "h2_bps": self.h2,
            "ON_s": self.ON_meas,
            "ON_bd_s": self.ON_bd,
            "mean_size": self.mean_size,
            "rho_meas": self.rho_meas,
            "L_meas": self.L_meas,
            "appearing": self.appearing,
            "dropped": self.dropped,
            "mean_rtt_s": self.mean_rtt,
            "mean_Q": qd["mean_Q"],
            "mean_Q_seen": qd["mean_Q_seen"],
            "l3_mean_queue": self.l3_mean_queue,
            "avg_active": self.avg_active,
        }

    def write(self, out_dir, fmt="csv"):
        """Per-connection table, occupancy, queue histograms and a JSON summary."""
        os.makedirs(out_dir, exist_ok=True)
        paths = {}
        summ = self.summary()
        summ["drop_analysis"] = self.drop_analysis()
        p = os.path.join(out_dir, "summary.json")
        with open(p, "w") as fh:
            json.dump(_jsonable(summ), fh, indent=2, sort_keys=True)
        paths["summary"] = p
        if fmt == "json":
            p = os.path.join(out_dir, "metrics.json")
            qd = self.queue_distributions()
            with open(p, "w") as fh:
                json.dump(_jsonable({"occupancy": self.bd_occupancy(), "queue": qd,
                                     "connections": self.conn}), fh, sort_keys=True)
            paths["metrics"] = p
            return paths
        p = os.path.join(out_dir, "connections.csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CONN_FIELDS)
            cols = [self.conn[k] for k in CONN_FIELDS]
            for row in zip(*cols):
                w.writerow([int(v) for v in row])
        paths["connections"] = p
        p = os.path.join(out_dir, "occupancy.csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "P_j"])
            for j, v in enumerate(self.bd_occupancy()):
                w.writerow([j, f"{v:.10g}"])
        paths["occupancy"] = p
        p = os.path.join(out_dir, "queue.csv")
        qd = self.queue_distributions()
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "time_avg_P(Q>x)", "arrival_P(Q>x)"])
            ta, ar = qd["time_avg_survival"], qd["arrival_seen_survival"]
            for x in range(max(ta.size, ar.size)):
                w.writerow([x, f"{ta[x] if x < ta.size else 0:.10g}", f"{ar[x] if x < ar.size else 0:.10g}"])
        paths["queue"] = p
        return paths


def _survival(hist):
    tot = hist.sum()
    if tot <= 0:
        return np.zeros(hist.size)
    p = hist / tot
    # P(Q > x) = 1 - P(Q <= x)
    return np.clip(1.0 - np.cumsum(p), 0.0, 1.0)


def queue_distributions(m):
    """Time-average and arrival-seen survival of the N1 queue, and both means."""
    ta = m.q_time
    ar = m.q_seen
    xs_t = np.arange(ta.size)
    xs_a = np.arange(ar.size)
    mean_q = float((xs_t * ta).sum() / ta.sum()) if ta.sum() > 0 else 0.0
    mean_qs = float((xs_a * ar).sum() / ar.sum()) if ar.sum() > 0 else 0.0
    return {
        "time_avg_survival": _survival(ta),
        "arrival_seen_survival": _survival(ar),
        "mean_Q": mean_q,
        "mean_Q_seen": mean_qs,
        "max_Q": int(np.nonzero(ta)[0].max()) if ta.sum() > 0 else 0,
    }


def _pct(a, b):
    return 100.0 * a / b if b else 0.0


def drop_analysis(m):
    """Loss taxonomy: how drops are recovered (TO or TD/FR) and what it costs."""
    c = m.conn
    if not m.completed:
        return {}

    def tot(k):
        return float(c[k].sum())

    drops = tot("drops")
    tos = tot("tos")
    tds = tot("tds")
    frs = tot("frs")
    nc = m.completed
    bits = m.bits_per_packet
    td_time_s = tot("td_time_ns") / NS_PER_S
    rep = {
        "pct_drops": 100.0 * m.L_meas,
        "pct_TO_per_drop": _pct(tos, drops),
    }
    for k in TO_CATEGORIES:
        rep[f"pct_{k}_per_TO"] = _pct(tot(k), tos)
    rep.update({
        "avg_TO_time_per_TO_ms": 1000 * tot("to_time_ns") / NS_PER_S / tos if tos else 0.0,
        "avg_TO_time_per_conn_ms": 1000 * tot("to_time_ns") / NS_PER_S / nc,
        "pct_TD_per_drop": _pct(tds, drops),
        "pct_FR_per_TD": _pct(frs, tds),
        "avg_sent_TDFR_per_FR": tot("td_sent") / frs if frs else 0.0,
        "avg_sent_on_FR_per_FR": tot("fr_exit_sent") / frs if frs else 0.0,
        "avg_TDFR_time_per_FR_ms": 1000 * td_time_s / tds if tds else 0.0,
        "avg_TDFR_time_per_conn_ms": 1000 * td_time_s / nc,
        "avg_TDFR_rate_kbps": tot("td_sent") * bits / td_time_s / 1000 if td_time_s > 0 else 0.0,
        "avg_send_rate_kbps": tot("sent") * bits / m.durations.sum() / 1000,
        "h_kbps": m.h_meas / 1000,
        "ON_ms": 1000 * m.ON_meas,
        "mean_size": m.mean_size,
        "mean_rtt_ms": 1000 * m.mean_rtt,
        "pct_fr_rtx_per_drop": _pct(tot("fr_retransmissions"), drops),
        "drops_slow_start": m.drops_ss,
        "drops_cong_avoid": m.drops_ca,
        "to_windows": dict(m.to_windows),
    })
    prop = m.drop_proportion_by_seq()
    rep["drop_prop_by_seq"] = {int(s): float(prop[s]) for s in range(1, min(prop.size, 65))}
    return rep


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    return o
