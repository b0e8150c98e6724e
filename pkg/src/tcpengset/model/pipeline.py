"""End-to-end model evaluation: path -> ON0/h0 -> state probabilities ->
rates and loads -> queue, loss and buffer."""
import math
from dataclasses import dataclass

from .._validation import InvalidParameters, check_int, check_positive
from .engset import engset_probabilities, aggregate_rates, rho0_per_source
from .flights import compute_flights, compute_on0, peak_rate, renormalize
from .path import path_from_rtt0
from .queueing import buffer_size, buffer_size_raw, loss_rate, queue_stats

DEFAULT_F_SET = (5, 12, 22, 36, 80, 120, 500, 1000)
DEFAULT_RTT_SET = (0.05, 0.3)


@dataclass(frozen=True)
class SingleConnection:
    sched: object
    ON0: float
    h0: float
    m: int
    n: int
    renormalized: bool


def single_connection(path, W_R, F):
    """Flights, ON0 and h0 of a lone transfer, plus the (m, n) used for the queue."""
    sched = compute_flights(F, W_R, path.beta_star)
    ON0 = compute_on0(sched, path.RTT0, path.delta_star)
    h0 = peak_rate(F, path.P, ON0)
    m, n = sched.m, sched.n
    saturable = not math.isinf(path.beta_star) and W_R > math.floor(path.beta_star)
    if saturable:
        m, n = renormalize(ON0, path.RTT0, path.delta_star, path.beta_star)
    return SingleConnection(sched, ON0, h0, m, n, saturable)


def n_for_load(path, W_R, F, OFF, rho0_target):
    """Smallest N whose open-loop load reaches rho0_target."""
    check_positive("rho0_target", rho0_target)
    one = single_connection(path, W_R, F)
    per = rho0_per_source(OFF, one.ON0, path.C, F, path.P)
    return max(1, math.ceil(rho0_target / per - 1e-9))


@dataclass(frozen=True)
class ModelResult:
    path: object
    W_R: int
    F: int
    OFF: float
    one: SingleConnection
    sol: object
    queue: object
    B: float | None
    L: float | None
    L_target: float | None
    B_needed: int | None

    def record(self):
        rec = dict(self.path.summary())
        rec.update({
            "W_R": self.W_R, "F": self.F, "OFF": self.OFF,
            "flights": list(self.one.sched.flights),
            "m0": self.one.sched.m, "n0": self.one.sched.n,
            "m": self.one.m, "n": self.one.n, "saturated_flights": self.one.sched.saturated,
            "L_SS": self.one.sched.L_SS,
        })
        rec.update(self.sol.record())
        rec.update({"RTT": self.queue.RTT, "Q": self.queue.Q, "eta": self.queue.eta,
                    "B": self.B, "L": self.L, "L_target": self.L_target, "B_needed": self.B_needed})
        return rec


def evaluate(path, W_R, F, OFF, N=None, rho0_target=None, B=None, L_target=None):
    W_R = check_int("W_R", W_R, minimum=1)
    check_positive("OFF", OFF)
    if (N is None) == (rho0_target is None):
        raise InvalidParameters("give exactly one of N or rho0_target")
    if N is None:
        N = n_for_load(path, W_R, F, OFF, rho0_target)
    one = single_connection(path, W_R, F)
    sol = aggregate_rates(engset_probabilities(N, OFF, one.ON0, path.C, F, path.P))
    q = queue_stats(sol.ON, one.m, one.n, path.delta_star, path.RTT0, path.delta, sol.rho)
    L = None if B is None else loss_rate(sol.rho, q.eta, B)
    B_needed = None if L_target is None else buffer_size(sol.rho, q.eta, L_target)
    return ModelResult(path, W_R, F, OFF, one, sol, q, B, L, L_target, B_needed)


@dataclass(frozen=True)
class BufferRuleResult:
    C: float
    raw: float
    recommended: int
    F_at_max: int
    RTT_at_max: float
    rows: list


def buffer_rule(C, OFF=1.0, W_R=44, F_set=DEFAULT_F_SET, RTT_set=DEFAULT_RTT_SET, L_target=0.01,
                C1=100e6, C3=1e9, P=1500, a=40, rho0_target=1.0):
    """Largest buffer the model asks for over a grid of file sizes and RTTs.

    For every (F, RTT) N is the smallest source count whose open-loop load
    reaches rho0_target; B = eta*ln(rho/L) at that point.  The recommendation
    rounds the maximum up to a multiple of 10 packets.
    """
    rows = []
    for RTT in RTT_set:
        path = path_from_rtt0(C1, C, C3, RTT, P, a)
        for F in F_set:
            res = evaluate(path, W_R, F, OFF, rho0_target=rho0_target, L_target=L_target)
            raw = buffer_size_raw(res.sol.rho, res.queue.eta, L_target)
            rows.append({"F": F, "RTT0": RTT, "N": res.sol.N, "rho0": res.sol.rho0, "rho": res.sol.rho,
                         "Q": res.queue.Q, "eta": res.queue.eta, "B_raw": raw, "B": res.B_needed})
    best = max(rows, key=lambda r: r["B_raw"])
    rec = int(math.ceil(best["B_raw"] / 10.0 - 1e-9) * 10)
    return BufferRuleResult(C, best["B_raw"], rec, best["F"], best["RTT0"], rows)


def reference_rules(C, P=1500, delay_600=0.6, bdp_rtt=0.3):
    """Buffers of the fixed-delay rules: 600 ms of queueing and one BDP."""
    pkt = P * 8.0
    return {"600ms-rule": round(C * delay_600 / pkt), "BDP-rule": round(C * bdp_rtt / pkt)}
