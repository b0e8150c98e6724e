"""TCP-modified Engset birth-death chain and the rate estimates built on it.

State j is the number of active connections among N ON-OFF sources.  While
j <= s every connection runs at its lone-connection rate h0; above s the
capacity C is shared equally, so completions happen at the fixed rate
C / (F*P*8).
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from .._validation import InvalidParameters, check_int, check_positive


@dataclass(frozen=True)
class EngsetSolution:
    N: int
    OFF: float
    ON0: float
    C: float
    F: float
    P: int
    s: int
    h0: float
    probs: np.ndarray
    avg_active: float
    P_OL: float
    n_UL: float
    n_OL: float
    rho0: float
    v_OL: float = math.nan
    T: float = math.nan
    h1: float = math.nan
    h2: float = math.nan
    h: float = math.nan
    ON: float = math.nan
    a_act: float = math.nan
    rho1: float = math.nan
    rho2: float = math.nan
    rho: float = math.nan

    @property
    def bits_per_file(self):
        return self.F * self.P * 8.0

    def record(self):
        d = {k: getattr(self, k) for k in (
            "N", "OFF", "ON0", "C", "F", "P", "s", "h0", "avg_active", "P_OL", "n_UL", "n_OL",
            "v_OL", "T", "h1", "h2", "h", "ON", "a_act", "rho0", "rho1", "rho2", "rho")}
        d["P_j"] = [float(p) for p in self.probs]
        return d


def overload_threshold(C, h0):
    """s = floor(C / h0): how many lone-rate connections the link carries."""
    return math.floor(C / h0 + 1e-12)


def birth_death_rates(N, OFF, ON0, C, F, P, s):
    """Arrays (lambda_j, delta_j) for j = 0..N."""
    j = np.arange(N + 1, dtype=float)
    lam = (N - j) / OFF
    full = C / (F * P * 8.0)
    dlt = np.where(j <= s, j / ON0, full)
    dlt[0] = 0.0
    return lam, dlt


def engset_probabilities(N, OFF, ON0, C, F, P):
    """Stationary probabilities P_0..P_N, computed in the log domain."""
    N = check_int("N", N, minimum=1)
    check_positive("OFF", OFF)
    check_positive("ON0", ON0)
    check_positive("C", C)
    check_positive("F", F)
    check_positive("P", P)
    h0 = F * P * 8.0 / ON0
    s = overload_threshold(C, h0)
    lam, dlt = birth_death_rates(N, OFF, ON0, C, F, P, s)
    log_pi = np.zeros(N + 1)
    log_pi[1:] = np.cumsum(np.log(lam[:-1]) - np.log(dlt[1:]))
    log_pi -= log_pi.max()
    w = np.exp(log_pi)
    probs = w / w.sum()
    j = np.arange(N + 1)
    under = j <= s
    avg = float((j * probs).sum())
    n_UL = float((j[under] * probs[under]).sum())
    n_OL = float((j[~under] * probs[~under]).sum())
    P_OL = float(probs[~under].sum())
    rho0 = ON0 / (ON0 + OFF) * N * h0 / C
    return EngsetSolution(N=N, OFF=OFF, ON0=ON0, C=C, F=F, P=P, s=s, h0=h0, probs=probs,
                          avg_active=avg, P_OL=P_OL, n_UL=n_UL, n_OL=n_OL, rho0=rho0)


def aggregate_rates(sol, C=None, OFF=None):
    """Complete a solution with throughput, the two rate estimates and loads."""
    C = sol.C if C is None else C
    OFF = sol.OFF if OFF is None else OFF
    if C != sol.C or OFF != sol.OFF:
        raise InvalidParameters("C and OFF must match the values the probabilities were solved with")
    bits = sol.bits_per_file
    T = sol.h0 * sol.n_UL + C * sol.P_OL
    h1 = T / sol.avg_active
    if sol.N > sol.s and sol.P_OL > 0 and sol.n_OL > 0:
        v_OL = sol.n_OL / sol.P_OL
        h2 = C / v_OL
    else:
        v_OL = math.nan
        h2 = h1
    ON2 = bits / h2
    a2 = ON2 / (ON2 + OFF)
    rho2 = a2 * sol.N * h2 / C
    rho1 = T / C
    h = 0.5 * (h1 + h2)
    ON = bits / h
    return replace(sol, v_OL=v_OL, T=T, h1=h1, h2=h2, h=h, ON=ON, a_act=ON / (ON + OFF),
                   rho1=rho1, rho2=rho2, rho=0.5 * (rho1 + rho2))


def solve(N, OFF, ON0, C, F, P):
    return aggregate_rates(engset_probabilities(N, OFF, ON0, C, F, P))


def rho0_per_source(OFF, ON0, C, F, P):
    h0 = F * P * 8.0 / ON0
    return ON0 / (ON0 + OFF) * h0 / C
