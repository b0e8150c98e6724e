"""Path algebra for the three-link dumbbell: sources -L1-> N1 -L2-> N2 -L3-> receivers.

Capacities are in bits/s (math.inf allowed), delays in seconds, sizes in bytes.
"""
import math
from dataclasses import dataclass

from .._validation import InvalidParameters, check_nonneg, check_positive

NS_PER_S = 1_000_000_000


def tx_time(size_bytes, capacity):
    """Transmission time in seconds; zero on an infinite-capacity link."""
    if math.isinf(capacity):
        return 0.0
    return size_bytes * 8.0 / capacity


def tx_ns(size_bytes, capacity):
    """Transmission time in integer nanoseconds, rounded half up."""
    if math.isinf(capacity):
        return 0
    c = int(capacity)
    if c != capacity:
        raise InvalidParameters(f"capacity must be a whole number of bits/s, got {capacity!r}")
    return (size_bytes * 8 * NS_PER_S + c // 2) // c


@dataclass(frozen=True)
class PathParams:
    C1: float
    C2: float
    C3: float
    D: float
    P: int = 1500
    a: int = 40
    # index (1..3) of the link multiplexing the sources
    mux_link: int = 2

    @property
    def capacities(self):
        return (self.C1, self.C2, self.C3)

    @property
    def deltas(self):
        return tuple(tx_time(self.P, c) for c in self.capacities)

    @property
    def delta1(self):
        return self.deltas[0]

    @property
    def delta2(self):
        return self.deltas[1]

    @property
    def delta3(self):
        return self.deltas[2]

    @property
    def C(self):
        return self.capacities[self.mux_link - 1]

    @property
    def delta(self):
        return self.deltas[self.mux_link - 1]

    @property
    def delta_star(self):
        return max(self.deltas)

    @property
    def bottleneck(self):
        ds = self.deltas
        return ds.index(max(ds)) + 1

    @property
    def RTT0(self):
        return self.D + sum(tx_time(self.P + self.a, c) for c in self.capacities)

    @property
    def betas(self):
        return tuple(self.RTT0 / d if d > 0 else math.inf for d in self.deltas)

    @property
    def beta_star(self):
        return min(self.betas)

    def r(self, W_R):
        return math.floor(self.beta_star) / W_R

    # integer-nanosecond views used by the simulator and the exact checks
    @property
    def deltas_ns(self):
        return tuple(tx_ns(self.P, c) for c in self.capacities)

    @property
    def ack_deltas_ns(self):
        return tuple(tx_ns(self.a, c) for c in self.capacities)

    @property
    def D_ns(self):
        return round(self.D * NS_PER_S)

    @property
    def RTT0_ns(self):
        return self.D_ns + sum(self.deltas_ns) + sum(self.ack_deltas_ns)

    @property
    def delta_star_ns(self):
        return max(self.deltas_ns)

    def summary(self):
        d1, d2, d3 = self.deltas
        b1, b2, b3 = self.betas
        return {
            "C1": self.C1, "C2": self.C2, "C3": self.C3, "D": self.D, "P": self.P, "a": self.a,
            "delta1": d1, "delta2": d2, "delta3": d3, "delta": self.delta,
            "delta_star": self.delta_star, "RTT0": self.RTT0,
            "beta1": b1, "beta2": b2, "beta3": b3, "beta_star": self.beta_star,
        }


def path_params(C1, C2, C3, D, P=1500, a=40, mux_link=2):
    for name, c in (("C1", C1), ("C2", C2), ("C3", C3)):
        check_positive(name, c, allow_inf=True)
    check_nonneg("D", D)
    check_positive("P", P)
    check_nonneg("a", a)
    if mux_link not in (1, 2, 3):
        raise InvalidParameters(f"mux_link must be 1, 2 or 3, got {mux_link}")
    return PathParams(C1, C2, C3, D, P, a, mux_link)


def path_from_rtt0(C1, C2, C3, RTT0, P=1500, a=40, mux_link=2):
    """Path whose empty round trip equals RTT0; the propagation part is derived."""
    tx = sum(tx_time(P + a, c) for c in (C1, C2, C3))
    D = RTT0 - tx
    if D < -1e-15:
        raise InvalidParameters(f"RTT0={RTT0} is shorter than the transmission times alone ({tx})")
    # snap D to whole nanoseconds so RTT0_ns is what the caller asked for
    D_ns = round(RTT0 * NS_PER_S) - sum(tx_ns(P, c) + tx_ns(a, c) for c in (C1, C2, C3))
    return path_params(C1, C2, C3, max(D_ns, 0) / NS_PER_S, P, a, mux_link)


@dataclass(frozen=True)
class Saturation:
    r: float
    saturated: bool
    Q_sat: int | None
    Q_wait: int | None


def saturation_check(path, W_R):
    """Steady single-connection behaviour: saturated iff floor(beta) < W_R.

    When saturated the standing queue is W_R - floor(beta) + 1 packets
    (W_R - floor(beta) of them waiting behind the one in service).
    """
    if W_R < 1:
        raise InvalidParameters(f"W_R must be >= 1, got {W_R}")
    fb = math.floor(path.beta_star) if not math.isinf(path.beta_star) else math.inf
    r = fb / W_R
    if r < 1:
        return Saturation(r, True, int(W_R - fb + 1), int(W_R - fb))
    return Saturation(r, False, None, None)
