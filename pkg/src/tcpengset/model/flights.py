"""Slow-start flight schedule of a lone connection and its ON0 duration."""
import math
from dataclasses import dataclass

from .._validation import InvalidParameters, UnsupportedConfiguration, check_int

# guards the floor in renormalize against ON0 landing a hair below m*RTT0
_EPS = 1e-9


@dataclass(frozen=True)
class FlightSchedule:
    flights: tuple
    m: int
    n: int
    saturated: bool
    L_SS: int | None
    W_R: int

    @property
    def F(self):
        return sum(self.flights)


def compute_flights(F, W_R, beta_star, initial_window=2):
    """Flight sizes of a loss-free transfer of F packets.

    Each flight doubles the previous one (the receiver acks every packet),
    capped at W_R.  Once a flight would exceed floor(beta_star) the
    bottleneck stays busy for the rest of the transfer, so every remaining
    packet is merged into one final flight.
    """
    F = check_int("F", F)
    W_R = check_int("W_R", W_R)
    if F < 3 or W_R < 4 or not beta_star > 2:
        raise UnsupportedConfiguration(
            f"flight schedule needs F >= 3, W_R >= 4 and beta* > 2 (got F={F}, W_R={W_R}, beta*={beta_star})")
    fb = math.floor(beta_star) if not math.isinf(beta_star) else math.inf
    flights = []
    left = F
    w = min(initial_window, W_R)
    saturated = False
    while left > 0:
        f = min(w, W_R)
        if flights and f > fb:
            flights.append(left)
            saturated = True
            break
        f = min(f, left)
        flights.append(f)
        left -= f
        w = min(2 * f, W_R)
    L_SS = 2 * W_R - 2 if F >= 2 * W_R - 2 else None
    return FlightSchedule(tuple(flights), len(flights), flights[-1] - 1, saturated, L_SS, W_R)


def compute_on0(sched, RTT0, delta_star):
    if sched is None or sched.m == 0:
        return 0.0
    return sched.m * RTT0 + sched.n * delta_star


def compute_on0_ns(sched, path):
    """ON0 in integer nanoseconds on the simulator's clock."""
    return sched.m * path.RTT0_ns + sched.n * path.delta_star_ns


def renormalize(ON0, RTT0, delta_star, beta_star):
    """Re-express ON0 as m*RTT0 + n*delta_star with n <= floor(beta_star).

    m is the number of whole RTT0 in ON0 and n the whole transmission times
    left over, so the reconstruction undershoots ON0 by less than delta_star.
    """
    if not RTT0 > 0 or not delta_star > 0:
        raise InvalidParameters("RTT0 and delta_star must be > 0")
    if ON0 < 0:
        raise InvalidParameters(f"ON0 must be >= 0, got {ON0}")
    m = math.floor(ON0 / RTT0 + _EPS)
    rest = max(ON0 - m * RTT0, 0.0)
    n = math.floor(rest / delta_star + _EPS)
    fb = math.floor(beta_star)
    if n > fb:
        # only reachable through rounding when beta_star is an integer
        n = fb
    return m, n


def peak_rate(F, P, ON0):
    """h0 in bits/s for F packets of P bytes delivered in ON0 seconds."""
    if not ON0 > 0:
        raise InvalidParameters(f"ON0 must be > 0, got {ON0}")
    return F * P * 8.0 / ON0
