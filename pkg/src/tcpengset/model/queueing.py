"""Queue content, loss and buffer estimates of the multiplexing link, and the
per-round queue mean of a lone connection."""
import math
from dataclasses import dataclass

from .._validation import InvalidParameters
from .flights import compute_flights


@dataclass(frozen=True)
class QueueModel:
    RTT: float
    Q: float
    eta: float
    delta: float
    rho: float

    def survival(self, x):
        """Exponential approximation of P(Q > x)."""
        if self.eta <= 0:
            return 0.0
        return self.rho * math.exp(-x / self.eta)


def queue_stats(ON, m, n, delta_star, RTT0, delta, rho):
    """RTT = (ON - n*delta_star)/m, Q = (RTT - RTT0)/delta, eta = Q/rho."""
    if m <= 0:
        raise InvalidParameters("m must be >= 1 (a transfer has at least one round)")
    if not rho > 0:
        raise InvalidParameters(f"rho must be > 0, got {rho}")
    RTT = (ON - n * delta_star) / m
    Q = max((RTT - RTT0) / delta, 0.0) if delta > 0 else 0.0
    return QueueModel(RTT=RTT, Q=Q, eta=Q / rho, delta=delta, rho=rho)


def loss_rate(rho, eta, B):
    """L = rho * exp(-B/eta).  A queue that never builds (eta = 0) loses nothing."""
    if B < 0:
        raise InvalidParameters(f"B must be >= 0, got {B}")
    if eta <= 0:
        return rho if B == 0 else 0.0
    return rho * math.exp(-B / eta)


def buffer_size_raw(rho, eta, L):
    if not L > 0:
        raise InvalidParameters(f"target loss must be > 0, got {L}")
    if L >= rho or eta <= 0:
        return 0.0
    return eta * math.log(rho / L)


def buffer_size(rho, eta, L):
    """Smallest whole buffer meeting loss L: ceil(eta * ln(rho/L))."""
    raw = buffer_size_raw(rho, eta, L)
    # tolerate float noise so buffer_size(loss_rate(B)) gives B back
    return int(math.ceil(raw - 1e-9 * max(1.0, raw)))


def round_share(pairs, singles):
    """Queue-time contribution (in units of delta) of one slow-start round.

    Each ack in the round releases either two packets (a window increase, one
    of `pairs`) or one packet (`singles`).  The j-th pair lifts the queue to
    j + 1 for two transmission times; after the ramp every single keeps it at
    pairs + 1 for one transmission time.  This gives nu*(nu + 2) for a round
    of nu increases, (nu + 1)*(nu + 2) - 1 when one odd packet ends it and
    (nu + 1)*(n + 1) - 1 when n acks arrive and nu of them are increases.
    """
    return pairs * (pairs + 2) + singles * (pairs + 1)


def round_contributions(F, W_R, beta, initial_window=2):
    """Per-round contributions [tau_1, tau_2, ...] in transmission times."""
    sched = compute_flights(F, W_R, beta, initial_window)
    taus = []
    w_prev = None
    for i, f in enumerate(sched.flights):
        last = i == len(sched.flights) - 1
        if w_prev is None:
            pairs, singles = f // 2, f % 2
            taus.append(round_share(pairs, singles))
        elif last and sched.saturated:
            nu = min(W_R - w_prev, f // 2)
            L_SS = 2 * W_R - 2
            taus.append(nu * (nu + 2) + max(F - L_SS, 0) * (nu + 1))
        else:
            nu = max(min(w_prev, W_R - w_prev), 0)
            if f >= 2 * nu:
                pairs, singles = nu, f - 2 * nu
            else:
                pairs, singles = f // 2, f % 2
            taus.append(round_share(pairs, singles))
        w_prev = f
    return taus


def single_connection_queue_mean(F, W_R, beta, delta, ON0, OFF):
    """Time-average queue of one ON-OFF connection: sum(tau)*delta/(ON0 + OFF)."""
    if not ON0 + OFF > 0:
        raise InvalidParameters("ON0 + OFF must be > 0")
    taus = round_contributions(F, W_R, beta)
    return sum(taus) * delta / (ON0 + OFF)
