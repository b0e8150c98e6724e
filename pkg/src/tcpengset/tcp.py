"""Packet-granular TCP NewReno sender and cumulative-ack receiver.

Specifics: the receiver acks every packet, the initial window is 2, cwnd is
capped at the receiver window W_R, congestion avoidance counts whole acks
(W_CA = S + 1), fast recovery is the impatient NewReno variant and the RTO
follows RFC 6298 with zero clock granularity.  There is no limited
transmit, no burst limiting, no delayed ack and no SACK.

Sequence numbers start at 1 and an ack carries the next expected sequence.
Times are plain numbers in whatever unit the caller uses (the simulator
uses integer nanoseconds); min_rto and max_rto must be in the same unit.
"""
import math
from collections import Counter
from dataclasses import dataclass, field

INITIAL_WINDOW = 2
DUPACK_THRESHOLD = 3

TO_CATEGORIES = ("TOTO", "TDTO", "TObeg", "TOend", "TOther")


class ProtocolViolation(RuntimeError):
    """An ack acknowledged data that was never sent."""


class RtoEstimator:
    """RFC 6298 retransmission timeout with exponential backoff."""

    __slots__ = ("srtt", "rttvar", "base", "backoff", "min_rto", "max_rto", "samples")

    def __init__(self, min_rto=1.0, max_rto=64.0, initial=None):
        self.srtt = None
        self.rttvar = None
        self.min_rto = min_rto
        self.max_rto = max_rto
        self.base = min_rto if initial is None else initial
        self.backoff = 0
        self.samples = 0

    @property
    def rto(self):
        return min(self.max_rto, self.base * (1 << self.backoff))

    def update(self, R):
        if self.srtt is None:
            self.srtt = R
            self.rttvar = R / 2
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - R)
            self.srtt = 0.875 * self.srtt + 0.125 * R
        self.base = max(self.min_rto, self.srtt + 4 * self.rttvar)
        self.backoff = 0
        self.samples += 1
        return self.rto

    def back_off(self):
        # stop doubling once the cap is reached
        if self.base * (1 << self.backoff) < self.max_rto:
            self.backoff += 1
        return self.rto


def rto_update(est, R):
    est.update(R)
    return est


def rto_multipliers(R, samples, min_rto=0.0):
    """RTO/R after each of `samples` identical measurements R (no clamp by default)."""
    est = RtoEstimator(min_rto=min_rto, max_rto=math.inf)
    out = []
    for _ in range(samples):
        est.update(R)
        out.append((est.srtt + 4 * est.rttvar) / R)
    return out


def send_window(cwnd, W_R, una, nxt):
    """sigma = min(cwnd, W_R) - (nxt - una), floored at zero."""
    return max(min(int(cwnd), W_R) - (nxt - una), 0)


@dataclass
class SenderStats:
    sent: int = 0
    retransmissions: int = 0
    to_retransmissions: int = 0
    fr_retransmissions: int = 0
    drops: int = 0
    tds: int = 0
    frs: int = 0
    td_sent: int = 0
    fr_new: int = 0
    fr_exit_sent: int = 0
    td_time: float = 0
    tos: Counter = field(default_factory=Counter)
    to_windows: Counter = field(default_factory=Counter)
    to_time: float = 0
    rtt_sum: float = 0
    rtt_count: int = 0

    @property
    def to_count(self):
        return sum(self.tos.values())


class NewRenoSender:
    """Sender side of one file transfer of F packets.

    The caller feeds acks and timer expiries and gets back the list of
    sequence numbers to transmit immediately, in order.  `timer` holds the
    absolute retransmission deadline or None when no timer is armed.
    The timer is (re)armed whenever a burst is transmitted and is otherwise
    left alone by acks; it is cancelled once the last packet is acked.
    """

    def __init__(self, F, W_R, rto=None, trace=None):
        if F < 1 or W_R < 1:
            raise ValueError("F and W_R must be >= 1")
        self.F = F
        self.W_R = W_R
        self.cwnd = min(INITIAL_WINDOW, W_R)
        self.S = math.inf
        self.una = 1
        self.nxt = 1
        self.maxsent = 0
        self.recover = 0
        self.rec_xtd = 0
        self.inFR = False
        self.TDoff = False
        self.dupacks = 0
        self.ca_count = 0
        self.rto = rto if rto is not None else RtoEstimator()
        self.timer = None
        self.timed_seq = None
        self.timed_at = None
        self.last_send = None
        self.last_to_una = None
        self.td_start = None
        self.done = False
        self.start_time = None
        self.end_time = None
        self.stats = SenderStats()
        self.trace = trace

    # helpers -------------------------------------------------------------
    @property
    def theta(self):
        return self.nxt - self.una

    @property
    def window(self):
        return min(int(self.cwnd), self.W_R)

    @property
    def in_slow_start(self):
        return self.cwnd <= self.S

    def sigma(self):
        return send_window(self.cwnd, self.W_R, self.una, self.nxt)

    def _emit(self, kind, now, seq=None):
        if self.trace is not None:
            self.trace.append((now, kind, seq, self.window, self.S, self.theta))

    def _xmit(self, seq, now, out):
        st = self.stats
        st.sent += 1
        if seq <= self.maxsent:
            st.retransmissions += 1
        else:
            self.maxsent = seq
            if self.timed_seq is None and not self.inFR:
                self.timed_seq = seq
                self.timed_at = now
        if self.inFR:
            st.td_sent += 1
        out.append(seq)
        self._emit("send", now, seq)

    def _send_new(self, now, out):
        k = min(self.sigma(), self.F + 1 - self.nxt)
        for _ in range(k):
            seq = self.nxt
            self.nxt += 1
            self._xmit(seq, now, out)
            if self.inFR:
                if seq > self.rec_xtd:
                    self.rec_xtd = seq
                self.stats.fr_new += 1

    def _arm(self, now, out):
        if out:
            self.timer = now + self.rto.rto
            self.last_send = now

    # events --------------------------------------------------------------
    def start(self, now):
        self.start_time = now
        out = []
        self._send_new(now, out)
        self._arm(now, out)
        return out

    def on_ack(self, ack, now):
        if self.done:
            return []
        if ack > self.maxsent + 1:
            raise ProtocolViolation(f"ack {ack} beyond highest sent {self.maxsent}")
        out = []
        if ack > self.una:
            self._new_ack(ack, now, out)
        elif ack == self.una and self.nxt > self.una:
            self._dup_ack(ack, now, out)
        self._arm(now, out)
        return out

    def _new_ack(self, ack, now, out):
        self.una = ack
        if self.nxt < ack:
            self.nxt = ack
        self.dupacks = 0
        if self.timed_seq is not None and ack > self.timed_seq:
            R = now - self.timed_at
            self.rto.update(R)
            self.stats.rtt_sum += R
            self.stats.rtt_count += 1
            self.timed_seq = None
        if ack > self.recover:
            self.TDoff = False
        if ack > self.F:
            if self.inFR:
                self._leave_fr(now, success=True)
            self.done = True
            self.timer = None
            self.end_time = now
            self._emit("done", now, ack)
            return
        if self.inFR:
            if ack > self.recover:
                self._leave_fr(now, success=True)
                self.cwnd = min(self.S + 1, self.W_R)
                self.ca_count = 0
                self._send_new(now, out)
                self.stats.fr_exit_sent += len(out)
            else:
                # partial ack: repair the next hole and let one new packet out
                self.stats.fr_retransmissions += 1
                self._xmit(self.una, now, out)
                self.cwnd = min(self.nxt - self.una + 1, self.W_R)
                self._send_new(now, out)
            return
        if self.cwnd <= self.S:
            self.cwnd += 1
        else:
            self.ca_count += 1
            if self.ca_count >= int(self.cwnd):
                self.cwnd += 1
                self.ca_count = 0
        if self.cwnd > self.W_R:
            self.cwnd = self.W_R
        self._send_new(now, out)

    def _dup_ack(self, ack, now, out):
        self.dupacks += 1
        if self.inFR:
            if self.cwnd < self.W_R:
                self.cwnd += 1
            self._send_new(now, out)
            return
        if self.dupacks == DUPACK_THRESHOLD and ack > self.recover:
            st = self.stats
            st.tds += 1
            self.S = max(self.theta // 2, 2)
            self.recover = self.maxsent
            self.rec_xtd = self.maxsent
            self.inFR = True
            self.td_start = now
            self.timed_seq = None
            self._emit("TD", now, self.una)
            st.fr_retransmissions += 1
            self._xmit(self.una, now, out)
            self.cwnd = min(self.S + 3, self.W_R)
        elif self.dupacks == DUPACK_THRESHOLD:
            self.TDoff = True

    def _leave_fr(self, now, success):
        self.inFR = False
        if success:
            self.stats.frs += 1
        if self.td_start is not None:
            self.stats.td_time += now - self.td_start
            self.td_start = None
        self._emit("FR" if success else "FRabort", now, self.una)

    def classify_timeout(self):
        if int(self.cwnd) == 1 and self.last_to_una is not None:
            return "TOTO"
        if self.inFR:
            return "TDTO"
        if self.una <= 2:
            return "TObeg"
        if self.una >= self.F - 2:
            return "TOend"
        return "TOther"

    def on_timeout(self, now):
        if self.done:
            return []
        st = self.stats
        cat = self.classify_timeout()
        st.tos[cat] += 1
        st.to_windows[self.window] += 1
        if self.last_send is not None:
            st.to_time += now - self.last_send
        self._emit(cat, now, self.una)
        if self.inFR:
            self._leave_fr(now, success=False)
        repeated = self.last_to_una == self.una
        if not repeated:
            self.S = max(self.theta // 2, 2)
            self.recover = self.maxsent
        else:
            self.recover = 0
        self.TDoff = self.recover > 0
        self.last_to_una = self.una
        self.cwnd = 1
        self.ca_count = 0
        self.dupacks = 0
        self.nxt = self.una
        self.timed_seq = None
        self.rto.back_off()
        out = []
        st.to_retransmissions += 1
        seq = self.nxt
        self.nxt += 1
        self._xmit(seq, now, out)
        self._arm(now, out)
        return out


class Receiver:
    """Cumulative acker that buffers out-of-order packets."""

    __slots__ = ("F", "expected", "held", "received")

    def __init__(self, F):
        self.F = F
        self.expected = 1
        self.held = set()
        self.received = 0

    @property
    def complete(self):
        return self.expected > self.F

    def on_data(self, seq):
        if seq == self.expected:
            self.received += 1
            self.expected += 1
            held = self.held
            while self.expected in held:
                held.remove(self.expected)
                self.expected += 1
        elif seq > self.expected and seq not in self.held:
            self.received += 1
            self.held.add(seq)
        return self.expected


def receiver_on_data(receiver, seq):
    return receiver.on_data(seq)
