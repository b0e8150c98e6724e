"""Event-driven packet simulator of the dumbbell network.

N sources each own an ingress link L1 into node N1.  N1 holds a tail-drop
buffer of B packets (the packet in service counts) in front of the shared
link L2.  Node N2 fans out to one link L3 per receiver; those queues never
drop because at most W_R packets of a connection are ever in flight.  Acks
use the same capacities on the way back but never queue and are never lost.

Time is kept in integer nanoseconds.  Departures from L2 are resolved lazily
whenever a packet reaches N1, so a departure and an arrival at the same
instant are ordered departure first.  The N2/L3 leg is computed at admission
time: FIFO order along the path means the receiver sees packets in exactly
the order they are admitted at N1.
"""
import heapq
import math
import time as _time
from collections import deque

import numpy as np

from ..model.path import NS_PER_S, tx_ns
from ..tcp import TO_CATEGORIES, NewRenoSender, Receiver, RtoEstimator
from .metrics import CONN_FIELDS, SimMetrics

EV_ARRIVAL = 0
EV_ACK = 1
EV_TIMER = 2
EV_START = 3
# heap entries are (time, rank, counter, kind, source, conn, value, flag); the rank
# orders arrivals and acks before timers before starts at equal times, and
# departures at N1 are resolved before any of them


class _SizeSource:
    def __init__(self, size_dist, rng):
        self.fixed = size_dist if isinstance(size_dist, int) else None
        self.dist = None if self.fixed is not None else size_dist
        self.rng = rng

    def draw(self):
        if self.fixed is not None:
            return self.fixed
        # 1 - U lies in (0, 1], which keeps the inverse finite
        return self.dist.sample(1.0 - self.rng.random())


def _streams(seed, N):
    """Independent (OFF, size) generators per source, derived from one seed."""
    root = np.random.SeedSequence(seed)
    out = []
    for child in root.spawn(N):
        off_ss, size_ss = child.spawn(2)
        out.append((np.random.Generator(np.random.PCG64(off_ss)),
                    np.random.Generator(np.random.PCG64(size_ss))))
    return out


def run_scenario(sc, nc=None, max_time=None, packets=10**6, first_off=True, trace=None):
    """Simulate `sc` until `nc` connections complete (or `max_time` seconds pass).

    nc defaults to sc.Nc, else about `packets` packets' worth of connections.
    With first_off=False every source starts a transfer at time zero.
    When `trace` is a list, one tuple per sender event and per drop is
    appended to it.
    """
    wall0 = _time.perf_counter()
    path = sc.path
    N = sc.N
    nc = sc.connections(packets) if nc is None else nc
    t_stop = math.inf if max_time is None else round(max_time * NS_PER_S)
    P, a = path.P, path.a
    d1, d2, d3 = (tx_ns(P, c) for c in (path.C1, path.C2, path.C3))
    ack_delay = tx_ns(a, path.C3) + tx_ns(a, path.C2) + tx_ns(a, path.C1)
    D = path.D_ns
    d_fwd = D // 2
    ack_delay += D - d_fwd
    B = sc.B
    W_R = sc.W_R
    off_mean = sc.OFF * NS_PER_S
    min_rto = round(sc.min_rto * NS_PER_S)
    max_rto = round(sc.max_rto * NS_PER_S)
    size_dist = sc.size_dist

    streams = _streams(sc.seed, N)
    off_rng = [s[0] for s in streams]
    sizes = [_SizeSource(size_dist, s[1]) for s in streams]

    heap = []
    push = heapq.heappush
    pop = heapq.heappop
    cnt = 0

    L1_free = [0] * N
    L3_free = [0] * N
    snd = [None] * N
    rcv = [None] * N
    cid = [0] * N
    bd_on = [False] * N
    bd_start = [0] * N
    bd_state = [0] * N
    qseen = [0] * N
    npk = [0] * N
    tgen = [0] * N
    tpend = [None] * N
    conn_seq = 0

    # N1 queue: departure times of packets present (head is in service)
    dq = deque()
    last_dep2 = 0
    q_hist = {}
    q_last_t = 0
    q_seen = {}
    appearing = dropped = 0
    drops_ss = drops_ca = 0
    l2_busy = 0
    l3_soj = 0
    drops_by_seq = {}
    appear_by_seq = {}

    bd_hist = [0] * (N + 1)
    bd_n = 0
    bd_last = 0

    records = []
    to_windows = {}
    rtt_sum = 0
    rtt_cnt = 0

    for i in range(N):
        t0 = int(round(off_rng[i].exponential(off_mean))) if first_off else 0
        cnt += 1
        push(heap, (t0, 3, cnt, EV_START, i, 0, 0, 0))

    completed = 0
    events = 0
    now = 0

    def transmit(i, seqs, t, ss, c):
        nonlocal cnt
        lf = L1_free[i]
        for seq in seqs:
            lf = (t if t > lf else lf) + d1
            cnt += 1
            push(heap, (lf, 1, cnt, EV_ARRIVAL, i, c, seq, ss))
        L1_free[i] = lf

    def rearm(i, s, c):
        nonlocal cnt
        dl = s.timer
        if dl is not None:
            tp = tpend[i]
            if tp is None or dl < tp:
                tgen[i] += 1
                tpend[i] = dl
                cnt += 1
                push(heap, (dl, 2, cnt, EV_TIMER, i, c, tgen[i], 0))

    while heap:
        t, _, _, kind, i, c, x, flag = pop(heap)
        if t > t_stop:
            now = t_stop
            break
        now = t
        events += 1
        if kind == EV_ARRIVAL:
            # packets of a finished connection still load the network
            live = c == cid[i]
            # lazy departures, earliest first
            while dq and dq[0] <= t:
                dt = dq.popleft()
                k = len(dq) + 1
                q_hist[k] = q_hist.get(k, 0) + dt - q_last_t
                q_last_t = dt
            k = len(dq)
            q_hist[k] = q_hist.get(k, 0) + t - q_last_t
            q_last_t = t
            q_seen[k] = q_seen.get(k, 0) + 1
            appearing += 1
            appear_by_seq[x] = appear_by_seq.get(x, 0) + 1
            if live:
                if not bd_on[i]:
                    bd_on[i] = True
                    bd_start[i] = t
                    bd_hist[bd_n] += t - bd_last
                    bd_last = t
                    bd_n += 1
                    bd_state[i] = bd_n
                qseen[i] += k
                npk[i] += 1
            if B is not None and k >= B:
                dropped += 1
                drops_by_seq[x] = drops_by_seq.get(x, 0) + 1
                if flag:
                    drops_ss += 1
                else:
                    drops_ca += 1
                if live:
                    snd[i].stats.drops += 1
                if trace is not None:
                    trace.append((t, c, "drop", x, k, None, None))
                continue
            dep2 = (t if t > last_dep2 else last_dep2) + d2
            last_dep2 = dep2
            dq.append(dep2)
            l2_busy += d2
            arr3 = dep2 + d_fwd
            lf3 = L3_free[i]
            dep3 = (arr3 if arr3 > lf3 else lf3) + d3
            L3_free[i] = dep3
            l3_soj += dep3 - arr3
            if not live:
                continue
            ackv = rcv[i].on_data(x)
            cnt += 1
            push(heap, (dep3 + ack_delay, 1, cnt, EV_ACK, i, c, ackv, 0))
        elif kind == EV_ACK:
            if c != cid[i]:
                continue
            s = snd[i]
            out = s.on_ack(x, t)
            if out:
                transmit(i, out, t, s.cwnd <= s.S, c)
            if s.done:
                completed += 1
                st = s.stats
                tos = st.tos
                records.append((
                    i, s.F, s.start_time, t, t - s.start_time, t - bd_start[i], bd_state[i], st.sent,
                    st.retransmissions, st.drops, st.to_count, *(tos.get(k, 0) for k in TO_CATEGORIES),
                    st.tds, st.frs, st.fr_retransmissions, st.td_sent, st.fr_new, st.fr_exit_sent,
                    st.td_time, st.to_time, qseen[i], npk[i], st.rtt_sum, st.rtt_count))
                for w, v in st.to_windows.items():
                    to_windows[w] = to_windows.get(w, 0) + v
                rtt_sum += st.rtt_sum
                rtt_cnt += st.rtt_count
                bd_hist[bd_n] += t - bd_last
                bd_last = t
                bd_n -= 1
                bd_on[i] = False
                cid[i] = 0
                snd[i] = None
                tpend[i] = None
                if completed >= nc:
                    break
                cnt += 1
                push(heap, (t + int(round(off_rng[i].exponential(off_mean))), 3, cnt, EV_START, i, 0, 0, 0))
            else:
                rearm(i, s, c)
        elif kind == EV_TIMER:
            if c != cid[i] or x != tgen[i]:
                continue
            tpend[i] = None
            s = snd[i]
            dl = s.timer
            if dl is None:
                continue
            if dl > t:
                rearm(i, s, c)
                continue
            out = s.on_timeout(t)
            if out:
                transmit(i, out, t, True, c)
            rearm(i, s, c)
        else:
            F = sizes[i].draw()
            conn_seq += 1
            c = conn_seq
            cid[i] = c
            s = NewRenoSender(F, W_R, RtoEstimator(min_rto, max_rto))
            if trace is not None:
                s.trace = _Tagged(trace, c)
            snd[i] = s
            rcv[i] = Receiver(F)
            qseen[i] = 0
            npk[i] = 0
            out = s.start(t)
            transmit(i, out, t, True, c)
            rearm(i, s, c)

    end = now
    while dq and dq[0] <= end:
        dt = dq.popleft()
        k = len(dq) + 1
        q_hist[k] = q_hist.get(k, 0) + dt - q_last_t
        q_last_t = dt
    k = len(dq)
    q_hist[k] = q_hist.get(k, 0) + end - q_last_t
    bd_hist[bd_n] += end - bd_last
    # service still owed to packets left in the buffer is not busy time yet
    l2_busy -= max(0, last_dep2 - end)

    conn = {name: np.array([r[j] for r in records]) if records else np.array([])
            for j, name in enumerate(CONN_FIELDS)}
    return SimMetrics(
        scenario=sc, T_ns=end, completed=completed, events=events, conn=conn,
        bd_time=np.array(bd_hist, dtype=float), q_time=_dense(q_hist), q_seen=_dense(q_seen),
        appearing=appearing, dropped=dropped, resident=len(dq), l2_busy_ns=l2_busy, l3_sojourn_ns=l3_soj,
        drops_by_seq=_dense(drops_by_seq), appear_by_seq=_dense(appear_by_seq),
        drops_ss=drops_ss, drops_ca=drops_ca, to_windows=dict(sorted(to_windows.items())),
        rtt_sum_ns=rtt_sum, rtt_count=rtt_cnt, wall_s=_time.perf_counter() - wall0,
    )


class _Tagged:
    """List-like adaptor that prefixes sender trace records with the connection id."""

    def __init__(self, sink, conn):
        self.sink = sink
        self.conn = conn

    def append(self, rec):
        t, kind, seq, W, S, theta = rec
        self.sink.append((t, self.conn, kind, seq, W, S, theta))


def _dense(d):
    if not d:
        return np.zeros(1)
    out = np.zeros(max(d) + 1)
    for k, v in d.items():
        out[k] = v
    return out
