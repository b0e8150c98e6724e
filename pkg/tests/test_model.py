import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcpengset._validation import InvalidParameters, UnsupportedConfiguration
from tcpengset.model import (buffer_rule, buffer_size, compute_flights, compute_on0, engset_probabilities,
                             evaluate, loss_rate, peak_rate, queue_stats, reference_rules, renormalize,
                             round_contributions, round_share, saturation_check, single_connection,
                             single_connection_queue_mean, solve)
from tcpengset.model.path import path_from_rtt0, path_params


@pytest.fixture
def special():
    return path_params(100e6, 1.5e6, 128e3, 0.3, 576, 40)


@pytest.fixture
def table6_path():
    return path_from_rtt0(100e6, 10e6, 2e6, 0.05)


# path algebra ------------------------------------------------------------------

def test_special_path(special):
    assert special.RTT0 * 1e3 == pytest.approx(341.83, abs=0.01)
    assert special.delta2 * 1e3 == pytest.approx(3.07, abs=0.005)
    assert special.delta_star == pytest.approx(0.036)
    assert special.beta_star == pytest.approx(9.5, abs=0.01)
    assert special.betas[1] == pytest.approx(111.3, abs=0.05)


def test_rtt0_formula():
    p = path_params(100e6, 10e6, 2e6, 0.04, 1500, 40)
    assert p.RTT0 == pytest.approx(0.04 + 1540 * 8 * (1 / 100e6 + 1 / 10e6 + 1 / 2e6), rel=1e-15)


def test_infinite_links_degenerate():
    p = path_params(math.inf, 10e6, math.inf, 0.0, 1500, 40)
    assert p.RTT0 == pytest.approx(1540 * 8 / 10e6)
    assert p.delta1 == 0 and p.delta3 == 0


@pytest.mark.parametrize("C,rtt,W,r,sat,Q", [(2e6, 0.05, 12, 0.67, True, 5), (2e6, 0.05, 8, 1.0, False, None),
                                             (10e6, 0.1, 44, 1.89, False, None)])
def test_saturation_table(C, rtt, W, r, sat, Q):
    p = path_from_rtt0(math.inf, C, math.inf, rtt)
    s = saturation_check(p, W)
    assert s.r == pytest.approx(r, abs=0.005)
    assert s.saturated is sat
    if sat:
        assert s.Q_sat == Q
        assert s.Q_wait == Q - 1


def test_delta_and_beta_for_2m():
    p = path_from_rtt0(math.inf, 2e6, math.inf, 0.05)
    assert p.delta == pytest.approx(0.006)
    assert p.beta_star == pytest.approx(8.33, abs=0.01)


# flights ----------------------------------------------------------------------

# (F, W_R, beta*, printed (m, n), printed flights); beta* picked inside each row's condition
TABLE3 = [
    (5, 44, 100, (2, 2), (2, 3)),
    (12, 44, 100, (3, 5), (2, 4, 6)),
    (22, 44, 100, (4, 7), (2, 4, 8, 8)),
    (36, 44, 100, (5, 5), (2, 4, 8, 16, 6)),
    (36, 8, 100, (6, 5), (2, 4, 8, 8, 8, 6)),
    (36, 12, 100, (5, 9), (2, 4, 8, 12, 10)),
    (36, 16, 8, (4, 21), (2, 4, 8, 22)),
    (80, 44, 100, (6, 17), (2, 4, 8, 16, 32, 18)),
    (120, 44, 100, (7, 13), (2, 4, 8, 16, 32, 44, 14)),
    (120, 20, 100, (9, 9), (2, 4, 8, 16) + (20,) * 4 + (10,)),
    (120, 8, 100, (17, 1), (2, 4) + (8,) * 14 + (2,)),
]

# rows where the printed cell disagrees with the stated flight algorithm; our values
TABLE3_DIVERGENT = [
    # printed (5, 49) with flights (2, 4, 8, 16, 22) which sum to 52
    (80, 44, 20, (5, 49), (2, 4, 8, 16, 50)),
    # printed (4, 65) with flights (2, 4, 8, 38) which sum to 52
    (80, 44, 9.5, (4, 65), (2, 4, 8, 66)),
    # printed (6, 17); the flight list gives n = 57
    (120, 44, 40, (6, 57), (2, 4, 8, 16, 32, 58)),
    # printed (6, 17); the flight list gives n = 89
    (120, 44, 20, (5, 89), (2, 4, 8, 16, 90)),
    # printed (16, 9); the listed 12 (x 8) sequence has 12 flights
    (120, 12, 100, (12, 9), (2, 4, 8) + (12,) * 8 + (10,)),
]


@pytest.mark.parametrize("F,W,beta,mn,flights", TABLE3)
def test_table3_rows(F, W, beta, mn, flights):
    s = compute_flights(F, W, beta)
    assert s.flights == flights
    assert (s.m, s.n) == mn


@pytest.mark.parametrize("F,W,beta,mn,flights", TABLE3_DIVERGENT)
def test_table3_divergent_rows_follow_algorithm(F, W, beta, mn, flights):
    s = compute_flights(F, W, beta)
    assert s.flights == flights
    assert (s.m, s.n) == mn


def test_special_flights(special):
    s = compute_flights(347, 44, special.beta_star)
    assert s.flights == (2, 4, 8, 333)
    assert (s.m, s.n) == (4, 332)
    assert s.saturated and s.L_SS == 86
    s8 = compute_flights(347, 8, special.beta_star)
    assert s8.flights == (2, 4) + (8,) * 42 + (5,)
    assert (s8.m, s8.n) == (45, 4)


@settings(max_examples=300, deadline=None)
@given(st.integers(3, 3000), st.integers(4, 128), st.floats(2.01, 500))
def test_flight_invariants(F, W, beta):
    s = compute_flights(F, W, beta)
    assert sum(s.flights) == F
    assert all(f <= max(W, F) for f in s.flights)
    assert s.m == len(s.flights) and s.n == s.flights[-1] - 1
    if not s.saturated:
        assert all(f <= W for f in s.flights)
    # slow-start doubling until capped
    for a, b in zip(s.flights, s.flights[1:-1]):
        assert b == min(2 * a, W) or b == W


def test_unsupported_flight_settings():
    for args in ((2, 44, 10), (12, 3, 10), (12, 44, 2)):
        with pytest.raises(UnsupportedConfiguration):
            compute_flights(*args)


def test_on0_special_with_printed_rtt0():
    # the text works from RTT0 rounded to 341.83 ms
    s = compute_flights(347, 44, 9.5)
    assert compute_on0(s, 0.34183, 0.036) * 1e3 == pytest.approx(13319.32, abs=1e-6)
    s8 = compute_flights(347, 8, 9.5)
    assert compute_on0(s8, 0.34183, 0.036) * 1e3 == pytest.approx(15526.35, abs=1e-6)


def test_on0_empty():
    from tcpengset.model.flights import FlightSchedule
    assert compute_on0(FlightSchedule((), 0, 0, False, None, 44), 0.1, 0.01) == 0


def test_renormalize_examples():
    m, n = renormalize(13.31932, 0.34183, 0.036, 9.5)
    assert (m, n) == (38, 9)
    assert (m * 0.34183 + n * 0.036) * 1e3 == pytest.approx(13313.54, abs=1e-6)
    assert renormalize(3 * 0.3, 0.3, 0.01, 9.5) == (3, 0)
    assert renormalize(0.3 + 2 * 0.01, 0.3, 0.01, 9) == (1, 2)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.001, 100), st.floats(0.01, 1), st.floats(0.0005, 0.05))
def test_renormalize_error_bound(ON0, RTT0, ds):
    beta = RTT0 / ds
    m, n = renormalize(ON0, RTT0, ds, beta)
    assert n <= math.floor(beta)
    if n < math.floor(beta):
        assert abs(ON0 - (m * RTT0 + n * ds)) < ds + 1e-9


def test_peak_rate_examples():
    assert peak_rate(347, 576, 13.31932) / 1e3 == pytest.approx(120.05, abs=0.005)
    assert peak_rate(347, 576, 15.52635) / 1e3 == pytest.approx(103.0, abs=0.05)
    assert peak_rate(10, 1500, 10 * 1500 * 8 / 2e6) == pytest.approx(2e6)


# state probabilities ----------------------------------------------------------

def generator_stationary(N, OFF, ON0, C, F, P):
    """Stationary vector of the (N+1)-state chain solved by dense linear algebra."""
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
    return np.linalg.lstsq(A, b, rcond=None)[0], s


@pytest.mark.parametrize("N", range(1, 9))
def test_engset_matches_generator_oracle(N):
    F, P, ON0 = 12, 1500, 0.18
    h0 = F * P * 8 / ON0
    for s in range(0, N + 1):
        for OFF in (0.05, 1.0, 7.0):
            C = (s + 0.5) * h0
            ref, s_ref = generator_stationary(N, OFF, ON0, C, F, P)
            sol = engset_probabilities(N, OFF, ON0, C, F, P)
            assert sol.s == s_ref == s
            assert np.max(np.abs(sol.probs - ref)) < 1e-10


def test_engset_explicit_four_state():
    # N=3, s=1, ON0=1 s, OFF=1 s, C/(F*P*8) = 1/s
    F, P = 1, 1
    C = 8.0 * 1.5
    sol = engset_probabilities(3, 1.0, 1.0, C, F, P)
    assert sol.s == 1
    ref, _ = generator_stationary(3, 1.0, 1.0, C, F, P)
    assert np.allclose(sol.probs, ref, atol=1e-12, rtol=0)


def test_engset_single_source():
    sol = engset_probabilities(1, 1.0, 0.25, 10e6, 12, 1500)
    assert sol.probs[1] == pytest.approx(0.25 / 1.25)
    assert sol.probs[0] == pytest.approx(1.0 / 1.25)


def test_binomial_limit():
    from math import comb
    N, OFF, ON0 = 6, 1.0, 0.18
    sol = solve(N, OFF, ON0, 1e12, 12, 1500)
    a = ON0 / (ON0 + OFF)
    ref = [comb(N, j) * a**j * (1 - a) ** (N - j) for j in range(N + 1)]
    assert np.allclose(sol.probs, ref, rtol=1e-12)
    assert sol.h1 == pytest.approx(sol.h0) and sol.h2 == pytest.approx(sol.h0)
    assert sol.rho == pytest.approx(sol.rho0)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 400), st.floats(0.05, 10), st.floats(0.01, 5))
def test_solution_invariants(N, OFF, ON0):
    sol = solve(N, OFF, ON0, 10e6, 12, 1500)
    p = sol.probs
    assert abs(p.sum() - 1) < 1e-12 and (p >= 0).all()
    j = np.arange(N + 1)
    assert sol.avg_active == pytest.approx((j * p).sum(), rel=1e-12, abs=1e-15)
    assert sol.P_OL == pytest.approx(p[sol.s + 1:].sum(), abs=1e-15)
    assert sol.n_UL + sol.n_OL == pytest.approx(sol.avg_active, rel=1e-12, abs=1e-15)
    assert sol.rho <= 1 + 1e-12
    assert sol.h2 <= 10e6 * (1 + 1e-12)
    assert sol.ON * sol.h == pytest.approx(12 * 1500 * 8, rel=1e-12)


def test_monotone_in_n(table6_path):
    prev_h, prev_L = math.inf, -1
    for N in range(20, 200, 7):
        r = evaluate(table6_path, 44, 12, 1.0, N=N, B=200)
        assert r.sol.h <= prev_h * (1 + 1e-12)
        assert r.L >= prev_L - 1e-15
        prev_h, prev_L = r.sol.h, r.L


# table values -------------------------------------------------------------------

@pytest.mark.parametrize("N,h,L", [(82, 547.8, 0.03), (98, 344.6, 4.91), (115, 219.5, 22.0), (134, 154.9, 38.3)])
def test_table6_theory(table6_path, N, h, L):
    r = evaluate(table6_path, 44, 12, 1.0, N=N, B=200)
    assert r.sol.h / 1e3 == pytest.approx(h, abs=0.1)
    assert 100 * r.L == pytest.approx(L, abs=0.1)


def test_table10_on(table6_path):
    r = evaluate(table6_path, 44, 12, 1.0, N=134)
    assert r.sol.ON * 1e3 == pytest.approx(929.6, abs=0.5)


@pytest.mark.parametrize("B,L", list(zip((50, 75, 100, 150, 200, 300, 500, 750),
                                    (78.7, 69.8, 61.9, 48.7, 38.3, 23.7, 9.1, 2.7))))
def test_table10_loss_vs_buffer(table6_path, B, L):
    r = evaluate(table6_path, 44, 12, 1.0, N=134, B=B)
    assert 100 * r.L == pytest.approx(L, abs=0.1)


def test_rho0_of_table6(table6_path):
    assert evaluate(table6_path, 44, 12, 1.0, N=82).sol.rho0 == pytest.approx(1.001, abs=5e-4)
    assert evaluate(table6_path, 44, 12, 1.0, N=134).sol.rho0 == pytest.approx(1.635, abs=5e-4)


def test_load_target_gives_n(table6_path):
    assert evaluate(table6_path, 44, 12, 1.0, rho0_target=1.0).sol.N == 82
    assert evaluate(table6_path, 44, 12, 1.0, rho0_target=1.635).sol.N == 134
    with pytest.raises(InvalidParameters):
        evaluate(table6_path, 44, 12, 1.0, N=3, rho0_target=1.0)


# queue, loss and buffer ------------------------------------------------------------

def test_queue_examples():
    q = queue_stats(0.5, 2, 3, 0.01, (0.5 - 0.03) / 2, 0.001, 0.8)
    assert q.RTT == pytest.approx((0.5 - 0.03) / 2) and q.Q == 0
    q = queue_stats(2 * (0.1 + 10 * 0.001) + 3 * 0.01, 2, 3, 0.01, 0.1, 0.001, 0.5)
    assert q.Q == pytest.approx(10)
    assert q.eta == pytest.approx(20)
    q = queue_stats(2 * (0.1 + 5 * 0.001), 2, 0, 0.01, 0.1, 0.001, 0.5)
    assert q.eta == pytest.approx(10)


def test_loss_and_buffer_examples(table6_path):
    assert loss_rate(0.7, 12.0, 0) == 0.7
    assert buffer_size(0.7, 12.0, 0.7) == 0
    assert buffer_size(1.0, 100.0, 0.01) == math.ceil(100 * math.log(100)) == 461
    r = evaluate(table6_path, 44, 12, 1.0, N=134, B=200)
    assert buffer_size(r.sol.rho, r.queue.eta, r.L) == 200


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.1, 1000), st.integers(1, 5000))
def test_loss_buffer_inverse(rho, eta, B):
    L = loss_rate(rho, eta, B)
    if L > 1e-300:
        assert buffer_size(rho, eta, L) == B


def test_queue_survival_bound(table6_path):
    r = evaluate(table6_path, 44, 12, 1.0, N=134)
    q = r.queue
    assert q.eta == pytest.approx(q.Q / q.rho)
    for x in (0, 1, 10, 100):
        assert q.survival(x) <= q.rho <= 1


def test_bad_queue_inputs():
    with pytest.raises(InvalidParameters):
        queue_stats(1.0, 0, 0, 0.01, 0.1, 0.001, 0.5)
    with pytest.raises(InvalidParameters):
        loss_rate(0.5, 1.0, -1)


def test_buffer_rule_reports_reference_rules():
    refs = reference_rules(2e6)
    assert refs == {"600ms-rule": 100, "BDP-rule": 50}
    br = buffer_rule(10e6)
    assert br.recommended % 10 == 0 and br.recommended >= br.raw
    assert len(br.rows) == 16


# single-connection queue mean ---------------------------------------------------------

def test_round_share_first_round():
    assert round_share(1, 0) == 3
    assert round_share(2, 0) == 8
    assert round_share(4, 0) == 24


def test_special_round_contributions(special):
    assert round_contributions(347, 44, special.beta_star) == [3, 8, 24, 11025]
    assert 36 * 38 + 37 * (347 - 86) == 11025


@pytest.mark.parametrize("W,Q", [(44, 21.7), (12, 3.3)])
def test_special_queue_mean(special, W, Q):
    one = single_connection(special, W, 347)
    q = single_connection_queue_mean(347, W, special.beta_star, special.delta_star, one.ON0, 5.0)
    assert q == pytest.approx(Q, abs=0.05)
