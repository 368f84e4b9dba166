"""Engine behaviour: topology, sensing, timing, outcome evaluation and bookkeeping."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slucoex import phy
from slucoex.config import ConfigError, RunConfig
from slucoex.sim import Topology, World, evaluate_outcomes, place_nodes, run, step, wifi_closed_loop_power
from slucoex.sim.policies import FixedPolicy, default_policy
from slucoex.sim.topology import pair_path_loss


def oracle_outcomes(concurrent, topo, thr=phy.SinrThresholds()):
    """Brute force in linear milliwatts."""
    noise_mw = 10 ** (-174 / 10) * 20e6

    def pos(kind, node):
        return topo.slu_tx[node] if kind == "slu" else topo.wifi[node]

    def rx_mw(p, a, b):
        d = max(np.linalg.norm(np.asarray(a) - np.asarray(b)), 1.0)
        return 10 ** ((p - (32.4 + 20 * np.log10(5.8) + 17.3 * np.log10(d))) / 10)

    out = []
    for k, (kind, node, p) in enumerate(concurrent):
        rx = topo.slu_rx[node] if kind == "slu" else topo.ap_pos
        s = rx_mw(p, pos(kind, node), rx)
        i = sum(rx_mw(q, pos(kd, nd), rx) for j, (kd, nd, q) in enumerate(concurrent) if j != k)
        sinr = 10 * np.log10(s / (noise_mw + i))
        out.append(sinr >= (thr.slu_min if kind == "slu" else thr.wifi_min))
    return out


# -- topology -----------------------------------------------------------------

def test_place_nodes_deterministic():
    a, b = place_nodes(5, 1, 1, 50.0), place_nodes(5, 1, 1, 50.0)
    for f in ("slu_tx", "slu_rx", "wifi"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_place_nodes_bounds():
    t = place_nodes(3, 32, 44, 50.0)
    assert t.m_pairs == 32 and t.n_wifi == 44
    for arr in (t.slu_tx, t.slu_rx, t.wifi):
        assert np.all((arr >= 0) & (arr <= 400))
    assert all(0 < t.pair_distance(i) <= 50.0 for i in range(32))


@pytest.mark.parametrize("args", [(1, 1, 1, 0.0), (1, 0, 1, 50.0), (1, 1, 0, 50.0)])
def test_place_nodes_errors(args):
    with pytest.raises(ValueError):
        place_nodes(*args)


# -- outcome evaluation ---------------------------------------------------------

def line_topology(pairs, wifi, ap=(200.0, 200.0)):
    tx = np.array([p[0] for p in pairs], float)
    rx = np.array([p[1] for p in pairs], float)
    return Topology(400.0, np.array(ap, float), np.array(ap, float), tx, rx, np.array(wifi, float))


def test_single_slu_success():
    topo = line_topology([((10, 10), (20, 10))], [(390, 390)])
    # 10 m link at -40 dBm: -104.97 dBm received, SINR about -4 dB; at 0 dBm about 36 dB
    assert evaluate_outcomes([("slu", 0, 0.0)], topo) == [True]
    assert evaluate_outcomes([("slu", 0, -40.0)], topo) == [False]


def test_slu_plus_far_wifi_both_succeed():
    topo = line_topology([((10, 10), (20, 10))], [(180, 200)])
    conc = [("slu", 0, 0.0), ("wifi", 0, 10.0)]
    assert evaluate_outcomes(conc, topo) == oracle_outcomes(conc, topo)
    conc = [("slu", 0, -40.0), ("wifi", 0, 10.0)]
    res = evaluate_outcomes(conc, topo)
    assert res == oracle_outcomes(conc, topo)
    assert res[1] is True  # the SL-U transmitter is far from the AP


def test_two_nearby_pairs_collide():
    t = place_nodes(1, 32, 44, 50.0)
    # the two pairs whose transmitters are closest to each other's receivers
    best = min(itertools.permutations(range(32), 2),
               key=lambda ij: np.linalg.norm(t.slu_tx[ij[0]] - t.slu_rx[ij[1]]) +
               np.linalg.norm(t.slu_tx[ij[1]] - t.slu_rx[ij[0]]))
    conc = [("slu", best[0], 0.0), ("slu", best[1], 0.0)]
    res = evaluate_outcomes(conc, t)
    assert res == oracle_outcomes(conc, t)
    assert res == [False, False]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 50), st.lists(st.tuples(st.sampled_from(["slu", "wifi"]), st.integers(0, 7),
                                               st.floats(-40, 23)), min_size=1, max_size=4))
def test_outcomes_match_oracle(seed, conc):
    t = place_nodes(seed, 8, 8, 50.0)
    assert evaluate_outcomes(conc, t) == oracle_outcomes(conc, t)


# -- Wi-Fi closed loop ----------------------------------------------------------

def test_closed_loop_examples():
    assert wifi_closed_loop_power(23.0, 0.0, 6.0) == 23.0
    assert wifi_closed_loop_power(10.0, 3.0, 6.0) == 11.0
    assert wifi_closed_loop_power(10.0, 20.0, 6.0) == 9.0
    assert wifi_closed_loop_power(10.0, 7.0, 6.0) == 10.0


@given(st.floats(0, 23), st.floats(-30, 60), st.floats(0, 20))
def test_closed_loop_bounded_unit_step(p, sinr, target):
    q = wifi_closed_loop_power(p, sinr, target)
    assert 0.0 <= q <= 23.0 and abs(q - p) <= 1.0 + 1e-9


# -- stepping -------------------------------------------------------------------

def small_world(**kw):
    cfg = RunConfig(m_pairs=1, n_wifi=1, **kw)
    return World(cfg, traffic=False)


def test_empty_world_clock_only():
    w = small_world()
    step(w, 1)
    assert w.now == 1
    step(w, 999)
    assert w.now == 1000
    assert w.slu.attempts == w.wifi.attempts == 0


@pytest.mark.parametrize("seed", range(6))
def test_single_wifi_packet_timing(seed):
    w = small_world(seed=seed)
    w.wifi_live[0] = True
    w._start_csma(0)
    k = w.contender_at[w.M].state.backoff_counter
    w._predict(w.contender_at[w.M])
    step(w, 34 + 9 * k)
    assert w.wifi.attempts == 0
    step(w, 1)
    assert w.wifi.attempts == 1 and w.wifi_attempt[0].start == 34 + 9 * k


def test_strong_emission_makes_neighbours_busy():
    w = small_world(ed_threshold_dbm=-72.0)
    g = w.g_sense[:, 0]  # from SL-U Tx 0
    p = -60.0 - 10 * np.log10(g[w.M])  # received at the Wi-Fi user at exactly -60 dBm
    w._emit(0, p)
    step(w, 1)
    assert w.busy[w.M]
    assert w.energy_dbm(w.M) == pytest.approx(-60.0)


# -- whole runs -------------------------------------------------------------------

def test_run_deterministic():
    cfg = RunConfig(scheme="ccha", m_pairs=20, n_wifi=20, seed=1, horizon_s=0.3)
    assert run(cfg) == run(cfg)


def test_zero_users_rejected():
    with pytest.raises(ConfigError):
        RunConfig(m_pairs=0)
    with pytest.raises(ConfigError):
        RunConfig(n_wifi=0)


@settings(max_examples=6, deadline=None)
@given(st.sampled_from(["ccha", "ccha_t1", "t12_dra", "t1o_dra", "f_ccha", "random", "olpc"]),
       st.integers(1, 12), st.integers(1, 12), st.integers(0, 100))
def test_bookkeeping(scheme, m, n, seed):
    cfg = RunConfig(scheme=scheme, m_pairs=m, n_wifi=n, seed=seed, horizon_s=0.1)
    r = run(cfg)
    assert r.slu_offered == r.slu_success + r.slu_failed + r.slu_queued
    assert r.wifi_offered == r.wifi_success + r.wifi_failed + r.wifi_queued
    assert r.throughput_slu_bps == phy.throughput_bps(r.slu_success, 300, r.horizon_s)
    assert r.throughput_wifi_bps == phy.throughput_bps(r.wifi_success, 300, r.horizon_s)
    assert r.power_violations == 0
    if scheme in ("ccha", "ccha_t1", "f_ccha", "random", "olpc"):
        assert r.max_concurrent_slu <= 1 and r.collisions == 0


def test_f_ccha_uses_zero_dbm():
    cfg = RunConfig(scheme="f_ccha")
    assert cfg.fixed_slu_power == 0.0 and cfg.ed_threshold == -72.0
    pol = default_policy(cfg)
    assert isinstance(pol, FixedPolicy) and pol.power == 0.0


def test_olpc_policy_uses_own_link():
    cfg = RunConfig(scheme="olpc", m_pairs=4, n_wifi=2)
    t = place_nodes(cfg.seed, 4, 2, 50.0, key=(0,))
    pol = default_policy(cfg, t)
    noise = phy.noise_power_dbm(phy.LinkParams())
    for i in range(4):
        want = min(max(noise + 15.0 + pair_path_loss(t, i) + 3.0, -40.0), 0.0)
        assert pol.power_by_pair[i] == pytest.approx(want)
