"""Acceptance checks: one test per criterion, each recording a pass/fail line.

The slow checks run full simulations or training; they are marked ``slow`` but
are part of the default run. Deselect them with ``-m "not slow"``.
"""

import subprocess
import sys
import time
from statistics import mean

import numpy as np
import pytest

from slucoex import ccha, mac, phy
from slucoex.cli.matrix import run_cell
from slucoex.config import RunConfig, USER_GRID
from slucoex.rl.agent import q_update, sync_target, td_targets
from slucoex.rl.network import QNetwork
from slucoex.rl.replay import Batch, ReplayBuffer
from slucoex.rl.toy import ToyWorld, match_rate, solve_oracle, train_toy
from slucoex.sim import World

ACCESS = ("ccha", "ccha_t1", "t12_dra", "t1o_dra")
POWER = ("cghdrl", "dqn", "f_ccha", "random", "olpc")


def report(verdict, n, ok, detail, elapsed):
    verdict(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}")


# -- 1: closed-form values ------------------------------------------------------------

def test_criterion_1_closed_form(verdict):
    t0 = time.perf_counter()
    pl = phy.path_loss_db(5.8, 10)
    noise = phy.noise_power_dbm(phy.LinkParams(bandwidth=20e6, noise_psd=-174.0))
    j = phy.jain_index([1, 3])
    rate = phy.shannon_rate(20e6, 15.0) / 1e6
    elapsed = time.perf_counter() - t0
    ok = (abs(pl - 64.97) <= 0.01 and abs(noise + 100.99) <= 0.01 and j == 0.8
          and abs(rate - 100.56) <= 0.01 and elapsed < 1.0)
    report(verdict, 1, ok, f"path loss {pl:.4f} dB, noise {noise:.4f} dBm, jain {j}, rate {rate:.4f} Mbps",
           elapsed)
    assert ok


# -- 2: protocol timing -------------------------------------------------------------

def test_criterion_2_timing(verdict):
    t0 = time.perf_counter()
    p1 = mac.capc_lookup(1)
    lbt = {}
    for k in range(8):
        s = mac.lbt1_start(mac.lbt1_idle(p1, 7), k)
        lbt[k] = ccha.run_lbt1(s, ccha.IntervalTrace(), 0, 10_000)
    wifi = {}
    for seed in range(16):
        w = World(RunConfig(m_pairs=1, n_wifi=1, seed=seed), traffic=False)
        w.wifi_live[0] = True
        w._start_csma(0)
        k = w.contender_at[w.M].state.backoff_counter
        w._predict(w.contender_at[w.M])
        w.advance_to(34 + 9 * k + 1)
        wifi[k] = w.wifi_attempt[0].start if w.wifi.attempts == 1 else None
    elapsed = time.perf_counter() - t0
    ok_lbt = all(lbt[k] == 34 + 9 * k for k in range(8))
    ok_wifi = all(v == 34 + 9 * k for k, v in wifi.items())
    ok = ok_lbt and ok_wifi and elapsed < 1.0
    report(verdict, 2, ok, f"type 1 grants {[lbt[k] for k in range(8)]}, Wi-Fi starts "
                           f"{sorted(wifi.items())}", elapsed)
    assert ok


# -- 3: structural collision-freedom --------------------------------------------------

@pytest.mark.slow
def test_criterion_3_ccha_structure(verdict):
    t0 = time.perf_counter()
    runs = {}
    worst_run = 0.0
    for scheme, seeds in (("ccha", (1,)), ("t1o_dra", (1, 2, 3, 4, 5))):
        for seed in seeds:
            t = time.perf_counter()
            runs[scheme, seed] = World(RunConfig(scheme=scheme, m_pairs=32, n_wifi=44, seed=seed,
                                                 horizon_s=10.0)).run()
            worst_run = max(worst_run, time.perf_counter() - t)
    elapsed = time.perf_counter() - t0
    c = runs["ccha", 1]
    t1o_rate = mean(runs["t1o_dra", s].collisions / 10.0 for s in range(1, 6))
    ok = c.collisions == 0 and c.max_concurrent_slu <= 1 and t1o_rate >= 1.0 and worst_run < 60.0
    report(verdict, 3, ok, f"CCHA overlaps {c.collisions} (max concurrent SL-U {c.max_concurrent_slu}), "
                           f"T1O+DRA {t1o_rate:.1f} overlapping transmissions/s, slowest run {worst_run:.1f} s",
           elapsed)
    assert ok


# -- 4: access-scheme trends ------------------------------------------------------------

@pytest.mark.slow
def test_criterion_4_access_trends(verdict):
    t0 = time.perf_counter()
    seeds = range(1, 6)
    metrics = ("prr_slu", "throughput_slu_bps", "jain")
    avg = {}
    for m, n in USER_GRID:
        for scheme in ACCESS:
            rs = [World(RunConfig(scheme=scheme, m_pairs=m, n_wifi=n, seed=s, horizon_s=2.0)).run() for s in seeds]
            avg[scheme, m, n] = {k: mean(getattr(r, k) for r in rs) for k in metrics}
    elapsed = time.perf_counter() - t0
    problems = []
    for scheme in ACCESS:
        prr = [avg[scheme, m, n]["prr_slu"] for m, n in USER_GRID]
        if any(b > a for a, b in zip(prr, prr[1:])):
            problems.append(f"{scheme} PRR rises with users {[round(p, 4) for p in prr]}")
    for m, n in USER_GRID:
        cell = {s: avg[s, m, n] for s in ACCESS}
        for k in metrics:
            for other in ("ccha_t1", "t12_dra"):
                if cell["ccha"][k] < cell[other][k]:
                    problems.append(f"({m},{n}) {k}: ccha {cell['ccha'][k]:.4g} < {other} {cell[other][k]:.4g}")
            low = min(cell[s][k] for s in ACCESS)
            if cell["t1o_dra"][k] > low:
                problems.append(f"({m},{n}) {k}: t1o_dra {cell['t1o_dra'][k]:.4g} above minimum {low:.4g}")
    for (scheme, m, n), v in sorted(avg.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        verdict(f"  info: ({m},{n}) {scheme:8s} prr_slu {v['prr_slu']:.4f} "
                f"thr_slu {v['throughput_slu_bps'] / 1e3:.1f} kb/s jain {v['jain']:.4f}")
    for p in problems:
        verdict(f"  info: violated: {p}")
    ok = not problems and elapsed < 15 * 60
    report(verdict, 4, ok, f"{len(problems)} ordering violations over {len(USER_GRID)} grid points, 5 seeds",
           elapsed)
    assert ok


# -- 5: learning mechanics ---------------------------------------------------------------

def _numeric_grads(net, X, y, a, h=1e-6):
    out = []
    for p in net.W + net.b:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            lp = net.loss_and_grads(X, y, a)[0]
            p[idx] = old - h
            lm = net.loss_and_grads(X, y, a)[0]
            p[idx] = old
            g[idx] = (lp - lm) / (2 * h)
        out.append(g)
    return out


def test_criterion_5_rl_mechanics(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    # gradient check on random small networks
    worst = 0.0
    for probe in range(20):
        net = QNetwork(4, 3, (6, 5, 4), seed=probe)
        for b in net.b:
            b[:] = rng.normal(scale=0.1, size=b.shape)
        X, y, a = rng.normal(size=(5, 4)), rng.normal(size=5), rng.integers(0, 3, 5)
        _, gW, gb = net.loss_and_grads(X, y, a)
        ana = np.concatenate([g.ravel() for g in gW + gb])
        num = np.concatenate([g.ravel() for g in _numeric_grads(net, X, y, a)])
        worst = max(worst, np.linalg.norm(ana - num) / (np.linalg.norm(ana) + np.linalg.norm(num)))
    ok_grad = worst < 1e-4
    # FIFO replay at capacity 1000
    buf = ReplayBuffer(1000)
    for i in range(1500):
        buf.push([float(i)], 0, float(i), [0.0], False)
    ok_fifo = len(buf) == 1000 and buf.ids() == list(range(500, 1500))
    # target sync changes the TD targets
    q, tgt = QNetwork(2, 2, (4,), seed=1), QNetwork(2, 2, (4,), seed=2)
    b = Batch(np.array([[0.0, 1.0]]), np.array([0]), np.array([0.0]), np.array([[1.0, 0.0]]), np.array([False]))
    before = td_targets(tgt, b, 0.8)
    sync_target(q, tgt, 100, 100)
    after = td_targets(tgt, b, 0.8)
    ok_sync = not np.array_equal(before, after) and np.isclose(after[0], 0.8 * q.forward(np.array([1.0, 0.0])).max())
    # two-state MDP against value iteration
    r = np.array([[1.0, 0.0], [0.0, 2.0]])
    nxt = np.array([[0, 1], [1, 0]])
    v = np.zeros((2, 2))
    for _ in range(2000):
        v = r + 0.8 * v.max(axis=1)[nxt]
    eye = np.eye(2)
    qn = QNetwork(2, 2, (), init=False)
    tn = qn.copy()
    mdp = Batch(np.array([eye[0], eye[0], eye[1], eye[1]]), np.array([0, 1, 0, 1]), r.ravel(),
                np.array([eye[nxt[s, a]] for s in (0, 1) for a in (0, 1)]), np.zeros(4, bool))
    for k in range(1, 20_001):
        q_update(qn, tn, mdp, 0.8, lr=1e-2)
        sync_target(qn, tn, k, 20)
    gap = float(np.max(np.abs(qn.forward(eye) - v)))
    elapsed = time.perf_counter() - t0
    ok = ok_grad and ok_fifo and ok_sync and gap < 1e-3 and elapsed < 60
    report(verdict, 5, ok, f"gradient rel. err {worst:.2e}, FIFO {ok_fifo}, sync changes targets {ok_sync}, "
                           f"MDP gap {gap:.2e}", elapsed)
    assert ok


# -- 6: toy oracle ---------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_toy_oracle(verdict):
    t0 = time.perf_counter()
    world = ToyWorld()
    oracle = solve_oracle(world)
    rates = [match_rate(train_toy(world, episodes=500, seed=s), world, oracle) for s in range(3)]
    elapsed = time.perf_counter() - t0
    avg = mean(rates)
    ok = avg >= 0.8 and elapsed < 600
    report(verdict, 6, ok, f"match {avg:.3f} (per seed {', '.join(f'{x:.3f}' for x in rates)}) over "
                           f"{len(world.states())} states after 500 episodes", elapsed)
    assert ok


# -- 7: power-control ordering ----------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_power_ordering(verdict):
    t0 = time.perf_counter()
    seeds = (1, 2, 3)
    system = ("prr_total", "throughput_total_bps", "jain")
    slu = ("prr_slu", "throughput_slu_bps")
    avg = {}
    for scheme in POWER:
        rs = [run_cell(RunConfig(scheme=scheme, m_pairs=32, n_wifi=44, seed=s, horizon_s=1.0, episodes=10))
              for s in seeds]
        avg[scheme] = {k: mean(getattr(r, k) for r in rs) for k in system + slu}
    elapsed = time.perf_counter() - t0
    problems = []
    for k in system:
        if not avg["cghdrl"][k] >= avg["dqn"][k]:
            problems.append(f"{k}: cghdrl {avg['cghdrl'][k]:.4g} < dqn {avg['dqn'][k]:.4g}")
        if not avg["dqn"][k] >= avg["f_ccha"][k]:
            problems.append(f"{k}: dqn {avg['dqn'][k]:.4g} < f_ccha {avg['f_ccha'][k]:.4g}")
    for s in ("random", "olpc"):
        if not avg[s]["jain"] <= avg["f_ccha"]["jain"]:
            problems.append(f"jain: {s} {avg[s]['jain']:.4g} > f_ccha {avg['f_ccha']['jain']:.4g}")
    for s in POWER:
        v = avg[s]
        verdict(f"  info: {s:7s} prr_total {v['prr_total']:.4f} thr_total {v['throughput_total_bps'] / 1e3:.1f} kb/s "
                f"jain {v['jain']:.4f} prr_slu {v['prr_slu']:.4f} thr_slu {v['throughput_slu_bps'] / 1e3:.2f} kb/s")
    for p in problems:
        verdict(f"  info: violated: {p}")
    ok = not problems and elapsed < 30 * 60
    report(verdict, 7, ok, f"{len(problems)} ordering violations, 3 seeds, 10 training episodes", elapsed)
    assert ok


# -- 8: determinism ------------------------------------------------------------------------

def test_criterion_8_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    cases = {
        "access": ["--scheme", "t1o_dra", "--m-pairs", "20", "--n-wifi", "20", "--seed", "3", "--horizon-s", "0.5"],
        "learner": ["--scheme", "cghdrl", "--m-pairs", "4", "--n-wifi", "4", "--seed", "2", "--horizon-s", "0.2",
                    "--episodes", "2", "--episode-cots", "10", "--hidden", "32,32,32"],
    }
    same = {}
    for name, args in cases.items():
        outs = []
        for i in range(2):
            out = tmp_path / f"{name}{i}.csv"
            subprocess.run([sys.executable, "-m", "slucoex.cli.main", "run", *args, "--out", str(out)], check=True)
            outs.append(out.read_bytes())
        same[name] = outs[0] == outs[1]
    elapsed = time.perf_counter() - t0
    ok = all(same.values()) and elapsed < 120
    report(verdict, 8, ok, "byte-identical CSV: " + ", ".join(f"{k} {v}" for k, v in same.items()), elapsed)
    assert ok
