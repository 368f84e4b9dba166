"""A reduced world whose optimal slot policy can be enumerated exactly.

Two SL-U pairs and one Wi-Fi user around an AP. Pair 0 is granted a slot at
every step and decides whether to use it and at what power. Pair 1 stays
silent and only reports the energy it senses, so the measurement state is
(pair 0's previous power, energy at pair 1). The Wi-Fi user transmits at one
of a few power levels (or not at all), drawn independently at every step.
Rewards use the same slot reward as the full engine, evaluated with the
closed-form SINR of the three links.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import phy
from ..seeding import stream
from .agent import HierarchicalAgent, encode_state, extend, linear_epsilon
from .rewards import slot_reward

FLOOR_DBM = -120.0


@dataclass(frozen=True)
class ToyState:
    prev_power: float
    channel_energy: tuple


@dataclass(frozen=True)
class ToyWorld:
    slu_tx: tuple = ((0.0, 0.0), (200.0, 100.0))
    slu_rx: tuple = ((5.0, 0.0), (205.0, 100.0))
    wifi: tuple = (250.0, 150.0)
    ap: tuple = (-150.0, 0.0)
    wifi_levels: tuple = (None, 5.0, 15.0, 23.0)  # None: Wi-Fi silent
    powers: tuple = tuple(-40.0 + 5.0 * i for i in range(9))
    beta: float = 0.8
    bandwidth: float = phy.BANDWIDTH_HZ
    freq: float = phy.CARRIER_FREQ_GHZ
    thresholds: phy.SinrThresholds = phy.SinrThresholds()
    steps: int = 10

    def _pl(self, a, b) -> float:
        d = max(float(np.hypot(a[0] - b[0], a[1] - b[1])), 1.0)
        return phy.path_loss_db(self.freq, d)

    @property
    def noise(self) -> float:
        return phy.noise_power_dbm(phy.LinkParams(self.freq, self.bandwidth))

    def observe(self, level: int, prev_power: float) -> ToyState:
        pw = self.wifi_levels[level]
        energy = FLOOR_DBM if pw is None else max(pw - self._pl(self.wifi, self.slu_tx[1]), FLOOR_DBM)
        return ToyState(prev_power, (energy,))

    def reward(self, level: int, g: int, a: int) -> float:
        if g == 0:
            return 0.0
        p = self.powers[a]
        pw = self.wifi_levels[level]
        signal = p - self._pl(self.slu_tx[0], self.slu_rx[0])
        interf = [] if pw is None else [pw - self._pl(self.wifi, self.slu_rx[0])]
        eta_s = phy.sinr_db(signal, interf, self.noise)
        eta_w = None
        if pw is not None:
            eta_w = phy.sinr_db(pw - self._pl(self.wifi, self.ap), [p - self._pl(self.slu_tx[0], self.ap)],
                                self.noise)
        scale = phy.default_rate_scale(self.bandwidth)
        return slot_reward(eta_s, eta_w, self.thresholds, self.beta, self.bandwidth, scale)[0]

    def next_prev(self, g: int, a: int) -> float:
        return self.powers[a] if g == 1 else FLOOR_DBM

    def states(self) -> list[tuple[int, float]]:
        """Every reachable (Wi-Fi level, previous power) pair."""
        prevs = (FLOOR_DBM,) + tuple(self.powers)
        return [(w, p) for w in range(len(self.wifi_levels)) for p in prevs]


@dataclass(frozen=True)
class OraclePolicy:
    subgoal: dict  # (level, prev) -> g
    action: dict  # (level, prev) -> a, meaningful when g = 1
    q1: np.ndarray
    q2: np.ndarray


def solve_oracle(world: ToyWorld, gamma: float = 0.8, tol: float = 1e-12, max_iter: int = 10_000) -> OraclePolicy:
    """Value iteration for both controllers over the enumerated state space."""
    states = world.states()
    index = {s: i for i, s in enumerate(states)}
    nW, nA = len(world.wifi_levels), len(world.powers)
    R = np.array([[[world.reward(w, g, a) for a in range(nA)] for g in (0, 1)] for w, _ in states])
    # successor states for each (g, a): the level is redrawn uniformly
    succ = np.array([[[[index[(w2, world.next_prev(g, a))] for w2 in range(nW)] for a in range(nA)]
                      for g in (0, 1)] for _ in states])
    q1 = np.zeros((len(states), 2, nA))
    for _ in range(max_iter):
        v1 = q1.max(axis=2)  # (S, 2)
        nxt = np.stack([v1[succ[:, g], g].mean(axis=-1) for g in (0, 1)], axis=1)
        new = R + gamma * nxt
        done = np.max(np.abs(new - q1)) < tol
        q1 = new
        if done:
            break
    a_star = q1.argmax(axis=2)  # (S, 2), lowest index on ties
    r_star = np.take_along_axis(R, a_star[..., None], axis=2)[..., 0]
    succ_star = np.take_along_axis(succ, a_star[:, :, None, None], axis=2)[:, :, 0, :]
    q2 = np.zeros((len(states), 2))
    for _ in range(max_iter):
        v2 = q2.max(axis=1)
        new = r_star + gamma * v2[succ_star].mean(axis=-1)
        done = np.max(np.abs(new - q2)) < tol
        q2 = new
        if done:
            break
    g_star = q2.argmax(axis=1)
    subgoal = {s: int(g_star[i]) for i, s in enumerate(states)}
    action = {s: int(a_star[i, g_star[i]]) for i, s in enumerate(states)}
    return OraclePolicy(subgoal, action, q1, q2)


def greedy_decisions(agent: HierarchicalAgent, world: ToyWorld) -> dict:
    out = {}
    for level, prev in world.states():
        s = encode_state(world.observe(level, prev))
        g = int(np.argmax(agent.q2.forward(s)))
        a = int(np.argmax(agent.q1.forward(extend(s, g))))
        out[(level, prev)] = (g, a)
    return out


def match_rate(agent: HierarchicalAgent, world: ToyWorld, oracle: OraclePolicy) -> float:
    """Share of states where the greedy (g, a) equals the oracle's; a only counts when g = 1."""
    dec = greedy_decisions(agent, world)
    hits = 0
    for s, (g, a) in dec.items():
        if g == oracle.subgoal[s] and (g == 0 or a == oracle.action[s]):
            hits += 1
    return hits / len(dec)


def train_toy(world: ToyWorld, episodes: int = 500, seed: int = 0, gamma: float = 0.8,
              hidden: Sequence[int] = (256, 256, 512), dtype="float32", **agent_kw) -> HierarchicalAgent:
    """Run the nested two-level loop on the toy world."""
    agent = HierarchicalAgent(2, len(world.powers), hidden, gamma=gamma, seed=seed, dtype=dtype, **agent_kw)
    rng = stream("toy", seed)
    for e in range(episodes):
        eps = linear_epsilon(e, episodes)
        level = int(rng.integers(0, len(world.wifi_levels)))
        prev = FLOOR_DBM
        for t in range(world.steps):
            s = encode_state(world.observe(level, prev))
            g = int(rng.integers(0, 2)) if rng.random() < eps else int(np.argmax(agent.q2.forward(s)))
            q1 = agent.q1.forward(extend(s, g))
            a = int(rng.integers(0, len(world.powers))) if rng.random() < eps else int(np.argmax(q1))
            r = world.reward(level, g, a)
            prev = world.next_prev(g, a)
            level = int(rng.integers(0, len(world.wifi_levels)))
            s2 = encode_state(world.observe(level, prev))
            agent.observe(s, g, a, r, s2, t == world.steps - 1)
    return agent
