"""Two-level deep Q-learning for slot access (upper) and transmit power (lower).

The upper controller picks a subgoal from the measurement state: use the
granted slot (1) or skip it (0). The lower controller picks a power index
from the measurement state extended with the subgoal. One subgoal lasts one
slot, so both controllers receive one transition per granted slot.

Training is centralised: transitions from every pair go to the BS-side
learner, and pairs act on an immutable snapshot of the networks that is
refreshed every model-update period of simulated time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..seeding import stream
from .network import DEFAULT_HIDDEN, QNetwork
from .replay import Batch, ReplayBuffer
from .rewards import extrinsic_reward

DBM_LO, DBM_HI = -120.0, 30.0
WARMUP = 256


def normalize_dbm(x) -> np.ndarray:
    """Affine map of [-120, 30] dBm onto [-1, 1], clipped."""
    x = np.clip(np.asarray(x, dtype=float), DBM_LO, DBM_HI)
    return 2.0 * (x - DBM_LO) / (DBM_HI - DBM_LO) - 1.0


def encode_state(state) -> np.ndarray:
    """Network input for a measurement state (previous power, channel energies)."""
    return normalize_dbm(np.concatenate(([state.prev_power], state.channel_energy)))


def extend(s: np.ndarray, g: int) -> np.ndarray:
    return np.concatenate((s, [float(g)]))


def epsilon_greedy(q_values: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Argmax with the lowest index winning ties; uniform with probability ``eps``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps}")
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(0, len(q_values)))
    return int(np.argmax(q_values))


def select_subgoal(q2: QNetwork, s: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    return epsilon_greedy(q2.forward(s), eps, rng)


def select_action(q1: QNetwork, s: np.ndarray, g: int, eps: float, rng: np.random.Generator) -> int:
    return epsilon_greedy(q1.forward(extend(s, g)), eps, rng)


def td_targets(target: QNetwork, batch: Batch, gamma: float) -> np.ndarray:
    nxt = target.forward(batch.s2).max(axis=1)
    return batch.r + gamma * np.where(batch.done, 0.0, nxt)


def q_update(q: QNetwork, target: QNetwork, batch: Optional[Batch], gamma: float = 0.8,
             lr: float = 1e-3) -> Optional[float]:
    """One Adam step on the squared TD error of the taken actions."""
    if batch is None or len(batch) == 0:
        return None
    y = td_targets(target, batch, gamma)
    return q.train_batch(batch.s, y, batch.a, lr)


def sync_target(q: QNetwork, target: QNetwork, step: int, every: int) -> bool:
    """Copy ``q`` into ``target`` when ``step`` is a multiple of ``every``."""
    if every < 1:
        raise ValueError("sync period must be >= 1")
    if step % every == 0:
        target.load_params_from(q)
        return True
    return False


def subgoal_termination(t: int, slot_boundary: int) -> bool:
    """A subgoal ends at the slot boundary that closes its slot."""
    return t >= slot_boundary


def _frozen_copy(net: QNetwork) -> QNetwork:
    c = net.copy()
    for arr in c.W + c.b:
        arr.setflags(write=False)
    c.mW = c.vW = c.mb = c.vb = []
    return c


@dataclass(frozen=True)
class ModelSnapshot:
    """Read-only copy of the learner's networks as pushed to the users."""

    nets: tuple
    version: int
    pushed_at: int  # simulated us


def distribute_model(agent, users: list, sim_time: int, last_push: Optional[int],
                     period_us: int = 100_000) -> tuple[list, Optional[int]]:
    """Push a fresh snapshot to every user once ``period_us`` has passed since the last push."""
    if last_push is not None and sim_time - last_push < period_us:
        return users, last_push
    snap = agent.snapshot(sim_time)
    return [snap] * len(users), sim_time


class HierarchicalAgent:
    """Upper Q-network over subgoals and lower Q-network over power levels."""

    def __init__(self, state_dim: int, n_actions: int, hidden: Sequence[int] = DEFAULT_HIDDEN,
                 gamma: float = 0.8, lr: float = 1e-3, capacity: int = 1000, batch_size: int = 256,
                 warmup: int = WARMUP, sync_every: int = 100, seed: int = 0, dtype="float64"):
        rng = stream("agent-init", seed)
        self.q2 = QNetwork(state_dim, 2, hidden, rng=rng, dtype=dtype)
        self.q1 = QNetwork(state_dim + 1, n_actions, hidden, rng=rng, dtype=dtype)
        self.q2_target = self.q2.copy()
        self.q1_target = self.q1.copy()
        self.d1 = ReplayBuffer(capacity)
        self.d2 = ReplayBuffer(capacity)
        self.gamma, self.lr = gamma, lr
        self.batch_size, self.warmup, self.sync_every = batch_size, warmup, sync_every
        self.updates1 = self.updates2 = 0
        self.snapshots = 0
        self.rng = stream("agent-replay", seed)
        self.state_dim, self.n_actions = state_dim, n_actions

    def networks(self) -> dict:
        return {"upper": self.q2, "lower": self.q1}

    def snapshot(self, sim_time: int = 0) -> ModelSnapshot:
        self.snapshots += 1
        return ModelSnapshot((_frozen_copy(self.q2), _frozen_copy(self.q1)), self.snapshots, sim_time)

    @staticmethod
    def act(snap: ModelSnapshot, s: np.ndarray, eps: float, rng: np.random.Generator) -> tuple[int, int]:
        q2, q1 = snap.nets
        g = select_subgoal(q2, s, eps, rng)
        a = select_action(q1, s, g, eps, rng)
        return g, a

    def observe(self, s, g: int, a: int, r: float, s2, done: bool) -> None:
        # One slot is one subgoal episode, so the extrinsic reward is the slot's reward.
        self.d1.push(extend(s, g), a, r, extend(s2, g), done)
        self.d2.push(s, g, extrinsic_reward([r]), s2, done)
        self.learn()

    def learn(self) -> None:
        if len(self.d1) >= self.warmup:
            q_update(self.q1, self.q1_target, self.d1.sample(self.rng, self.batch_size), self.gamma, self.lr)
            self.updates1 += 1
            sync_target(self.q1, self.q1_target, self.updates1, self.sync_every)
        if len(self.d2) >= self.warmup:
            q_update(self.q2, self.q2_target, self.d2.sample(self.rng, self.batch_size), self.gamma, self.lr)
            self.updates2 += 1
            sync_target(self.q2, self.q2_target, self.updates2, self.sync_every)


class FlatDqnAgent:
    """Single Q-network over power levels; every granted slot is used."""

    def __init__(self, state_dim: int, n_actions: int, hidden: Sequence[int] = DEFAULT_HIDDEN,
                 gamma: float = 0.8, lr: float = 1e-3, capacity: int = 1000, batch_size: int = 256,
                 warmup: int = WARMUP, sync_every: int = 100, seed: int = 0, dtype="float64"):
        rng = stream("agent-init", seed)
        self.q = QNetwork(state_dim, n_actions, hidden, rng=rng, dtype=dtype)
        self.q_target = self.q.copy()
        self.d = ReplayBuffer(capacity)
        self.gamma, self.lr = gamma, lr
        self.batch_size, self.warmup, self.sync_every = batch_size, warmup, sync_every
        self.updates = 0
        self.snapshots = 0
        self.rng = stream("agent-replay", seed)
        self.state_dim, self.n_actions = state_dim, n_actions

    def networks(self) -> dict:
        return {"power": self.q}

    def snapshot(self, sim_time: int = 0) -> ModelSnapshot:
        self.snapshots += 1
        return ModelSnapshot((_frozen_copy(self.q),), self.snapshots, sim_time)

    @staticmethod
    def act(snap: ModelSnapshot, s: np.ndarray, eps: float, rng: np.random.Generator) -> tuple[int, int]:
        return 1, epsilon_greedy(snap.nets[0].forward(s), eps, rng)

    def observe(self, s, g: int, a: int, r: float, s2, done: bool) -> None:
        self.d.push(s, a, r, s2, done)
        if len(self.d) >= self.warmup:
            q_update(self.q, self.q_target, self.d.sample(self.rng, self.batch_size), self.gamma, self.lr)
            self.updates += 1
            sync_target(self.q, self.q_target, self.updates, self.sync_every)


def linear_epsilon(episode: int, episodes: int) -> float:
    """Exploration rate falling linearly from 1 on the first episode to 0 on the last."""
    if episodes <= 1:
        return 0.0
    return max(0.0, 1.0 - episode / (episodes - 1))


class LearningPolicy:
    """Slot policy that explores on the users' snapshot and feeds the learner."""

    def __init__(self, agent, powers: Sequence[float], rng: np.random.Generator,
                 period_us: int = 100_000, eps: float = 1.0, learn: bool = True):
        self.agent = agent
        self.powers = tuple(powers)
        self.rng = rng
        self.period_us = period_us
        self.eps = eps
        self.learn = learn
        self.clock_offset = 0  # simulated time of earlier episodes
        self.users: list = [None]
        self.last_push: Optional[int] = None

    def decide(self, pair: int, state, t: int):
        from ..sim.world import Decision
        self.users, self.last_push = distribute_model(
            self.agent, self.users, self.clock_offset + t, self.last_push, self.period_us)
        g, a = self.agent.act(self.users[0], encode_state(state), self.eps, self.rng)
        return Decision(g, self.powers[a], a)

    def feedback(self, record) -> None:
        if not self.learn:
            return
        d = record.decision
        self.agent.observe(encode_state(record.state), d.access, d.action, record.reward,
                           encode_state(record.next_state), record.terminal)


class GreedyPolicy:
    """Acts greedily on one frozen snapshot and never learns."""

    def __init__(self, snapshot: ModelSnapshot, act, powers: Sequence[float]):
        self.snapshot = snapshot
        self._act = act
        self.powers = tuple(powers)
        self._rng = np.random.default_rng(0)  # unused at eps = 0

    def decide(self, pair: int, state, t: int):
        from ..sim.world import Decision
        g, a = self._act(self.snapshot, encode_state(state), 0.0, self._rng)
        return Decision(g, self.powers[a], a)

    def feedback(self, record) -> None:
        pass


def make_agent(cfg, state_dim: int, seed_key: tuple = ()):
    kw = dict(hidden=cfg.hidden, gamma=cfg.gamma, lr=cfg.lr, capacity=cfg.replay_capacity,
              batch_size=cfg.batch_size, sync_every=cfg.target_sync, dtype=cfg.net_dtype,
              seed=hash_seed(cfg.scheme, cfg.seed, cfg.m_pairs, cfg.n_wifi, cfg.replicate, *seed_key))
    cls = HierarchicalAgent if cfg.scheme == "cghdrl" else FlatDqnAgent
    return cls(state_dim, cfg.power_levels, **kw)


def hash_seed(*key) -> int:
    return int(stream(*key).integers(0, 2**31 - 1))


def train_episode(world, policy: LearningPolicy) -> LearningPolicy:
    """Run one training episode: the world stops after its configured number of COTs."""
    world.policy = policy
    cap = world.max_cots * 50_000 if world.max_cots else world.cfg.horizon_us
    world.run(cap)
    policy.clock_offset += world.now
    return policy


def train(cfg, topo=None, episodes: Optional[int] = None, log=None):
    """Train a learner for an RL scheme on one topology; returns the agent."""
    from ..sim.topology import place_nodes
    from ..sim.world import World
    if topo is None:
        topo = place_nodes(cfg.seed, cfg.m_pairs, cfg.n_wifi, cfg.pair_max_dist_m, cfg.area_m,
                           key=(cfg.replicate,))
    episodes = cfg.episodes if episodes is None else episodes
    agent = make_agent(cfg, topo.m_pairs)
    rng = stream("explore", cfg.scheme, cfg.seed, cfg.m_pairs, cfg.n_wifi, cfg.replicate)
    policy = LearningPolicy(agent, cfg.power_grid(), rng, int(round(cfg.model_update_ms * 1000)))
    for e in range(episodes):
        policy.eps = linear_epsilon(e, episodes)
        world = World(cfg, policy, topo=topo, dynamics_key=("train", e), max_cots=cfg.episode_cots)
        train_episode(world, policy)
        if log is not None:
            log(f"episode {e + 1}/{episodes} eps={policy.eps:.2f} slots={world.slu.attempts} "
                f"sim_us={world.now}")
    return agent
