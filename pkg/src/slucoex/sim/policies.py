"""Slot policies for the non-learning power-control schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import phy
from ..baselines import baseline_olpc, baseline_random
from ..config import RunConfig
from ..seeding import stream
from .topology import Topology, pair_path_loss, place_nodes
from .world import Decision, McState, SlotRecord


@dataclass
class FixedPolicy:
    """Always use the slot at one power (the F-CCHA benchmark)."""

    power: float
    action: int = -1

    def decide(self, pair: int, state: McState, t: int) -> Decision:
        return Decision(1, self.power, self.action)

    def feedback(self, record: SlotRecord) -> None:
        pass


@dataclass
class RandomPolicy:
    powers: tuple
    rng: np.random.Generator

    def decide(self, pair: int, state: McState, t: int) -> Decision:
        g, a = baseline_random(self.rng, self.powers)
        return Decision(g, self.powers[a], a)

    def feedback(self, record: SlotRecord) -> None:
        pass


@dataclass
class OpenLoopPolicy:
    """Per-pair power from the noise-free link budget of the pair's own link."""

    power_by_pair: tuple

    def decide(self, pair: int, state: McState, t: int) -> Decision:
        return Decision(1, self.power_by_pair[pair])

    def feedback(self, record: SlotRecord) -> None:
        pass


def olpc_powers(cfg: RunConfig, topo: Topology) -> tuple:
    noise = phy.noise_power_dbm(phy.LinkParams(cfg.carrier_freq_ghz, cfg.bandwidth_hz, cfg.noise_psd_dbm_hz))
    return tuple(
        baseline_olpc(pair_path_loss(topo, i, cfg.carrier_freq_ghz), noise, cfg.eta_s_min_db,
                      cfg.olpc_margin_db, (cfg.slu_power_min_dbm, cfg.slu_power_max_dbm))
        for i in range(topo.m_pairs))


def default_policy(cfg: RunConfig, topo: Topology | None = None):
    """Policy for the non-learning power-control schemes."""
    grid = cfg.power_grid()
    if cfg.scheme == "f_ccha":
        return FixedPolicy(cfg.fixed_slu_power, grid.index(cfg.fixed_slu_power) if cfg.fixed_slu_power in grid else -1)
    if cfg.scheme == "random":
        return RandomPolicy(grid, stream("policy", cfg.scheme, cfg.seed, cfg.m_pairs, cfg.n_wifi, cfg.replicate))
    if cfg.scheme == "olpc":
        if topo is None:
            topo = place_nodes(cfg.seed, cfg.m_pairs, cfg.n_wifi, cfg.pair_max_dist_m, cfg.area_m,
                               key=(cfg.replicate,))
        return OpenLoopPolicy(olpc_powers(cfg, topo))
    raise ValueError(f"scheme {cfg.scheme!r} needs a trained policy")
