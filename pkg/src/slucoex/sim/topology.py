"""Node placement and the path-gain matrices derived from it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import phy
from ..seeding import stream

MIN_DISTANCE_M = 1.0  # co-located nodes are treated as 1 m apart


@dataclass(frozen=True)
class Topology:
    area: float
    bs_pos: np.ndarray
    ap_pos: np.ndarray
    slu_tx: np.ndarray  # (M, 2)
    slu_rx: np.ndarray  # (M, 2)
    wifi: np.ndarray  # (N, 2)

    @property
    def m_pairs(self) -> int:
        return len(self.slu_tx)

    @property
    def n_wifi(self) -> int:
        return len(self.wifi)

    def pair_distance(self, i: int) -> float:
        return float(np.hypot(*(self.slu_tx[i] - self.slu_rx[i])))


def place_nodes(seed: int, m_pairs: int, n_wifi: int, pair_max_dist: float,
                area: float = 400.0, key: tuple = ()) -> Topology:
    """Uniform user drop with the BS and AP at the centre of a square area.

    Each SL-U receiver lands uniformly in a disc of radius ``pair_max_dist``
    around its transmitter, redrawn until it is inside the area.
    """
    if m_pairs < 1 or n_wifi < 1:
        raise ValueError("need at least one SL-U pair and one Wi-Fi user")
    if not pair_max_dist > 0:
        raise ValueError(f"pair_max_dist must be > 0, got {pair_max_dist}")
    rng = stream("topology", seed, m_pairs, n_wifi, *key)
    centre = np.array([area / 2, area / 2])
    tx = rng.uniform(0.0, area, size=(m_pairs, 2))
    wifi = rng.uniform(0.0, area, size=(n_wifi, 2))
    rx = np.empty_like(tx)
    for i in range(m_pairs):
        while True:
            r = pair_max_dist * np.sqrt(rng.uniform())
            a = rng.uniform(0.0, 2 * np.pi)
            p = tx[i] + r * np.array([np.cos(a), np.sin(a)])
            if r > 0 and np.all((p >= 0) & (p <= area)):
                rx[i] = p
                break
    return Topology(area, centre.copy(), centre.copy(), tx, rx, wifi)


def path_gain(a: np.ndarray, b: np.ndarray, freq_ghz: float) -> np.ndarray:
    """Linear path gain between every point of ``a`` (k, 2) and ``b`` (l, 2)."""
    d = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    d = np.maximum(d, MIN_DISTANCE_M)
    pl = 32.4 + 20.0 * np.log10(freq_ghz) + 17.3 * np.log10(d)
    return 10.0 ** (-pl / 10.0)


def pair_path_loss(topo: Topology, i: int, freq_ghz: float = phy.CARRIER_FREQ_GHZ) -> float:
    return phy.path_loss_db(freq_ghz, max(topo.pair_distance(i), MIN_DISTANCE_M))
