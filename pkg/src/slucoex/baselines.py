"""Non-learning SL-U access and power rules used as comparison points."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def baseline_random(rng: np.random.Generator, powers: Sequence[float]) -> tuple[int, int]:
    """Access flag from U{0, 1} and a power index uniform over the power grid."""
    g = int(rng.integers(0, 2))
    a = int(rng.integers(0, len(powers)))
    return g, a


def baseline_olpc(reference_pl: float, noise_dbm: float, sinr_target: float, margin: float = 3.0,
                  bounds: tuple[float, float] = (-40.0, 0.0)) -> float:
    """Open-loop power: cover the pair's own path loss and noise, blind to interference."""
    p = noise_dbm + sinr_target + reference_pl + margin
    return min(max(p, bounds[0]), bounds[1])
