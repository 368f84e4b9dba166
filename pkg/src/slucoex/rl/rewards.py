"""Slot-level rewards for the two controllers."""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .. import phy


def intrinsic_reward(slu_sinr: float, wifi_sinr: Optional[float], thresholds: phy.SinrThresholds,
                     utility_value: float) -> float:
    """+U when the SL-U link and any concurrent Wi-Fi link both meet their SINR floor, else -U."""
    ok = slu_sinr >= thresholds.slu_min and (wifi_sinr is None or wifi_sinr >= thresholds.wifi_min)
    u = abs(utility_value)
    return u if ok else -u


def extrinsic_reward(intrinsics: Sequence[float]) -> float:
    """Upper-controller reward for one subgoal episode."""
    return math.fsum(intrinsics)


def slot_reward(slu_sinr: Optional[float], wifi_sinr: Optional[float], thresholds: phy.SinrThresholds,
                beta: float, bandwidth: float, rate_scale: float) -> tuple[float, float]:
    """Signed reward and utility of one slot.

    ``slu_sinr`` is None when the pair yielded the slot; that counts as a
    failure with a zero SL-U rate. With no rate on either side the two-system
    fairness term is taken as 0.5, its value when one side gets everything.
    """
    r_s = phy.shannon_rate(bandwidth, slu_sinr) if slu_sinr is not None else 0.0
    r_w = phy.shannon_rate(bandwidth, wifi_sinr) if wifi_sinr is not None else 0.0
    jain = phy.jain_index([r_s, r_w]) if r_s + r_w > 0 else 0.5
    u = phy.utility(beta, r_s + r_w, jain, rate_scale)
    if slu_sinr is None:
        return -u, u
    return intrinsic_reward(slu_sinr, wifi_sinr, thresholds, u), u
