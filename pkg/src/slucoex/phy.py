"""Link budget, rate, fairness and utility arithmetic.

Everything here is a pure function of its arguments. Powers are in dBm,
ratios in dB, rates in bit/s, unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

# Default link and scenario parameters.
CARRIER_FREQ_GHZ = 5.8
BANDWIDTH_HZ = 20e6
NOISE_PSD_DBM_HZ = -174.0
SLU_SINR_MIN_DB = 15.0
WIFI_SINR_MIN_DB = 6.0
TB_SIZE_BYTES = 300

# SINR ceiling used to normalise the rate term of the utility.
RATE_SCALE_SINR_DB = 40.0


class PhyDomainError(ValueError):
    """Raised for arguments outside a formula's domain."""


@dataclass(frozen=True)
class LinkParams:
    carrier_freq: float = CARRIER_FREQ_GHZ  # GHz
    bandwidth: float = BANDWIDTH_HZ  # Hz
    noise_psd: float = NOISE_PSD_DBM_HZ  # dBm/Hz

    def __post_init__(self):
        if not self.carrier_freq > 0:
            raise PhyDomainError(f"carrier_freq must be > 0, got {self.carrier_freq}")
        if not self.bandwidth > 0:
            raise PhyDomainError(f"bandwidth must be > 0, got {self.bandwidth}")


@dataclass(frozen=True)
class SinrThresholds:
    slu_min: float = SLU_SINR_MIN_DB
    wifi_min: float = WIFI_SINR_MIN_DB

    def __post_init__(self):
        if not (math.isfinite(self.slu_min) and math.isfinite(self.wifi_min)):
            raise PhyDomainError("SINR thresholds must be finite")


@dataclass(frozen=True)
class RatePair:
    slu_rate: float
    wifi_rate: float

    def __post_init__(self):
        if self.slu_rate < 0 or self.wifi_rate < 0:
            raise PhyDomainError("rates must be non-negative")

    @property
    def total(self) -> float:
        return self.slu_rate + self.wifi_rate


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0:
        return -math.inf
    return 10.0 * math.log10(mw)


def path_loss_db(freq: float, distance: float) -> float:
    """LOS path loss in dB for a carrier in GHz and a distance in metres."""
    if not distance > 0:
        raise PhyDomainError(f"distance must be > 0, got {distance}")
    if not freq > 0:
        raise PhyDomainError(f"frequency must be > 0, got {freq}")
    return 32.4 + 20.0 * math.log10(freq) + 17.3 * math.log10(distance)


def noise_power_dbm(params: LinkParams) -> float:
    """Thermal noise integrated over the channel bandwidth."""
    return params.noise_psd + 10.0 * math.log10(params.bandwidth)


def sinr_db(signal: float, interferers: Iterable[float], noise: float) -> float:
    """SINR of a received signal against noise plus a set of interferers.

    All three are received powers in dBm; the sum is taken in milliwatts.
    """
    denom = dbm_to_mw(noise) + math.fsum(dbm_to_mw(p) for p in interferers)
    return 10.0 * math.log10(dbm_to_mw(signal) / denom)


def shannon_rate(bandwidth: float, sinr: float) -> float:
    if not bandwidth > 0:
        raise PhyDomainError(f"bandwidth must be > 0, got {bandwidth}")
    return bandwidth * math.log2(1.0 + 10.0 ** (sinr / 10.0))


def jain_index(values: Sequence[float]) -> float:
    """Jain's fairness index, in [1/n, 1]."""
    n = len(values)
    if n == 0:
        raise PhyDomainError("jain_index needs at least one value")
    if any(v < 0 for v in values):
        raise PhyDomainError("jain_index needs non-negative values")
    s = math.fsum(values)
    if s == 0:
        raise PhyDomainError("jain_index is undefined for an all-zero allocation")
    return s * s / (n * math.fsum(v * v for v in values))


def default_rate_scale(bandwidth: float = BANDWIDTH_HZ) -> float:
    """Two concurrent links at a 40 dB SINR; the rate that maps to 1.0 in the utility."""
    return 2.0 * shannon_rate(bandwidth, RATE_SCALE_SINR_DB)


def utility(beta: float, total_rate: float, jain: float, rate_scale: float) -> float:
    """Weighted mix of normalised sum rate and fairness."""
    if not rate_scale > 0:
        raise PhyDomainError(f"rate_scale must be > 0, got {rate_scale}")
    return beta * (total_rate / rate_scale) + (1.0 - beta) * jain


def throughput_bps(success_count: int, tb_size: int, elapsed: float) -> float:
    if not elapsed > 0:
        raise PhyDomainError(f"elapsed must be > 0, got {elapsed}")
    return success_count * tb_size * 8 / elapsed


def prr(success_count: int, sent_count: int) -> float:
    if sent_count < 0:
        raise PhyDomainError("sent_count must be >= 0")
    if sent_count == 0:
        return 1.0
    return success_count / sent_count
