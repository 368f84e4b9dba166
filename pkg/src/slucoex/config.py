"""Run configuration with the scenario's simulation parameters as defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional

SCHEMES = ("ccha", "ccha_t1", "t12_dra", "t1o_dra", "f_ccha", "cghdrl", "dqn", "random", "olpc")
# Access-mechanism comparison: fixed 23 dBm everywhere and a low sensing threshold.
ACCESS_SCHEMES = ("ccha", "ccha_t1", "t12_dra", "t1o_dra")
# Power-control comparison built on CCHA: SL-U power in [-40, 0] dBm, Wi-Fi closed loop.
POWER_SCHEMES = ("f_ccha", "cghdrl", "dqn", "random", "olpc")
RL_SCHEMES = ("cghdrl", "dqn")

# (M, N) grid of the access-mechanism study.
USER_GRID = ((20, 20), (24, 24), (28, 28), (32, 44))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "ccha"
    m_pairs: int = 20
    n_wifi: int = 20
    seed: int = 1
    replicate: int = 0
    horizon_s: float = 1.0

    # scenario parameters
    carrier_freq_ghz: float = 5.8
    bandwidth_hz: float = 20e6
    scs_khz: float = 30.0
    t_cot_ms: float = 2.0
    noise_psd_dbm_hz: float = -174.0
    sifs_us: int = 16
    difs_us: int = 34
    t_d_us: int = 34
    t_sl_us: int = 9
    beta: float = 0.8
    traffic_period_ms: float = 10.0
    model_update_ms: float = 100.0
    tb_size_bytes: int = 300
    eta_s_min_db: float = 15.0
    eta_w_min_db: float = 6.0

    # geometry and traffic
    area_m: float = 400.0
    pair_max_dist_m: float = 50.0
    poisson_traffic: bool = False

    # channel access
    capc: int = 1
    t_short_sl_us: int = 25
    ed_threshold_dbm: Optional[float] = None  # None: -82 for access schemes, -72 otherwise
    wifi_cca_dbm: float = -82.0  # Wi-Fi carrier-sense level
    bs_aligned_lbt: bool = False  # True: BS times its Type 1 countdown to end just before a slot boundary

    # powers (dBm)
    slu_power_dbm: Optional[float] = None  # None: 23 for access schemes, 0 for f_ccha
    slu_power_min_dbm: float = -40.0
    slu_power_max_dbm: float = 0.0
    power_levels: int = 9
    wifi_power_dbm: float = 23.0
    wifi_power_min_dbm: float = 0.0
    wifi_power_max_dbm: float = 23.0
    wifi_target_offset_db: float = 4.0
    wifi_pc_margin_db: float = 3.0
    olpc_margin_db: float = 3.0

    # Wi-Fi frame timing
    wifi_airtime_us: int = 100
    wifi_ack_us: int = 44
    wifi_cw_min: int = 15
    wifi_cw_max: int = 1023

    # learning
    episodes: int = 20
    episode_cots: int = 50
    gamma: float = 0.8
    lr: float = 1e-3
    batch_size: int = 256
    replay_capacity: int = 1000
    target_sync: int = 100
    hidden: tuple = (256, 256, 512)
    net_dtype: str = "float32"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; valid: {', '.join(SCHEMES)}")
        if self.m_pairs < 1 or self.n_wifi < 1:
            raise ConfigError("m_pairs and n_wifi must be >= 1")
        if not self.horizon_s > 0:
            raise ConfigError("horizon_s must be > 0")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must be in [0, 1]")
        if self.capc not in (1, 2, 3, 4):
            raise ConfigError("capc must be 1..4")
        if self.t_short_sl_us not in (16, 25):
            raise ConfigError("t_short_sl_us must be 16 or 25")
        if self.pair_max_dist_m <= 0:
            raise ConfigError("pair_max_dist_m must be > 0")
        if self.slu_power_min_dbm > self.slu_power_max_dbm:
            raise ConfigError("slu power bounds are inverted")
        if self.wifi_power_min_dbm > self.wifi_power_max_dbm:
            raise ConfigError("wifi power bounds are inverted")
        if self.power_levels < 2:
            raise ConfigError("power_levels must be >= 2")
        for name in ("bandwidth_hz", "carrier_freq_ghz", "scs_khz", "t_cot_ms", "traffic_period_ms",
                     "model_update_ms", "tb_size_bytes", "wifi_airtime_us", "wifi_ack_us",
                     "episodes", "episode_cots", "batch_size", "replay_capacity", "target_sync", "lr"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must be in [0, 1]")
        if self.t_d_us != 16 + self.m_p * self.t_sl_us:
            raise ConfigError(f"t_d_us={self.t_d_us} disagrees with 16 + m_p*t_sl = {16 + self.m_p * self.t_sl_us}")
        if self.net_dtype not in ("float32", "float64"):
            raise ConfigError("net_dtype must be float32 or float64")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def m_p(self) -> int:
        from .mac import capc_lookup
        return capc_lookup(self.capc).m_p

    @property
    def is_access_scheme(self) -> bool:
        return self.scheme in ACCESS_SCHEMES

    @property
    def ed_threshold(self) -> float:
        if self.ed_threshold_dbm is not None:
            return self.ed_threshold_dbm
        return -82.0 if self.is_access_scheme else -72.0

    @property
    def fixed_slu_power(self) -> float:
        if self.slu_power_dbm is not None:
            return self.slu_power_dbm
        return 23.0 if self.is_access_scheme else self.slu_power_max_dbm

    @property
    def slot_len_us(self) -> int:
        return int(round(500 * 30.0 / self.scs_khz))

    @property
    def horizon_us(self) -> int:
        return int(round(self.horizon_s * 1e6))

    @property
    def wifi_target_db(self) -> float:
        return self.eta_w_min_db + self.wifi_target_offset_db

    def power_grid(self) -> tuple[float, ...]:
        lo, hi, k = self.slu_power_min_dbm, self.slu_power_max_dbm, self.power_levels
        return tuple(lo + i * (hi - lo) / (k - 1) for i in range(k))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))
