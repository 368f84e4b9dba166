"""Event engine for SL-U and Wi-Fi sharing one unlicensed channel.

Time is integer microseconds. The engine jumps between instants at which
something happens, which gives exactly the behaviour of a 1 us tick loop:
every node state changes only at those instants, and within an instant all
sensing decisions see the channel as it was during the preceding
microsecond. Energy at every sensor and SINR at every active receiver are
recomputed once at the end of an instant in which an emission started or
stopped.

Node indices:

* emitters: SL-U transmitters ``0..M-1``, Wi-Fi users ``M..M+N-1``, the AP ``M+N``
* sensors: SL-U transmitters, Wi-Fi users, the BS (same positions as the AP)
* receivers: SL-U receivers ``0..M-1`` and the AP ``M``
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .. import ccha, mac, phy
from ..config import ACCESS_SCHEMES, RunConfig
from ..seeding import stream
from ..rl.rewards import slot_reward
from .topology import Topology, path_gain, place_nodes

FLOOR_DBM = -120.0
GUARD_US = ccha.GI_TICKS

# event priorities within one instant
P_END, P_TIMER, P_CHECK, P_START = 0, 1, 2, 3

# event kinds
EV_ARR_SLU, EV_ARR_WIFI, EV_CONT, EV_WIFI_TX_END, EV_SLU_END = range(5)
EV_COT_END, EV_DECIDE, EV_SLOT_START, EV_DRA_SSB, EV_SLOT_CLOSE, EV_BS_START = range(5, 11)


@dataclass(frozen=True)
class McState:
    prev_power: float
    channel_energy: tuple[float, ...]

    def vector(self) -> np.ndarray:
        return np.array((self.prev_power,) + self.channel_energy)


@dataclass(frozen=True)
class Decision:
    access: int  # subgoal: 1 to use the granted slot, 0 to skip it
    power: float  # dBm
    action: int = -1  # index into the power grid, -1 if not on the grid


@dataclass(frozen=True)
class SlotRecord:
    pair: int
    t: int
    state: McState
    decision: Decision
    reward: float
    next_state: McState
    transmitted: bool
    success: bool
    terminal: bool


class SlotPolicy(Protocol):
    def decide(self, pair: int, state: McState, t: int) -> Decision: ...

    def feedback(self, record: SlotRecord) -> None: ...


@dataclass
class Attempt:
    kind: str  # "slu" or "wifi"
    node: int
    emitter: int
    receiver: int
    power: float
    start: int
    end: int
    min_sinr: float = math.inf
    wifi_min: float = math.inf  # lowest concurrent Wi-Fi SINR seen during an SL-U attempt
    overlapped: bool = False  # another transmission of the same kind was on air
    decision: Optional[Decision] = None
    state: Optional[McState] = None


@dataclass
class Contender:
    kind: str  # "wifi", "bs" or "pair"
    owner: int
    sensor: int
    state: object
    t_state: int = 0
    version: int = 0


@dataclass
class Counters:
    offered: int = 0
    success: int = 0
    failed: int = 0  # transmitted and lost, or expired before delivery
    attempts: int = 0


@dataclass(frozen=True)
class MetricsReport:
    scheme: str
    m: int
    n: int
    seed: int
    replicate: int
    horizon_s: float
    slu_offered: int
    slu_success: int
    slu_failed: int
    slu_queued: int
    slu_attempts: int
    wifi_offered: int
    wifi_success: int
    wifi_failed: int
    wifi_queued: int
    wifi_attempts: int
    prr_slu: float
    prr_wifi: float
    prr_total: float
    throughput_slu_bps: float
    throughput_wifi_bps: float
    throughput_total_bps: float
    jain: float
    mean_utility: float
    collisions: int
    max_concurrent_slu: int
    max_concurrent_wifi: int
    power_violations: int
    cots: int


def wifi_closed_loop_power(power: float, last_sinr: float, target: float, margin: float = 3.0,
                           bounds: tuple[float, float] = (0.0, 23.0)) -> float:
    """One step of the Wi-Fi closed loop: +1 dB below target, -1 dB above target + margin."""
    if last_sinr < target:
        power += 1.0
    elif last_sinr > target + margin:
        power -= 1.0
    return min(max(power, bounds[0]), bounds[1])


def evaluate_outcomes(concurrent, topo: Topology, thresholds: phy.SinrThresholds = phy.SinrThresholds(),
                      link: phy.LinkParams = phy.LinkParams()) -> list[bool]:
    """Success of fully overlapping attempts, each against all the others.

    ``concurrent`` holds ``(kind, node, power_dbm)`` triples; SL-U attempts
    are received at their pair's receiver and Wi-Fi attempts at the AP.
    """
    noise = phy.noise_power_dbm(link)
    f = link.carrier_freq

    def pos(kind, node):
        return topo.slu_tx[node] if kind == "slu" else topo.wifi[node]

    def rx_level(p_dbm, src, dst):
        d = max(float(np.hypot(*(src - dst))), 1.0)
        return p_dbm - phy.path_loss_db(f, d)

    out = []
    for k, (kind, node, power) in enumerate(concurrent):
        rx = topo.slu_rx[node] if kind == "slu" else topo.ap_pos
        signal = rx_level(power, pos(kind, node), rx)
        interferers = [rx_level(p, pos(kd, nd), rx) for j, (kd, nd, p) in enumerate(concurrent) if j != k]
        threshold = thresholds.slu_min if kind == "slu" else thresholds.wifi_min
        out.append(phy.sinr_db(signal, interferers, noise) >= threshold)
    return out


class World:
    """Mutable simulation state. Drive it with ``advance_to`` or ``run``."""

    def __init__(self, cfg: RunConfig, policy: Optional[SlotPolicy] = None,
                 topo: Optional[Topology] = None, dynamics_key: tuple = (),
                 traffic: bool = True, max_cots: Optional[int] = None):
        self.cfg = cfg
        self.policy = policy
        self.max_cots = max_cots
        self.topo = topo if topo is not None else place_nodes(
            cfg.seed, cfg.m_pairs, cfg.n_wifi, cfg.pair_max_dist_m, cfg.area_m, key=(cfg.replicate,))
        M, N = self.topo.m_pairs, self.topo.n_wifi
        self.M, self.N = M, N
        self.scheme = cfg.scheme
        self.timing = mac.MacTiming(cfg.sifs_us, cfg.difs_us, cfg.t_sl_us, cfg.t_short_sl_us)
        self.capc = mac.capc_lookup(cfg.capc)
        self.csma = mac.CsmaParams(cfg.wifi_airtime_us, cfg.wifi_ack_us, cfg.wifi_cw_min, cfg.wifi_cw_max)
        self.grid = ccha.SlotGrid(cfg.slot_len_us)
        self.slot_len = cfg.slot_len_us
        self.t_mcot = int(round(cfg.t_cot_ms * 1000))
        link = phy.LinkParams(cfg.carrier_freq_ghz, cfg.bandwidth_hz, cfg.noise_psd_dbm_hz)
        self.noise_dbm = phy.noise_power_dbm(link)
        self.noise_mw = phy.dbm_to_mw(self.noise_dbm)
        self.thresholds = phy.SinrThresholds(cfg.eta_s_min_db, cfg.eta_w_min_db)
        self.rate_scale = phy.default_rate_scale(cfg.bandwidth_hz)
        # per-sensor busy threshold: SL-U Tx and BS use the LBT level, Wi-Fi its CCA level
        self.ed_mw = np.full(M + N + 1, phy.dbm_to_mw(cfg.ed_threshold))
        self.ed_mw[M:M + N] = phy.dbm_to_mw(cfg.wifi_cca_dbm)
        self.power_family = cfg.scheme not in ACCESS_SCHEMES
        self.uses_bs = cfg.scheme not in ("t12_dra", "t1o_dra")

        # gains
        t = self.topo
        f = cfg.carrier_freq_ghz
        emit_pos = np.vstack([t.slu_tx, t.wifi, t.ap_pos[None]])
        sense_pos = np.vstack([t.slu_tx, t.wifi, t.bs_pos[None]])
        rx_pos = np.vstack([t.slu_rx, t.ap_pos[None]])
        self.g_sense = path_gain(sense_pos, emit_pos, f)
        idx = np.arange(M + N)
        self.g_sense[idx, idx] = 0.0  # a node does not sense its own emission
        self.g_rx = path_gain(rx_pos, emit_pos, f)
        self.g_rx[M, M + N] = 0.0
        self.ap = M + N
        self.bs_sensor = M + N
        self.p_mw = np.zeros(M + N + 1)
        self.sensed_mw = np.zeros(M + N + 1)
        self.busy = np.zeros(M + N + 1, dtype=bool)
        self.idle_since = [-math.inf] * (M + N + 1)
        self.dirty = False

        # random streams: traffic phases are shared across schemes so that
        # scheme comparisons see the same offered load
        base = (cfg.seed, M, N, cfg.replicate)
        self.rng_traffic = stream("traffic", *base, *dynamics_key)
        self.rng = stream("dynamics", cfg.scheme, *base, *dynamics_key)

        self.now = 0
        self.horizon = math.inf
        self.heap: list = []
        self.seq = 0
        self.stopped = False

        self.slu = Counters()
        self.wifi = Counters()
        self.collisions = 0
        self.max_slu = 0
        self.max_wifi = 0
        self.power_violations = 0
        self.cots = 0
        self.utilities: list[float] = []
        self.active: list[Attempt] = []

        # SL-U pair state
        self.slu_live = [False] * M
        self.slu_arrival = [0] * M
        self.slu_inflight = [False] * M
        self.slu_backlog: list[Optional[int]] = [None] * M
        self.scheduled = [False] * M
        self.waiting_ssb = [False] * M
        self.prev_power = [FLOOR_DBM] * M
        self.pair_cw = [self.capc.cw_min] * M
        self.pair_lbt: list[Optional[Contender]] = [None] * M

        # Wi-Fi user state
        self.wifi_live = [False] * N
        self.wifi_inflight = [False] * N
        self.wifi_backlog = [False] * N
        self.wifi_power = [cfg.wifi_power_dbm] * N
        self.wifi_last_ok = [False] * N
        self.wifi_attempt: list[Optional[Attempt]] = [None] * N
        self.wifi_power_at_ack = [cfg.wifi_power_dbm] * N
        self.pending_decisions: dict = {}
        self.ack_mw = 0.0

        self.contender_at: list[Optional[Contender]] = [None] * (M + N + 1)
        for j in range(N):
            c = Contender("wifi", j, M + j, mac.CsmaState(cw=self.csma.cw_min))
            self.contender_at[M + j] = c
        self.bs: Optional[Contender] = None
        self.bs_in_cot = False
        self.bs_armed = False
        self.cot_first_outcome: Optional[mac.Outcome] = None
        if self.uses_bs:
            self.bs = Contender("bs", 0, self.bs_sensor, mac.lbt1_idle(self.capc))
            self.contender_at[self.bs_sensor] = self.bs
        else:
            for i in range(M):
                c = Contender("pair", i, i, mac.lbt1_idle(self.capc))
                self.pair_lbt[i] = c
                self.contender_at[i] = c

        if traffic:
            period = int(round(cfg.traffic_period_ms * 1000))
            self.period = period
            for i in range(M):
                self.push(int(self.rng_traffic.integers(0, period)), P_TIMER, EV_ARR_SLU, i)
            for j in range(N):
                self.push(int(self.rng_traffic.integers(0, period)), P_TIMER, EV_ARR_WIFI, j)
        else:
            self.period = int(round(cfg.traffic_period_ms * 1000))

    # -- scheduling ------------------------------------------------------------

    def push(self, t, prio, kind, a=None, b=None):
        self.seq += 1
        heapq.heappush(self.heap, (t, prio, self.seq, kind, a, b))

    def next_arrival(self, t):
        if self.cfg.poisson_traffic:
            return t + max(1, int(round(self.rng_traffic.exponential(self.period))))
        return t + self.period

    # -- contention ------------------------------------------------------------

    def channel(self, sensor) -> mac.Channel:
        return mac.Channel.BUSY if self.busy[sensor] else mac.Channel.IDLE

    def _advance(self, c: Contender, now: int, channel: mac.Channel):
        """Step a contender from its last sync to ``now`` under a constant channel."""
        dt = now - c.t_state
        c.t_state = now
        if c.kind == "wifi":
            c.state, ev = mac.csma_step(c.state, channel, dt, self.csma, self.timing)
            return ev
        c.state, grant = mac.lbt1_step(c.state, channel, dt, self.timing)
        return grant

    def _predict(self, c: Contender):
        c.version += 1
        idle = not self.busy[c.sensor]
        if c.kind == "wifi":
            phase = c.state.phase
            if phase is mac.CsmaPhase.IDLE:
                return
            if phase in (mac.CsmaPhase.DIFS_WAIT, mac.CsmaPhase.BACKING_OFF) and not idle:
                return
            dt = mac.csma_time_to_event(c.state, self.csma, self.timing)
            prio = P_END if phase is mac.CsmaPhase.AWAIT_ACK else P_START
        else:
            if not idle:
                return
            dt = mac.lbt1_time_to_grant(c.state, self.timing)
            if math.isinf(dt) or c.state.phase is mac.LbtPhase.GRANTED:
                return
            prio = P_START
        self.push(self.now + int(dt), prio, EV_CONT, c, c.version)

    def _start_lbt(self, c: Contender, cw: int):
        counter = int(self.rng.integers(0, cw + 1))
        c.state = mac.lbt1_start(mac.lbt1_idle(self.capc, cw), counter, self.timing)
        c.t_state = self.now
        self._predict(c)

    def _start_csma(self, j: int):
        c = self.contender_at[self.M + j]
        counter = int(self.rng.integers(0, c.state.cw + 1))
        c.state = mac.csma_start(c.state, counter, self.timing)
        c.t_state = self.now

    # -- channel bookkeeping ---------------------------------------------------

    def _emit(self, emitter: int, power_dbm: Optional[float]):
        self.p_mw[emitter] = 0.0 if power_dbm is None else phy.dbm_to_mw(power_dbm)
        self.dirty = True

    def _end_of_instant(self):
        self.dirty = False
        self.sensed_mw = self.g_sense @ self.p_mw
        busy = self.sensed_mw >= self.ed_mw
        flips = np.flatnonzero(busy != self.busy)
        for s in flips.tolist():
            c = self.contender_at[s]
            ev = self._advance(c, self.now, self.channel(s)) if c is not None else None
            self.busy[s] = busy[s]
            if not busy[s]:
                self.idle_since[s] = self.now
            if c is not None:
                if ev is not None:
                    self._contender_event(c, ev)
                self._predict(c)
        self._update_sinr()

    def _update_sinr(self):
        act = self.active
        if not act:
            return
        rx = np.fromiter((a.receiver for a in act), dtype=np.intp, count=len(act))
        em = np.fromiter((a.emitter for a in act), dtype=np.intp, count=len(act))
        g = self.g_rx[rx]
        total = g @ self.p_mw
        signal = g[np.arange(len(act)), em] * self.p_mw[em]
        sinr = 10.0 * np.log10(signal / (self.noise_mw + total - signal))
        n_slu = 0
        wifi_min = math.inf
        for a, s in zip(act, sinr.tolist()):
            if s < a.min_sinr:
                a.min_sinr = s
            if a.kind == "slu":
                n_slu += 1
            elif s < wifi_min:
                wifi_min = s
        n_wifi = len(act) - n_slu
        self.max_slu = max(self.max_slu, n_slu)
        self.max_wifi = max(self.max_wifi, n_wifi)
        for a in act:
            if a.kind == "slu":
                if wifi_min < a.wifi_min:
                    a.wifi_min = wifi_min
                if n_slu > 1:
                    a.overlapped = True
            elif n_wifi > 1:
                a.overlapped = True

    def idle_window(self, sensor: int, start: float) -> bool:
        """Whether ``sensor`` saw an idle channel over ``[start, now)``."""
        return not self.busy[sensor] and self.idle_since[sensor] <= start

    def energy_dbm(self, sensor: int) -> float:
        mw = self.sensed_mw[sensor]
        return max(phy.mw_to_dbm(mw), FLOOR_DBM)

    def mc_state(self, pair: int) -> McState:
        energy = tuple(self.energy_dbm(j) for j in range(self.M) if j != pair)
        return McState(self.prev_power[pair], energy)

    # -- SL-U ------------------------------------------------------------------

    def _slu_pending(self, i):
        return self.slu_live[i] and not self.slu_inflight[i] and not self.scheduled[i]

    def _maybe_start_bs(self):
        bs = self.bs
        if self.bs_in_cot or self.bs_armed or bs.state.phase not in (mac.LbtPhase.IDLE, mac.LbtPhase.GRANTED):
            return
        if not any(self._slu_pending(i) for i in range(self.M)):
            return
        counter = int(self.rng.integers(0, bs.state.cw + 1))
        if not self.cfg.bs_aligned_lbt:
            self._start_bs(counter)
            return
        # Self-deferral: start late enough that an uninterrupted countdown ends
        # one Type 2 window before a slot boundary.
        lead = self.timing.t_d(self.capc) + counter * self.timing.t_sl + self.timing.t_short_sl
        start = self.grid.ssb_at_or_after(self.now + lead) - lead
        self.bs_armed = True
        self.push(start, P_TIMER, EV_BS_START, counter)

    def _start_bs(self, counter):
        bs = self.bs
        self.bs_armed = False
        bs.state = mac.lbt1_start(mac.lbt1_idle(self.capc, bs.state.cw), counter, self.timing)
        bs.t_state = self.now
        self._predict(bs)

    def _maybe_start_pair(self, i):
        c = self.pair_lbt[i]
        if (self.slu_live[i] and not self.slu_inflight[i] and not self.waiting_ssb[i]
                and c.state.phase in (mac.LbtPhase.IDLE, mac.LbtPhase.GRANTED)):
            self._start_lbt(c, self.pair_cw[i])

    def _on_bs_grant(self):
        t = self.now
        self.bs.state = mac.lbt1_idle(self.capc, self.bs.state.cw)
        cot = ccha.cot_for_grant(t, self.t_mcot, self.grid, self.cfg.bandwidth_hz,
                                 sense_window=self.timing.t_short_sl)
        pending = sorted((self.slu_arrival[i], i) for i in range(self.M) if self._slu_pending(i))
        grants = ccha.allocate_slots(cot, [i for _, i in pending], self.grid)
        if not grants:
            return
        self.bs_in_cot = True
        self.cot_first_outcome = None
        for g in grants:
            self.scheduled[g.pair] = True
            if self.power_family:
                self.push(g.slot_start - self.timing.t_short_sl, P_CHECK, EV_DECIDE, g, None)
            self.push(g.slot_start, P_CHECK, EV_SLOT_START, g, t)
        self.push(cot.end, P_TIMER, EV_COT_END)

    def _on_cot_end(self):
        self.bs_in_cot = False
        self.cots += 1
        if self.cot_first_outcome is not None:
            self.bs.state = mac.lbt1_cw_update(self.bs.state, self.cot_first_outcome)
        if self.max_cots is not None and self.cots >= self.max_cots:
            self.stopped = True
            return
        self._maybe_start_bs()

    def _on_decide(self, grant: ccha.ResourceGrant):
        i = grant.pair
        if not self.slu_live[i] or self.slu_inflight[i]:
            return
        state = self.mc_state(i)
        self.pending_decisions[(i, grant.slot_start)] = (state, self.policy.decide(i, state, self.now))

    def _on_slot_start(self, grant: ccha.ResourceGrant, granted_at: int):
        i = grant.pair
        self.scheduled[i] = False
        if not self.slu_live[i] or self.slu_inflight[i]:
            return
        t = self.now
        state = decision = None
        if self.power_family:
            state, decision = self.pending_decisions.pop((i, t), (None, None))
            if decision is None:
                return  # the packet arrived after the decision instant
            if decision.access == 0:
                self.push(t + self.slot_len - GUARD_US, P_END, EV_SLOT_CLOSE, i, (state, decision, False))
                return
        if self.scheme == "ccha_t1":
            k = int(self.rng.integers(0, self.pair_cw[i] + 1))
            anchor = t - (self.timing.t_d(self.capc) + k * self.timing.t_sl)
            ok = anchor >= granted_at and self.idle_window(i, anchor)
        else:
            ok = self.idle_window(i, t - self.timing.t_short_sl)
        if not ok:
            if self.power_family:
                self.push(t + self.slot_len - GUARD_US, P_END, EV_SLOT_CLOSE, i, (state, decision, True))
            return
        power = decision.power if decision is not None else self.cfg.fixed_slu_power
        self._start_slu(i, power, decision, state)

    def _on_dra_ssb(self, i):
        self.waiting_ssb[i] = False
        if not self.slu_live[i] or self.slu_inflight[i]:
            return
        if self.scheme == "t12_dra" and not self.idle_window(i, self.now - self.timing.t_short_sl):
            self._maybe_start_pair(i)
            return
        self._start_slu(i, self.cfg.fixed_slu_power, None, None)

    def _start_slu(self, i, power, decision, state):
        t = self.now
        if not self.cfg.slu_power_min_dbm - 1e-9 <= power <= self.cfg.slu_power_max_dbm + 1e-9:
            if self.power_family:
                self.power_violations += 1
        a = Attempt("slu", i, i, i, power, t, t + self.slot_len - GUARD_US, decision=decision, state=state)
        self.slu_inflight[i] = True
        self.slu.attempts += 1
        self.active.append(a)
        self._emit(i, power)
        self.push(a.end, P_END, EV_SLU_END, a)

    def _slot_reward(self, eta_s: Optional[float], eta_w: Optional[float]) -> tuple[float, float]:
        return slot_reward(eta_s, eta_w, self.thresholds, self.cfg.beta, self.cfg.bandwidth_hz, self.rate_scale)

    def _on_slu_end(self, a: Attempt):
        i = a.node
        self.active.remove(a)
        self._emit(i, None)
        self.slu_inflight[i] = False
        ok = a.min_sinr >= self.thresholds.slu_min
        if a.overlapped:
            self.collisions += 1
        if ok:
            self.slu.success += 1
        else:
            self.slu.failed += 1
        eta_w = a.wifi_min if math.isfinite(a.wifi_min) else None
        reward, u = self._slot_reward(a.min_sinr, eta_w)
        self.utilities.append(u)
        outcome = mac.Outcome.SUCCESS if ok else mac.Outcome.COLLISION
        if self.uses_bs:
            if self.cot_first_outcome is None:
                self.cot_first_outcome = outcome
            if self.scheme == "ccha_t1":
                self.pair_cw[i] = self._next_cw(self.pair_cw[i], outcome)
        else:
            self.pair_cw[i] = self._next_cw(self.pair_cw[i], outcome)
        self.slu_live[i] = False
        if self.slu_backlog[i] is not None:
            self.slu_live[i] = True
            self.slu_arrival[i] = self.slu_backlog[i]
            self.slu_backlog[i] = None
        self.prev_power[i] = a.power
        if self.power_family and a.decision is not None:
            self._feedback(i, a.state, a.decision, reward, True, ok)
        if self.uses_bs:
            self._maybe_start_bs()
        else:
            self._maybe_start_pair(i)

    def _on_slot_close(self, i, payload):
        state, decision, yielded = payload
        self.prev_power[i] = FLOOR_DBM
        reward = self._slot_reward(None, None)[0] if yielded else 0.0
        self._feedback(i, state, decision, reward, False, False)

    def _feedback(self, i, state, decision, reward, transmitted, ok):
        terminal = self.max_cots is not None and self.cots >= self.max_cots - 1
        rec = SlotRecord(i, self.now, state, decision, reward, self.mc_state(i), transmitted, ok, terminal)
        self.policy.feedback(rec)

    def _next_cw(self, cw, outcome):
        return mac.lbt1_cw_update(mac.lbt1_idle(self.capc, cw), outcome).cw

    def _on_arrival_slu(self, i):
        t = self.now
        self.slu.offered += 1
        self.push(self.next_arrival(t), P_TIMER, EV_ARR_SLU, i)
        if self.slu_inflight[i]:
            if self.slu_backlog[i] is not None:
                self.slu.failed += 1
            self.slu_backlog[i] = t
            return
        if self.slu_live[i]:
            self.slu.failed += 1  # the previous packet expires undelivered
            self.slu_arrival[i] = t
            return
        self.slu_live[i] = True
        self.slu_arrival[i] = t
        if self.uses_bs:
            self._maybe_start_bs()
        else:
            self._maybe_start_pair(i)

    # -- Wi-Fi -----------------------------------------------------------------

    def _on_arrival_wifi(self, j):
        self.wifi.offered += 1
        self.push(self.next_arrival(self.now), P_TIMER, EV_ARR_WIFI, j)
        if self.wifi_inflight[j]:
            if self.wifi_backlog[j]:
                self.wifi.failed += 1
            self.wifi_backlog[j] = True
            return
        if self.wifi_live[j]:
            self.wifi.failed += 1
            return
        self.wifi_live[j] = True
        self._start_csma(j)
        self._predict(self.contender_at[self.M + j])

    def _on_wifi_event(self, c: Contender, ev):
        j = c.owner
        if ev is mac.CsmaEvent.TX_START:
            self.wifi_power_at_ack[j] = self.wifi_power[j]
            power = self.wifi_power[j]
            if not self.cfg.wifi_power_min_dbm <= power <= self.cfg.wifi_power_max_dbm:
                self.power_violations += 1
            a = Attempt("wifi", j, self.M + j, self.M, power, self.now, self.now + self.csma.airtime)
            self.wifi_attempt[j] = a
            self.wifi_inflight[j] = True
            self.wifi.attempts += 1
            self.active.append(a)
            self._emit(self.M + j, power)
            self.push(a.end, P_END, EV_WIFI_TX_END, j)
        elif ev is mac.CsmaEvent.ACK_DUE:
            if self.wifi_last_ok[j]:
                self.ack_mw += phy.dbm_to_mw(self.wifi_power_at_ack[j])
                self._emit(self.ap, phy.mw_to_dbm(self.ack_mw))
        elif ev is mac.CsmaEvent.DONE:
            ok = self.wifi_last_ok[j]
            if ok:
                self.ack_mw = max(self.ack_mw - phy.dbm_to_mw(self.wifi_power_at_ack[j]), 0.0)
                if self.ack_mw < 1e-30:
                    self.ack_mw = 0.0
                self._emit(self.ap, phy.mw_to_dbm(self.ack_mw) if self.ack_mw > 0 else None)
            self.wifi_inflight[j] = False
            outcome = mac.Outcome.SUCCESS if ok else mac.Outcome.COLLISION
            c.state = mac.csma_cw_update(c.state, outcome, self.csma)
            if ok:
                self.wifi.success += 1
                self.wifi_live[j] = False
            elif self.wifi_backlog[j]:
                self.wifi.failed += 1
            if self.wifi_backlog[j]:
                self.wifi_backlog[j] = False
                self.wifi_live[j] = True
            if self.wifi_live[j]:
                self._start_csma(j)

    def _on_wifi_tx_end(self, j):
        a = self.wifi_attempt[j]
        self.active.remove(a)
        self._emit(self.M + j, None)
        ok = a.min_sinr >= self.thresholds.wifi_min
        self.wifi_last_ok[j] = ok
        # The AP cannot measure a frame that collided with another Wi-Fi frame,
        # so only clean receptions feed the closed loop.
        if self.power_family and not a.overlapped:
            self.wifi_power[j] = wifi_closed_loop_power(
                self.wifi_power[j], a.min_sinr, self.cfg.wifi_target_db, self.cfg.wifi_pc_margin_db,
                (self.cfg.wifi_power_min_dbm, self.cfg.wifi_power_max_dbm))

    # -- main loop -------------------------------------------------------------

    def _contender_event(self, c: Contender, ev):
        if c.kind == "wifi":
            self._on_wifi_event(c, ev)
        elif c.kind == "bs":
            self._on_bs_grant()
        else:
            i = c.owner
            c.state = mac.lbt1_idle(self.capc, self.pair_cw[i])
            mode = ccha.DraMode.T12 if self.scheme == "t12_dra" else ccha.DraMode.T1O
            ssb = ccha.dra_target_ssb(self.now, mode, self.grid, self.timing.t_short_sl)
            self.waiting_ssb[i] = True
            self.push(ssb, P_CHECK, EV_DRA_SSB, i)

    def _dispatch(self, kind, a, b):
        if kind == EV_CONT:
            c: Contender = a
            if b != c.version:
                return
            ev = self._advance(c, self.now, self.channel(c.sensor))
            if ev is not None:
                self._contender_event(c, ev)
            self._predict(c)
        elif kind == EV_ARR_SLU:
            self._on_arrival_slu(a)
        elif kind == EV_ARR_WIFI:
            self._on_arrival_wifi(a)
        elif kind == EV_WIFI_TX_END:
            self._on_wifi_tx_end(a)
        elif kind == EV_SLU_END:
            self._on_slu_end(a)
        elif kind == EV_COT_END:
            self._on_cot_end()
        elif kind == EV_DECIDE:
            self._on_decide(a)
        elif kind == EV_SLOT_START:
            self._on_slot_start(a, b)
        elif kind == EV_DRA_SSB:
            self._on_dra_ssb(a)
        elif kind == EV_SLOT_CLOSE:
            self._on_slot_close(a, b)
        elif kind == EV_BS_START:
            self._start_bs(a)

    def advance_to(self, t_end: float) -> None:
        """Process every instant strictly before ``t_end``; the clock ends at ``t_end``."""
        heap = self.heap
        while self.dirty:  # changes made from outside an event, at the current instant
            self._end_of_instant()
        while heap and heap[0][0] < t_end and not self.stopped:
            t = heap[0][0]
            self.now = t
            while heap and heap[0][0] == t:
                _, _, _, kind, a, b = heapq.heappop(heap)
                self._dispatch(kind, a, b)
                if self.stopped:
                    break
            while self.dirty:
                self._end_of_instant()
        if not self.stopped and math.isfinite(t_end):
            self.now = int(t_end)

    def run(self, horizon_us: Optional[int] = None) -> MetricsReport:
        self.horizon = self.cfg.horizon_us if horizon_us is None else horizon_us
        self.advance_to(self.horizon)
        return self.report()

    # -- reporting -------------------------------------------------------------

    def report(self) -> MetricsReport:
        cfg = self.cfg
        elapsed = self.now / 1e6 if self.now > 0 else cfg.horizon_s
        slu_q = sum(self.slu_live) + sum(b is not None for b in self.slu_backlog)
        wifi_q = sum(self.wifi_live) + sum(self.wifi_backlog)
        tb = cfg.tb_size_bytes
        thr_s = phy.throughput_bps(self.slu.success, tb, elapsed)
        thr_w = phy.throughput_bps(self.wifi.success, tb, elapsed)
        jain = phy.jain_index([thr_s, thr_w]) if thr_s + thr_w > 0 else 1.0
        total_off = self.slu.offered + self.wifi.offered
        return MetricsReport(
            scheme=cfg.scheme, m=self.M, n=self.N, seed=cfg.seed, replicate=cfg.replicate,
            horizon_s=elapsed,
            slu_offered=self.slu.offered, slu_success=self.slu.success, slu_failed=self.slu.failed,
            slu_queued=slu_q, slu_attempts=self.slu.attempts,
            wifi_offered=self.wifi.offered, wifi_success=self.wifi.success, wifi_failed=self.wifi.failed,
            wifi_queued=wifi_q, wifi_attempts=self.wifi.attempts,
            prr_slu=phy.prr(self.slu.success, self.slu.offered),
            prr_wifi=phy.prr(self.wifi.success, self.wifi.offered),
            prr_total=phy.prr(self.slu.success + self.wifi.success, total_off),
            throughput_slu_bps=thr_s, throughput_wifi_bps=thr_w, throughput_total_bps=thr_s + thr_w,
            jain=jain,
            mean_utility=float(np.mean(self.utilities)) if self.utilities else 0.0,
            collisions=self.collisions, max_concurrent_slu=self.max_slu,
            max_concurrent_wifi=self.max_wifi, power_violations=self.power_violations, cots=self.cots,
        )


def step(world: World, dt: int = 1) -> World:
    """Advance the world by ``dt`` microseconds."""
    world.advance_to(world.now + dt)
    return world


def run(cfg: RunConfig, policy: Optional[SlotPolicy] = None) -> MetricsReport:
    """Simulate one configuration. Power-control schemes need a slot policy."""
    if cfg.scheme not in ACCESS_SCHEMES and policy is None:
        from .policies import default_policy
        policy = default_policy(cfg)
    return World(cfg, policy).run()
