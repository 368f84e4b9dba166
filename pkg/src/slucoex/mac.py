"""Contention state machines for Wi-Fi CSMA/CA and SL-U LBT.

Time is integer microseconds. The step functions are pure: they take a
state, the channel condition seen over the next ``dt`` microseconds and
return a new state plus an optional event. A step stops at the first event
it produces; callers advance to event boundaries and never step across two.

Random backoff counters are drawn by the caller and passed in when a
contention starts, which keeps every step deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import phy


class Channel(enum.Enum):
    IDLE = "idle"
    BUSY = "busy"


class Outcome(enum.Enum):
    SUCCESS = "success"
    COLLISION = "collision"


class Lbt2Result(enum.Enum):
    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class CapcClass:
    p: int
    m_p: int
    cw_min: int
    cw_max: int
    t_mcot_ms: float
    allowed_cw: tuple[int, ...]

    @property
    def t_mcot_us(self) -> int:
        return int(round(self.t_mcot_ms * 1000))


# Channel access priority classes. Classes 3 and 4 allow 6 or 10 ms; 6 ms
# is used here.
CAPC_TABLE = {
    1: CapcClass(1, 2, 3, 7, 2.0, (3, 7)),
    2: CapcClass(2, 2, 7, 15, 4.0, (7, 15)),
    3: CapcClass(3, 3, 15, 1023, 6.0, (15, 31, 63, 127, 255, 511, 1023)),
    4: CapcClass(4, 7, 15, 1023, 6.0, (15, 31, 63, 127, 255, 511, 1023)),
}
# Classes whose MCOT is either of two values.
CAPC_ALT_MCOT_MS = {3: (6.0, 10.0), 4: (6.0, 10.0)}


def capc_lookup(p: int) -> CapcClass:
    try:
        return CAPC_TABLE[p]
    except KeyError:
        raise ValueError(f"unknown channel access priority class {p!r}; expected 1..4") from None


@dataclass(frozen=True)
class MacTiming:
    sifs: int = 16
    difs: int = 34
    t_sl: int = 9
    t_short_sl: int = 25

    def __post_init__(self):
        if self.t_short_sl not in (16, 25):
            raise ValueError(f"t_short_sl must be 16 or 25 us, got {self.t_short_sl}")

    def t_d(self, capc: CapcClass) -> int:
        """LBT defer duration: 16 us plus m_p sensing slots (34 us for p=1)."""
        return 16 + capc.m_p * self.t_sl


DEFAULT_TIMING = MacTiming()


@dataclass(frozen=True)
class EdConfig:
    threshold: float = -72.0  # dBm

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise ValueError("ED threshold must be finite")


def energy_detect(received_powers: Sequence[float], cfg: EdConfig) -> Channel:
    """Clear channel assessment on the linear sum of received powers (dBm)."""
    if not received_powers:
        return Channel.IDLE
    total_mw = math.fsum(phy.dbm_to_mw(p) for p in received_powers)
    return Channel.BUSY if total_mw >= phy.dbm_to_mw(cfg.threshold) else Channel.IDLE


# -- shared defer + backoff core ---------------------------------------------

def _contend(deferring, defer_rem, counter, progress, defer_total, t_sl, channel, dt):
    """Advance a defer/backoff countdown.

    Returns ``(deferring, defer_rem, counter, progress, granted)``.
    """
    if channel is Channel.BUSY:
        # Busy resets the defer; a running backoff freezes and needs a fresh defer.
        return True, defer_total, counter, 0, False
    t = dt
    if deferring:
        if t < defer_rem:
            return True, defer_rem - t, counter, progress, False
        t -= defer_rem
        deferring, defer_rem, progress = False, 0, 0
    if counter == 0:
        return False, 0, 0, 0, True
    if t < t_sl - progress:
        return False, 0, counter, progress + t, False
    t -= t_sl - progress
    counter -= 1
    whole = min(counter, t // t_sl)
    counter -= whole
    t -= whole * t_sl
    if counter == 0:
        return False, 0, 0, 0, True
    return False, 0, counter, t, False


def _time_to_grant(deferring, defer_rem, counter, progress, t_sl):
    if deferring:
        return defer_rem + counter * t_sl
    return counter * t_sl - progress


# -- LBT Type 1 ---------------------------------------------------------------

class LbtPhase(enum.Enum):
    IDLE = "idle"
    DEFERRING = "deferring"
    BACKING_OFF = "backing_off"
    GRANTED = "granted"


@dataclass(frozen=True)
class LbtType1State:
    phase: LbtPhase
    capc: CapcClass
    cw: int
    defer_remaining: int = 0
    backoff_counter: int = 0
    slot_progress: int = 0

    def __post_init__(self):
        if self.cw not in self.capc.allowed_cw:
            raise ValueError(f"cw {self.cw} not allowed for CAPC {self.capc.p}")
        if not 0 <= self.backoff_counter <= self.cw:
            raise ValueError(f"backoff counter {self.backoff_counter} outside [0, {self.cw}]")


def lbt1_idle(capc: CapcClass, cw: Optional[int] = None) -> LbtType1State:
    return LbtType1State(LbtPhase.IDLE, capc, capc.cw_min if cw is None else cw)


def lbt1_start(state: LbtType1State, counter: int, timing: MacTiming = DEFAULT_TIMING) -> LbtType1State:
    """Begin a Type 1 attempt with a backoff counter drawn from [0, cw]."""
    return replace(
        state,
        phase=LbtPhase.DEFERRING,
        defer_remaining=timing.t_d(state.capc),
        backoff_counter=counter,
        slot_progress=0,
    )


def lbt1_step(
    state: LbtType1State, channel: Channel, dt: int, timing: MacTiming = DEFAULT_TIMING
) -> tuple[LbtType1State, Optional[int]]:
    """Advance Type 1 sensing by ``dt`` us; the grant carries the MCOT in us."""
    if state.phase in (LbtPhase.IDLE, LbtPhase.GRANTED):
        return state, None
    deferring, rem, counter, progress, granted = _contend(
        state.phase is LbtPhase.DEFERRING,
        state.defer_remaining,
        state.backoff_counter,
        state.slot_progress,
        timing.t_d(state.capc),
        timing.t_sl,
        channel,
        dt,
    )
    if granted:
        return replace(state, phase=LbtPhase.GRANTED, defer_remaining=0,
                       backoff_counter=0, slot_progress=0), state.capc.t_mcot_us
    phase = LbtPhase.DEFERRING if deferring else LbtPhase.BACKING_OFF
    return LbtType1State(phase, state.capc, state.cw, rem, counter, progress), None


def lbt1_time_to_grant(state: LbtType1State, timing: MacTiming = DEFAULT_TIMING) -> float:
    """Microseconds until the grant if the channel stays idle."""
    if state.phase is LbtPhase.GRANTED:
        return 0
    if state.phase is LbtPhase.IDLE:
        return math.inf
    return _time_to_grant(state.phase is LbtPhase.DEFERRING, state.defer_remaining,
                          state.backoff_counter, state.slot_progress, timing.t_sl)


def lbt1_cw_update(state: LbtType1State, outcome: Outcome) -> LbtType1State:
    allowed = state.capc.allowed_cw
    if outcome is Outcome.SUCCESS:
        cw = allowed[0]
    else:
        i = allowed.index(state.cw)
        cw = allowed[min(i + 1, len(allowed) - 1)]
    return replace(state, cw=cw, backoff_counter=min(state.backoff_counter, cw))


# -- LBT Type 2 ---------------------------------------------------------------

def lbt2_check(idle_duration: float, variant: int = 25) -> Lbt2Result:
    """Pass iff the channel was idle for the whole window before the boundary.

    ``idle_duration`` is the length of the idle run ending at the boundary.
    """
    if variant not in (16, 25):
        raise ValueError(f"Type 2 variant must be 16 or 25 us, got {variant}")
    return Lbt2Result.PASS if idle_duration >= variant else Lbt2Result.FAIL


# -- Wi-Fi CSMA/CA -------------------------------------------------------------

class CsmaPhase(enum.Enum):
    IDLE = "idle"
    DIFS_WAIT = "difs_wait"
    BACKING_OFF = "backing_off"
    TRANSMITTING = "transmitting"
    SIFS_WAIT = "sifs_wait"
    AWAIT_ACK = "await_ack"


class CsmaEvent(enum.Enum):
    TX_START = "tx_start"
    ACK_DUE = "ack_due"
    DONE = "done"


@dataclass(frozen=True)
class CsmaParams:
    airtime: int = 100  # us, one 300-byte frame including preamble
    ack_time: int = 44  # us, legacy-rate ACK
    cw_min: int = 15
    cw_max: int = 1023


DEFAULT_CSMA = CsmaParams()


@dataclass(frozen=True)
class CsmaState:
    phase: CsmaPhase = CsmaPhase.IDLE
    cw: int = 15
    remaining: int = 0  # us left in DIFS or in a timed phase
    backoff_counter: int = 0
    slot_progress: int = 0

    def __post_init__(self):
        if self.backoff_counter < 0:
            raise ValueError("backoff counter must be >= 0")


def csma_start(state: CsmaState, counter: int, timing: MacTiming = DEFAULT_TIMING) -> CsmaState:
    """A packet is pending: wait DIFS, then count down ``counter`` idle slots."""
    return CsmaState(CsmaPhase.DIFS_WAIT, state.cw, timing.difs, counter, 0)


def csma_step(
    state: CsmaState,
    channel: Channel,
    dt: int,
    params: CsmaParams = DEFAULT_CSMA,
    timing: MacTiming = DEFAULT_TIMING,
) -> tuple[CsmaState, Optional[CsmaEvent]]:
    phase = state.phase
    if phase is CsmaPhase.IDLE:
        return state, None
    if phase in (CsmaPhase.DIFS_WAIT, CsmaPhase.BACKING_OFF):
        deferring, rem, counter, progress, granted = _contend(
            phase is CsmaPhase.DIFS_WAIT, state.remaining, state.backoff_counter,
            state.slot_progress, timing.difs, timing.t_sl, channel, dt,
        )
        if granted:
            return CsmaState(CsmaPhase.TRANSMITTING, state.cw, params.airtime), CsmaEvent.TX_START
        phase = CsmaPhase.DIFS_WAIT if deferring else CsmaPhase.BACKING_OFF
        return CsmaState(phase, state.cw, rem, counter, progress), None
    # Timed phases ignore the channel.
    if dt < state.remaining:
        return replace(state, remaining=state.remaining - dt), None
    if phase is CsmaPhase.TRANSMITTING:
        nxt = CsmaState(CsmaPhase.SIFS_WAIT, state.cw, timing.sifs)
        if dt == state.remaining:
            return nxt, None
        return csma_step(nxt, channel, dt - state.remaining, params, timing)
    if phase is CsmaPhase.SIFS_WAIT:
        return CsmaState(CsmaPhase.AWAIT_ACK, state.cw, params.ack_time), CsmaEvent.ACK_DUE
    return CsmaState(CsmaPhase.IDLE, state.cw), CsmaEvent.DONE


def csma_time_to_event(state: CsmaState, params: CsmaParams = DEFAULT_CSMA,
                       timing: MacTiming = DEFAULT_TIMING) -> float:
    """Microseconds until the next event if the channel stays idle."""
    phase = state.phase
    if phase is CsmaPhase.IDLE:
        return math.inf
    if phase is CsmaPhase.DIFS_WAIT:
        return _time_to_grant(True, state.remaining, state.backoff_counter, 0, timing.t_sl)
    if phase is CsmaPhase.BACKING_OFF:
        return _time_to_grant(False, 0, state.backoff_counter, state.slot_progress, timing.t_sl)
    if phase is CsmaPhase.TRANSMITTING:
        return state.remaining + timing.sifs
    return state.remaining


def csma_cw_update(state: CsmaState, outcome: Outcome, params: CsmaParams = DEFAULT_CSMA) -> CsmaState:
    if outcome is Outcome.SUCCESS:
        return replace(state, cw=params.cw_min)
    return replace(state, cw=min(2 * state.cw + 1, params.cw_max))
