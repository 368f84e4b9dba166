"""Collaborative channel access and the SL-U baseline access schemes.

The BS wins a channel occupancy time (COT) with Type 1 LBT, splits it into
slots on the spectrum slot boundary (SSB) grid and hands the slots to
pending pairs. Each pair re-checks the channel with a short Type 2 sense in
the guard interval that ends the preceding slot.

Channel observations are supplied through a ``ChannelTrace``: anything that
can say whether a sensor saw an idle channel throughout a time window.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from . import mac
from .mac import Channel, LbtType1State, MacTiming, DEFAULT_TIMING

SLOT_LEN_US = 500  # 30 kHz sub-carrier spacing
GI_US = 1000.0 / 30.0  # one OFDM symbol at 30 kHz, 33.33 us
GI_TICKS = 33  # silent tail of a slot on the 1 us tick grid


class Access(enum.Enum):
    TRANSMIT = "transmit"
    YIELD = "yield"


class DraMode(enum.Enum):
    T12 = "t12"  # Type 1, then Type 2 before the SSB
    T1O = "t1o"  # Type 1 only


class ChannelTrace(Protocol):
    def idle_throughout(self, start: float, end: float) -> bool: ...


@dataclass(frozen=True)
class IntervalTrace:
    """A channel described by its busy intervals ``[start, end)`` in us."""

    busy: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "busy", tuple(sorted((int(a), int(b)) for a, b in self.busy)))

    def channel_at(self, t: float) -> Channel:
        for a, b in self.busy:
            if a <= t < b:
                return Channel.BUSY
        return Channel.IDLE

    def idle_throughout(self, start: float, end: float) -> bool:
        return all(b <= start or a >= end for a, b in self.busy)

    def next_change(self, t: float) -> float:
        edges = sorted({e for iv in self.busy for e in iv})
        i = bisect.bisect_right(edges, t)
        return edges[i] if i < len(edges) else math.inf


@dataclass(frozen=True)
class SlotGrid:
    slot_len: int = SLOT_LEN_US
    offset: int = 0

    def ssb_at_or_after(self, t: float) -> int:
        k = math.ceil((t - self.offset) / self.slot_len)
        return self.offset + k * self.slot_len


@dataclass(frozen=True)
class CotWindow:
    start: int
    duration: int
    bandwidth: float
    owner: int = 0

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class ResourceGrant:
    cot: CotWindow
    slot_index: int
    slot_start: int
    slot_end: int
    pair: int
    gi: float = GI_US

    @property
    def data_end(self) -> int:
        """End of the data part; the final ``GI_TICKS`` us of the slot stay silent."""
        return self.slot_end - GI_TICKS


def slots_in(cot: CotWindow, grid: SlotGrid = SlotGrid()) -> int:
    return cot.duration // grid.slot_len


def cot_for_grant(grant_time: float, t_mcot: int, grid: SlotGrid = SlotGrid(),
                  bandwidth: float = 20e6, owner: int = 0, sense_window: int = 25) -> CotWindow:
    """COT opened by a Type 1 grant: it starts on the first SSB that still
    leaves room for the first user's Type 2 window after the grant."""
    start = grid.ssb_at_or_after(grant_time + sense_window)
    return CotWindow(start, t_mcot, bandwidth, owner)


def run_lbt1(state: LbtType1State, trace: IntervalTrace, start: int, horizon: float,
             timing: MacTiming = DEFAULT_TIMING) -> Optional[int]:
    """Drive a started Type 1 attempt over a trace; return the grant time or None."""
    t = start
    while t < horizon:
        ch = trace.channel_at(t)
        nxt = min(trace.next_change(t), horizon)
        if ch is Channel.IDLE:
            ttg = mac.lbt1_time_to_grant(state, timing)
            if t + ttg <= nxt:
                return int(t + ttg) if t + ttg <= horizon else None
        state, _ = mac.lbt1_step(state, ch, int(nxt - t), timing)
        t = nxt
    return None


def bs_acquire_cot(lbt_state: LbtType1State, channel_trace: IntervalTrace, start: int = 0,
                   horizon: float = math.inf, grid: SlotGrid = SlotGrid(),
                   timing: MacTiming = DEFAULT_TIMING, bandwidth: float = 20e6) -> Optional[CotWindow]:
    """BS-side Type 1 LBT; on success a COT of one MCOT aligned to the next SSB."""
    granted = run_lbt1(lbt_state, channel_trace, start, horizon, timing)
    if granted is None:
        return None
    return cot_for_grant(granted, lbt_state.capc.t_mcot_us, grid, bandwidth,
                         sense_window=timing.t_short_sl)


def allocate_slots(cot: CotWindow, pending: Sequence[int],
                   grid: SlotGrid = SlotGrid()) -> list[ResourceGrant]:
    """One slot per pending pair, in the given order, until the COT is full."""
    grants = []
    for k, pair in enumerate(pending[: slots_in(cot, grid)]):
        s = cot.start + k * grid.slot_len
        grants.append(ResourceGrant(cot, k, s, s + grid.slot_len, pair))
    return grants


def user_access(grant: ResourceGrant, channel_trace: ChannelTrace, variant: int = 25) -> Access:
    """Type 2 gate in the last ``variant`` us before the granted slot."""
    idle = channel_trace.idle_throughout(grant.slot_start - variant, grant.slot_start)
    return Access.TRANSMIT if idle else Access.YIELD


def scheme_ccha_t1(grant: ResourceGrant, channel_trace: ChannelTrace, counter: int,
                   capc: mac.CapcClass = mac.capc_lookup(1), timing: MacTiming = DEFAULT_TIMING,
                   not_before: float = -math.inf) -> Access:
    """Centralised grant, but the user runs a full Type 1 that must end on the SSB.

    The attempt is anchored so that an always-idle channel grants exactly on
    the boundary. Any busy instant in the window pushes the grant past the
    SSB, so the outcome reduces to an idle check over the whole window.
    ``not_before`` is when the user learned of its grant.
    """
    start = grant.slot_start - (timing.t_d(capc) + counter * timing.t_sl)
    if start < not_before:
        return Access.YIELD
    idle = channel_trace.idle_throughout(start, grant.slot_start)
    return Access.TRANSMIT if idle else Access.YIELD


def dra_target_ssb(grant_time: float, mode: DraMode, grid: SlotGrid = SlotGrid(),
                   variant: int = 25) -> int:
    """SSB a pair aims at once its own Type 1 has finished."""
    if mode is DraMode.T12:
        return grid.ssb_at_or_after(grant_time + variant)
    return grid.ssb_at_or_after(grant_time)


@dataclass(frozen=True)
class DraDecision:
    access: Access
    ssb: Optional[int]
    lbt1_done: Optional[int]


def scheme_dra(start: int, lbt_state: LbtType1State, mode: DraMode, channel_trace: IntervalTrace,
               grid: SlotGrid = SlotGrid(), timing: MacTiming = DEFAULT_TIMING,
               horizon: float = math.inf) -> DraDecision:
    """Uncoordinated access for one pair: Type 1, wait for the SSB, optional Type 2."""
    done = run_lbt1(lbt_state, channel_trace, start, horizon, timing)
    if done is None:
        return DraDecision(Access.YIELD, None, None)
    ssb = dra_target_ssb(done, mode, grid, timing.t_short_sl)
    if mode is DraMode.T1O:
        return DraDecision(Access.TRANSMIT, ssb, done)
    idle = channel_trace.idle_throughout(ssb - timing.t_short_sl, ssb)
    return DraDecision(Access.TRANSMIT if idle else Access.YIELD, ssb, done)
