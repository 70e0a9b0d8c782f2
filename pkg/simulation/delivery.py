"""
Frame-by-frame delivery of one content item over a formation configuration.

MBSFN and unicast users receive on D subframes at a constant per-subframe
rate, so their completion subframe follows directly from the TDD pattern.
D2D users depend on their area's relay pool: relays buffer what they get on
D subframes and forward it on U subframes, so each area's relay stream is
walked subframe by subframe, skipping whole frames once the per-frame pattern
repeats. D2D users are credited their forwarded bits on every U subframe;
downlink users are credited the content at their completion subframe.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from network.frame import FRAME_DURATION_S, FRAME_SUBFRAMES, CarrierGrid, SubframeKind, TddConfiguration
from network.radio import RadioModel, rate_per_rb
from services.allocation import d2d_rate_of_area, d2d_users_by_area
from services.models import FormationConfiguration
from utils.errors import InvalidArgumentError, UnservableUserError

logger = logging.getLogger(__name__)

_EPS_BITS = 1e-6


@dataclass
class RelayBuffer:
    """Shared store-and-forward buffer of one MBSFN Area's relay pool."""

    area_id: int
    relays: Tuple[int, ...]
    buffered_bits: float = 0.0
    ingested_bits: float = 0.0
    forwarded_bits: float = 0.0

    def ingest(self, bits: float, content_bits: float) -> float:
        accepted = max(0.0, min(bits, content_bits - self.ingested_bits))
        self.ingested_bits += accepted
        self.buffered_bits += accepted
        return accepted

    def forward(self, capacity_bits: float) -> float:
        bits = min(self.buffered_bits, capacity_bits)
        self.buffered_bits -= bits
        self.forwarded_bits += bits
        return bits


@dataclass
class DeliveryState:
    received_bits: Dict[int, float] = field(default_factory=dict)
    buffers: Dict[int, RelayBuffer] = field(default_factory=dict)
    completion_ms: Dict[int, int] = field(default_factory=dict)
    elapsed_ms: int = 0
    ul_rb_used: int = 0
    ul_rb_available: int = 0

    def receive(self, users: Iterable[int], bits: float, content_bits: float):
        """Credit bits to users; a user's count never drops and stops at content_bits."""
        if bits < 0:
            raise InvalidArgumentError(f"Received bits must be >= 0, got {bits}")
        for user in users:
            held = self.received_bits.get(user, 0.0)
            self.received_bits[user] = min(content_bits, held + bits)


@dataclass(frozen=True)
class MetricsReport:
    adr: float  # bit/s, steady state
    avg_throughput: float  # bit/s
    delivery_time: float  # s
    used_d2d_rb_pct: float
    adr_b: float = 0.0
    adr_u: float = 0.0
    adr_d2d: float = 0.0
    # mean over unicast and D2D users, 0 when every user is in an MBSFN Area
    avg_throughput_outside: float = 0.0
    state: Optional[DeliveryState] = field(default=None, repr=False, compare=False)


def used_rb_for_d2d(state: DeliveryState) -> float:
    """Share of the uplink RBs offered to D2D that relays actually used, in percent."""
    if state.ul_rb_available <= 0:
        return 0.0
    return 100.0 * state.ul_rb_used / state.ul_rb_available


def _dl_completion_ms(tdd: TddConfiguration, bits_per_d: float, content_bits: float) -> int:
    """Millisecond at which a constant-rate downlink user holds the whole content."""
    d_positions = tdd.positions(SubframeKind.DOWNLINK)
    k = max(1, math.ceil(content_bits / bits_per_d - 1e-12))
    frame, idx = divmod(k - 1, len(d_positions))
    return frame * FRAME_SUBFRAMES + d_positions[idx] + 1


class _AreaStream:
    """Relay pool of one area feeding its D2D users."""

    def __init__(self, buffer: RelayBuffer, ingress_per_d: float, rate_d: float, n_rb: int,
                 tdd: TddConfiguration, content_bits: float, members: Sequence[int] = (),
                 state: Optional[DeliveryState] = None, skip_ahead: bool = True):
        self.buffer = buffer
        self.ingress_per_d = ingress_per_d
        self.rate_d = rate_d
        self.n_rb = n_rb
        self.capacity = n_rb * rate_d
        self.tdd = tdd
        self.content_bits = content_bits
        self.tolerance = max(_EPS_BITS, 1e-9 * content_bits)
        self.members = tuple(members)
        self.state = state if state is not None else DeliveryState()
        self.skip_ahead = skip_ahead
        self.used = 0
        self.available = 0

    def _complete(self) -> bool:
        if self.buffer.forwarded_bits >= self.content_bits - self.tolerance:
            return True
        drained = self.buffer.buffered_bits <= self.tolerance
        return drained and self.buffer.ingested_bits >= self.content_bits - self.tolerance

    def _used_rb(self, bits: float) -> int:
        # Float noise below the completion tolerance must not open another RB.
        if bits <= self.tolerance:
            return 0
        return min(self.n_rb, math.ceil((bits - self.tolerance) / self.rate_d))

    def _forward(self) -> Tuple[float, int]:
        self.available += self.n_rb
        bits = self.buffer.forward(self.capacity)
        used = self._used_rb(bits)
        self.used += used
        self.state.receive(self.members, bits, self.content_bits)
        return bits, used

    def _frame(self, frame: int) -> Tuple[Optional[int], np.ndarray, float, Tuple[int, ...]]:
        """Walk one frame; returns (completion ms or None, forwards and RBs per U subframe, slack)."""
        forwards: List[float] = []
        used_rbs: List[int] = []
        slack = math.inf
        for pos, kind in enumerate(self.tdd.pattern):
            if kind is SubframeKind.DOWNLINK:
                self.buffer.ingest(self.ingress_per_d, self.content_bits)
            elif kind is SubframeKind.UPLINK:
                slack = min(slack, self.buffer.buffered_bits - self.capacity)
                bits, used = self._forward()
                forwards.append(bits)
                used_rbs.append(used)
                if self._complete():
                    return frame * FRAME_SUBFRAMES + pos + 1, np.array(forwards), slack, tuple(used_rbs)
        return None, np.array(forwards), slack, tuple(used_rbs)

    def run(self) -> int:
        """Simulate until the D2D users hold the whole content; returns the completion ms."""
        frame = 0
        previous: Optional[Tuple[np.ndarray, Tuple[int, ...]]] = None
        while True:
            start_ingested = self.buffer.ingested_bits
            start_forwarded = self.buffer.forwarded_bits
            done, forwards, slack, used_rbs = self._frame(frame)
            if done is not None:
                return done
            frame += 1

            if self.skip_ahead and previous is not None and self._repeats(previous, forwards, used_rbs):
                skipped = self._skippable_frames(forwards, slack, start_ingested, start_forwarded)
                if skipped > 0:
                    di = self.buffer.ingested_bits - start_ingested
                    dd = self.buffer.forwarded_bits - start_forwarded
                    self.buffer.ingested_bits += skipped * di
                    self.buffer.forwarded_bits += skipped * dd
                    self.buffer.buffered_bits += skipped * (di - dd)
                    self.state.receive(self.members, skipped * dd, self.content_bits)
                    self.used += skipped * sum(used_rbs)
                    self.available += skipped * len(forwards) * self.n_rb
                    frame += skipped
            previous = (forwards, used_rbs)

    @staticmethod
    def _repeats(previous: Tuple[np.ndarray, Tuple[int, ...]], forwards: np.ndarray,
                 used_rbs: Tuple[int, ...]) -> bool:
        """A frame repeats the last one when every U subframe used the same RBs for the same bits."""
        last_forwards, last_used = previous
        if last_used != used_rbs or last_forwards.shape != forwards.shape:
            return False
        return bool(np.allclose(forwards, last_forwards, rtol=1e-9, atol=_EPS_BITS))

    def _skippable_frames(self, forwards: np.ndarray, slack: float, start_ingested: float,
                          start_forwarded: float) -> int:
        di = self.buffer.ingested_bits - start_ingested
        dd = self.buffer.forwarded_bits - start_forwarded
        if dd <= _EPS_BITS:
            return 0
        shrink = dd - di

        if np.allclose(forwards, self.capacity):
            by_buffer = math.inf if shrink <= _EPS_BITS else math.floor(max(slack, 0.0) / shrink)
        elif abs(shrink) <= _EPS_BITS:
            by_buffer = math.inf
        else:
            return 0
        by_ingress = math.inf if di <= _EPS_BITS else math.floor((self.content_bits - self.buffer.ingested_bits) / di) - 1
        by_delivery = math.floor((self.content_bits - self.buffer.forwarded_bits) / dd) - 1
        return max(0, int(min(by_buffer, by_ingress, by_delivery)))


def _steady_frame_forward(ingress_per_d: float, capacity: float, tdd: TddConfiguration) -> float:
    """Bits a relay pool forwards during the second frame of an uncapped transfer."""
    buffer = RelayBuffer(area_id=-1, relays=())
    forwarded = 0.0
    for frame in range(2):
        for kind in tdd.pattern:
            if kind is SubframeKind.DOWNLINK:
                buffer.ingest(ingress_per_d, math.inf)
            elif kind is SubframeKind.UPLINK:
                bits = buffer.forward(capacity)
                if frame == 1:
                    forwarded += bits
    return forwarded


def simulate_delivery(cfg: FormationConfiguration, tdd: TddConfiguration, grid: CarrierGrid,
                      radio: RadioModel = RadioModel(), content_bytes: int = 20_000_000) -> MetricsReport:
    """
    Deliver content_bytes to every user of a configuration.

    Args:
        cfg: Valid formation configuration
        tdd: Frame configuration
        grid: Carrier grid (its RB count is the UL pool of every area)
        radio: CQI table source
        content_bytes: Content size, decimal bytes

    Returns:
        MetricsReport with steady-state ADR, mean throughput (over all users and over the users
        outside the MBSFN Areas), mean delivery time and D2D RB usage

    Raises:
        InvalidArgumentError: If content_bytes < 1
        UnservableUserError: If some user has no positive rate on its path
    """
    if content_bytes < 1:
        raise InvalidArgumentError(f"content_bytes must be >= 1, got {content_bytes}")
    content_bits = 8.0 * content_bytes
    table = radio.table
    n_u = len(tdd.positions(SubframeKind.UPLINK))
    n_d = len(tdd.positions(SubframeKind.DOWNLINK))
    area_of_cell = cfg.area_of_cell()
    areas = {a.id: a for a in cfg.areas}

    state = DeliveryState()
    adr_b = adr_u = adr_d2d = 0.0

    def area_ingress(area_id: Optional[int], user: int) -> float:
        area = areas.get(area_id)
        if area is None or area.mcs is None or area.rb_b < 1:
            raise UnservableUserError(f"User {user} has no MBSFN transmission to receive")
        return rate_per_rb(area.mcs, table) * area.rb_b

    for user in sorted(cfg.mbsfn_users):
        bits_per_d = area_ingress(area_of_cell.get(cfg.user_cell[user]), user)
        state.completion_ms[user] = _dl_completion_ms(tdd, bits_per_d, content_bits)
        state.receive((user,), content_bits, content_bits)
        adr_b += bits_per_d * n_d / FRAME_DURATION_S

    for user in sorted(cfg.unicast_users):
        cqi, rb = cfg.user_cqi.get(user, 0), cfg.rb_unicast.get(user, 0)
        if cqi < 1 or rb < 1:
            raise UnservableUserError(f"Unicast user {user} has CQI {cqi} and {rb} RBs")
        bits_per_d = rate_per_rb(cqi, table) * rb
        state.completion_ms[user] = _dl_completion_ms(tdd, bits_per_d, content_bits)
        state.receive((user,), content_bits, content_bits)
        adr_u += bits_per_d * n_d / FRAME_DURATION_S

    for area_id, members in sorted(d2d_users_by_area(cfg).items()):
        if n_u == 0:
            raise UnservableUserError(f"D2D users {members[:5]} have no uplink subframe to be served on")
        if any(cfg.user_cqi.get(d, 0) < 1 for d in members):
            raise UnservableUserError(f"Area {area_id} has D2D users with CQI 0")
        ingress = area_ingress(area_id, members[0])
        rate_d = d2d_rate_of_area(cfg, members, table)
        relays = tuple(sorted({cfg.d2d_users[d] for d in members}))
        buffer = RelayBuffer(area_id=area_id, relays=relays)
        stream = _AreaStream(buffer, ingress, rate_d, grid.n_rb, tdd, content_bits, members, state)
        done = stream.run()
        state.buffers[area_id] = buffer
        state.ul_rb_used += stream.used
        state.ul_rb_available += stream.available
        for d in members:
            state.completion_ms[d] = done
        adr_d2d += len(members) * _steady_frame_forward(ingress, stream.capacity, tdd) / FRAME_DURATION_S
        logger.debug(f"Area {area_id}: {len(members)} D2D users complete at {done} ms, "
                     f"{stream.used}/{stream.available} UL RBs used")

    state.elapsed_ms = max(state.completion_ms.values(), default=0)

    if state.completion_ms:
        seconds = np.array([ms / 1000.0 for _, ms in sorted(state.completion_ms.items())])
        delivery_time = float(seconds.mean())
        avg_throughput = float((content_bits / seconds).mean())
    else:
        delivery_time = avg_throughput = 0.0

    outside = sorted(set(cfg.unicast_users) | set(cfg.d2d_users))
    if outside:
        seconds = np.array([state.completion_ms[u] / 1000.0 for u in outside])
        avg_throughput_outside = float((content_bits / seconds).mean())
    else:
        avg_throughput_outside = 0.0

    return MetricsReport(
        adr=adr_b + adr_u + adr_d2d,
        avg_throughput=avg_throughput,
        delivery_time=delivery_time,
        used_d2d_rb_pct=used_rb_for_d2d(state),
        adr_b=adr_b,
        adr_u=adr_u,
        adr_d2d=adr_d2d,
        avg_throughput_outside=avg_throughput_outside,
        state=state,
    )
