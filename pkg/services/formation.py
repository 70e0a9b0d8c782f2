"""
MBSFN area formation: D2D-aided MCS peeling and the unicast-only baseline.

Both algorithms start from the basic configuration (every cell with at least
two interested users joins an MBSFN Area made of adjacent cells, served at the
lowest MBSFN CQI of its users) and then raise the MBSFN MCS one CQI level at a
time. Users of the peeled level leave the multicast group; D2D-MAF tries to
reach them through relays chosen among the remaining multicast users, while
SCF serves all of them by unicast. A level is kept when the aggregate data
rate does not decrease, otherwise the run stops.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from network.frame import CarrierGrid, TddConfiguration, subframe_counts
from network.radio import (
    RadioModel,
    cell_rx_mw_matrix,
    d2d_rx_mw_matrix,
    rate_per_rb,
    sinr_to_cqi_array,
    ue_noise_mw_array,
)
from network.topology import SynchronizationArea, UserTerminal, adjacent_subsets
from services.allocation import AreaLoad, allocate_downlink, allocate_uplink, compute_adr
from services.models import (
    AllocationPolicy,
    D2dCsiMatrix,
    FormationConfiguration,
    FormationResult,
    FormationStep,
    MbsfnArea,
)
from utils.errors import ConstraintViolationError, InvalidArgumentError

logger = logging.getLogger(__name__)

ALGORITHMS = ("d2d-maf", "scf")

# Receivers per block when building CSI matrices, bounds peak memory.
_CSI_BLOCK = 128


def radio_for_grid(radio: RadioModel, grid: CarrierGrid) -> RadioModel:
    """Radio model whose SINR bandwidth is the carrier's RB pool."""
    if radio.params.bandwidth_rb == grid.n_rb:
        return radio
    return replace(radio, params=replace(radio.params, bandwidth_rb=grid.n_rb))


class _FormationContext:
    """Per-run precomputed geometry and link qualities."""

    def __init__(self, area: SynchronizationArea, users: Sequence[UserTerminal], tdd: TddConfiguration,
                 grid: CarrierGrid, radio: RadioModel, policy: AllocationPolicy):
        self.area = area
        self.users = sorted(users, key=lambda u: u.id)
        self.by_id = {u.id: u for u in self.users}
        if len(self.by_id) != len(self.users):
            raise InvalidArgumentError("User ids must be unique")
        self.row = {u.id: i for i, u in enumerate(self.users)}
        self.user_cell = {u.id: u.home_cell for u in self.users}
        unknown = set(self.user_cell.values()) - set(area.cell_ids)
        if unknown:
            raise InvalidArgumentError(f"Users attached to unknown cells {sorted(unknown)}")

        self.tdd = tdd
        self.grid = grid
        self.policy = policy
        self.radio = radio_for_grid(radio, grid)
        self.n_d, self.n_u, _ = subframe_counts(tdd)

        self.col = {c.id: j for j, c in enumerate(area.cells)}
        self.rx = cell_rx_mw_matrix(self.users, area.cells, self.radio.params)
        self.noise = ue_noise_mw_array(self.users, self.radio.params)
        self.unicast_cqi = self._unicast_cqi()
        self.mbsfn_cqi: Dict[int, int] = {}
        self.areas: Tuple[MbsfnArea, ...] = ()
        self.area_of_cell: Dict[int, int] = {}

    def _unicast_cqi(self) -> Dict[int, int]:
        if not self.users:
            return {}
        serving = np.array([self.col[u.home_cell] for u in self.users])
        mask = np.zeros_like(self.rx, dtype=bool)
        mask[np.arange(len(self.users)), serving] = True
        signal = np.where(mask, self.rx, 0.0).sum(axis=1)
        interference = np.where(mask, 0.0, self.rx).sum(axis=1)
        cqi = sinr_to_cqi_array(signal / (interference + self.noise), self.radio.table)
        return {u.id: int(c) for u, c in zip(self.users, cqi)}

    def set_areas(self, components: Sequence[FrozenSet[int]]):
        self.areas = tuple(MbsfnArea(id=i, member_cells=frozenset(c), mcs=None) for i, c in enumerate(components))
        self.area_of_cell = {cell: a.id for a in self.areas for cell in a.member_cells}
        self.mbsfn_cqi = {}
        for a in self.areas:
            members = [u.id for u in self.users if u.home_cell in a.member_cells]
            if not members:
                continue
            rows = np.array([self.row[u] for u in members])
            in_area = np.zeros(len(self.area.cells), dtype=bool)
            in_area[[self.col[c] for c in a.member_cells]] = True
            sub = self.rx[rows]
            signal = np.where(in_area[None, :], sub, 0.0).sum(axis=1)
            interference = np.where(in_area[None, :], 0.0, sub).sum(axis=1)
            cqi = sinr_to_cqi_array(signal / (interference + self.noise[rows]), self.radio.table)
            self.mbsfn_cqi.update({u: int(c) for u, c in zip(members, cqi)})

    def radio_rate(self, cqi: int) -> float:
        return rate_per_rb(cqi, self.radio.table)

    def area_id(self, user_id: int) -> Optional[int]:
        return self.area_of_cell.get(self.user_cell[user_id])

    def terminals(self, ids: Iterable[int]) -> List[UserTerminal]:
        return [self.by_id[i] for i in sorted(ids)]


@dataclass
class _State:
    mbsfn: Set[int]
    unicast: Set[int]
    d2d: Dict[int, int]
    d2d_link_cqi: Dict[int, int]


# ---------------------------------------------------------------------------
# D2D CSI matrix and relay selection
# ---------------------------------------------------------------------------

def compute_d2d_csi(candidate_relays: Sequence[UserTerminal], excluded: Sequence[UserTerminal],
                    radio: RadioModel = RadioModel()) -> D2dCsiMatrix:
    """
    CQI of the direct link from every candidate relay to every excluded user.

    Each entry considers the relay alone (no other transmitter), so 0 means
    no D2D connection can be established between that pair.
    """
    relays = sorted(candidate_relays, key=lambda u: u.id)
    receivers = sorted(excluded, key=lambda u: u.id)
    overlap = {u.id for u in relays} & {u.id for u in receivers}
    if overlap:
        raise InvalidArgumentError(f"Users cannot be both relay candidates and excluded: {sorted(overlap)}")

    cqi = np.zeros((len(relays), len(receivers)), dtype=np.int8)
    if relays and receivers:
        noise = ue_noise_mw_array(receivers, radio.params)
        for start in range(0, len(receivers), _CSI_BLOCK):
            block = receivers[start:start + _CSI_BLOCK]
            power = d2d_rx_mw_matrix(relays, block, radio.params)
            cqi[:, start:start + len(block)] = sinr_to_cqi_array(power / noise[None, start:start + len(block)],
                                                                 radio.table)
    return D2dCsiMatrix(
        relays=tuple(u.id for u in relays),
        receivers=tuple(u.id for u in receivers),
        cqi=cqi,
    )


def find_relays_and_d2d(matrix: D2dCsiMatrix) -> Tuple[FrozenSet[int], Dict[int, int]]:
    """
    Attach every reachable excluded user to the relay with its best CSI entry.

    Ties go to the lowest relay id; relays left without D2D users are dropped.

    Returns:
        (relays, {d2d user: relay})
    """
    assignment: Dict[int, int] = {}
    if matrix.cqi.size:
        best = np.argmax(matrix.cqi, axis=0)
        for col, receiver in enumerate(matrix.receivers):
            row = int(best[col])
            if matrix.cqi[row, col] > 0:
                assignment[receiver] = matrix.relays[row]
    return frozenset(assignment.values()), assignment


def _combined_d2d_cqi(ctx: _FormationContext, d2d: Dict[int, int]) -> Dict[int, int]:
    """Single-frequency D2D CQI of every D2D user: co-area relays add up, other areas' relays interfere."""
    relays_by_area: Dict[int, Set[int]] = {}
    users_by_area: Dict[int, List[int]] = {}
    for user, relay in d2d.items():
        area_id = ctx.area_id(user)
        relays_by_area.setdefault(area_id, set()).add(relay)
        users_by_area.setdefault(area_id, []).append(user)

    result: Dict[int, int] = {}
    params = ctx.radio.params
    for area_id, members in sorted(users_by_area.items()):
        receivers = ctx.terminals(members)
        own = ctx.terminals(relays_by_area[area_id])
        foreign = ctx.terminals(r for a, rs in relays_by_area.items() if a != area_id for r in rs)
        signal = d2d_rx_mw_matrix(own, receivers, params).sum(axis=0)
        interference = d2d_rx_mw_matrix(foreign, receivers, params).sum(axis=0) if foreign else 0.0
        noise = ue_noise_mw_array(receivers, params)
        cqi = sinr_to_cqi_array(signal / (interference + noise), ctx.radio.table)
        result.update({u.id: int(c) for u, c in zip(receivers, cqi)})
    return result


# ---------------------------------------------------------------------------
# Configuration assembly
# ---------------------------------------------------------------------------

def _assemble(ctx: _FormationContext, state: _State, strict: bool) -> FormationConfiguration:
    """Allocate RBs for a user split and evaluate its ADR."""
    user_cqi: Dict[int, int] = {}
    for u in state.mbsfn:
        user_cqi[u] = ctx.mbsfn_cqi.get(u, 0)
    for u in state.unicast:
        user_cqi[u] = ctx.unicast_cqi[u]
    user_cqi.update(_combined_d2d_cqi(ctx, state.d2d))

    if strict:
        unservable = sorted(u for u in state.unicast if user_cqi[u] < 1)
        if unservable:
            raise ConstraintViolationError(f"Unicast users {unservable[:5]} have CQI 0")

    n_rb = ctx.grid.n_rb
    areas: List[MbsfnArea] = []
    rb_unicast: Dict[int, int] = {}
    rb_d2d: Dict[int, int] = {}
    for a in ctx.areas:
        members = [u.id for u in ctx.users if u.home_cell in a.member_cells]
        mbsfn_members = [u for u in members if u in state.mbsfn]
        mcs = min((user_cqi[u] for u in mbsfn_members), default=None)
        load = AreaLoad(
            n_mbsfn_users=len(mbsfn_members),
            unicast_users=tuple(u for u in members if u in state.unicast),
            n_users=len(members),
        )
        rb_b, grants = allocate_downlink(load, n_rb, ctx.policy, strict=strict)
        rb_unicast.update(grants)
        areas.append(replace(a, mcs=mcs, rb_b=rb_b))

        d2d_members = [u for u in members if u in state.d2d]
        if d2d_members and mcs is not None:
            ingress = ctx.radio_rate(mcs) * rb_b * ctx.n_d
            rate_d = ctx.radio_rate(min(user_cqi[u] for u in d2d_members))
            rb_d2d[a.id] = allocate_uplink(ingress, rate_d, n_rb, ctx.n_u)[0]

    covered = set(ctx.area_of_cell)
    for cell in ctx.area.cells:
        if cell.id in covered:
            continue
        members = [u.id for u in ctx.users if u.home_cell == cell.id]
        if not members:
            continue
        load = AreaLoad(n_mbsfn_users=0, unicast_users=tuple(members), n_users=len(members))
        _, grants = allocate_downlink(load, n_rb, ctx.policy, strict=strict)
        rb_unicast.update(grants)

    cfg = FormationConfiguration(
        users=tuple(u.id for u in ctx.users),
        user_cell=dict(ctx.user_cell),
        areas=tuple(areas),
        mbsfn_users=frozenset(state.mbsfn),
        unicast_users=frozenset(state.unicast),
        d2d_users=dict(sorted(state.d2d.items())),
        relays=frozenset(state.d2d.values()),
        rb_unicast=dict(sorted(rb_unicast.items())),
        rb_d2d=rb_d2d,
        user_cqi=dict(sorted(user_cqi.items())),
        d2d_link_cqi=dict(sorted(state.d2d_link_cqi.items())),
    )
    breakdown = compute_adr(cfg, ctx.tdd, ctx.grid, ctx.radio, check=False)
    return replace(cfg, breakdown=breakdown)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def _basic_state(ctx: _FormationContext) -> _State:
    by_cell: Dict[int, List[int]] = {}
    for u in ctx.users:
        by_cell.setdefault(u.home_cell, []).append(u.id)

    unicast: Set[int] = set()
    potential: List[int] = []
    mbsfn: Set[int] = set()
    for cell_id in sorted(by_cell):
        members = by_cell[cell_id]
        if len(members) == 1:
            unicast.update(members)
        else:
            potential.append(cell_id)
            mbsfn.update(members)

    ctx.set_areas(adjacent_subsets(ctx.area, potential))

    # Multicast cannot reach users below the lowest CQI threshold.
    unreachable = {u for u in mbsfn if ctx.mbsfn_cqi.get(u, 0) < 1}
    if unreachable:
        logger.debug(f"{len(unreachable)} users cannot decode any MBSFN MCS, serving them by unicast")
    return _State(mbsfn=mbsfn - unreachable, unicast=unicast | unreachable, d2d={}, d2d_link_cqi={})


def build_basic_configuration(area: SynchronizationArea, users: Sequence[UserTerminal], tdd: TddConfiguration,
                              grid: CarrierGrid, radio: RadioModel = RadioModel(),
                              policy: AllocationPolicy = AllocationPolicy()) -> FormationConfiguration:
    """
    Build the starting configuration of the formation loop.

    Cells with a single interested user serve it by unicast; cells with two or
    more join the potential set, whose connected components become MBSFN Areas.
    """
    ctx = _FormationContext(area, users, tdd, grid, radio, policy)
    return _assemble(ctx, _basic_state(ctx), strict=False)


def order_user_mcs(cfg: FormationConfiguration) -> List[int]:
    """Distinct MBSFN CQI levels of the multicast users, ascending."""
    return sorted({cfg.user_cqi[u] for u in cfg.mbsfn_users})


def _peel(ctx: _FormationContext, state: _State, level: int, use_d2d: bool) -> _State:
    """Candidate state after removing every multicast user at the given CQI level."""
    peeled = {u for u in state.mbsfn if ctx.mbsfn_cqi[u] == level}
    mbsfn = state.mbsfn - peeled

    d2d = {d: r for d, r in state.d2d.items() if r not in peeled}
    link_cqi = {d: state.d2d_link_cqi[d] for d in d2d}
    orphans = set(state.d2d) - set(d2d)
    excluded = peeled | orphans

    if use_d2d and ctx.n_u > 0:
        for a in ctx.areas:
            area_excluded = [u for u in sorted(excluded) if ctx.user_cell[u] in a.member_cells]
            if not area_excluded:
                continue
            candidates = [u for u in sorted(mbsfn) if ctx.user_cell[u] in a.member_cells]
            matrix = compute_d2d_csi(ctx.terminals(candidates), ctx.terminals(area_excluded), ctx.radio)
            _, assignment = find_relays_and_d2d(matrix)
            best = dict(zip(matrix.receivers, matrix.cqi.max(axis=0).tolist())) if assignment else {}
            for receiver, relay in assignment.items():
                d2d[receiver] = relay
                link_cqi[receiver] = int(best[receiver])

    unicast = state.unicast | (excluded - set(d2d))

    # Foreign relays may push a single-frequency reception below CQI 1.
    while d2d:
        combined = _combined_d2d_cqi(ctx, d2d)
        lost = {u for u, c in combined.items() if c < 1}
        if not lost:
            break
        logger.debug(f"{len(lost)} D2D users lost to inter-area relay interference, serving them by unicast")
        for u in lost:
            d2d.pop(u)
            link_cqi.pop(u)
        unicast |= lost

    return _State(mbsfn=mbsfn, unicast=unicast, d2d=d2d, d2d_link_cqi=link_cqi)


def run_formation(area: SynchronizationArea, users: Sequence[UserTerminal], tdd: TddConfiguration,
                  grid: CarrierGrid, radio: RadioModel = RadioModel(),
                  policy: AllocationPolicy = AllocationPolicy(), algorithm: str = "d2d-maf") -> FormationResult:
    """
    Run the MCS peeling loop.

    Args:
        area: Synchronization area
        users: Interested users
        tdd: Frame configuration
        grid: Carrier grid
        radio: Link budget and CQI table
        policy: Downlink split policy (identical for both algorithms)
        algorithm: "d2d-maf" or "scf"

    Returns:
        FormationResult with the final configuration, the basic one, and the
        trace of evaluated levels
    """
    if algorithm not in ALGORITHMS:
        raise InvalidArgumentError(f"Unknown algorithm {algorithm}; expected one of {ALGORITHMS}")
    use_d2d = algorithm == "d2d-maf"

    ctx = _FormationContext(area, users, tdd, grid, radio, policy)
    state = _basic_state(ctx)
    current = _assemble(ctx, state, strict=False)
    basic = current
    accepted = [current]
    trace: List[FormationStep] = []

    for level in order_user_mcs(current):
        candidate_state = _peel(ctx, state, level, use_d2d)
        try:
            candidate = _assemble(ctx, candidate_state, strict=True)
        except ConstraintViolationError as e:
            logger.debug(f"[{algorithm}] level {level} infeasible: {e}")
            trace.append(FormationStep(level=level, candidate_adr=float("-inf"), accepted=False, reason=str(e)))
            break

        if candidate.adr >= current.adr:
            logger.debug(f"[{algorithm}] level {level} accepted: ADR {current.adr:.4g} -> {candidate.adr:.4g} bit/s")
            trace.append(FormationStep(level=level, candidate_adr=candidate.adr, accepted=True))
            state, current = candidate_state, candidate
            accepted.append(current)
        else:
            logger.debug(f"[{algorithm}] level {level} rejected: ADR {candidate.adr:.4g} < {current.adr:.4g} bit/s")
            trace.append(FormationStep(level=level, candidate_adr=candidate.adr, accepted=False,
                                       reason="lower aggregate data rate"))
            break

    return FormationResult(configuration=current, basic=basic, trace=tuple(trace), accepted_states=tuple(accepted))


def d2d_maf(area: SynchronizationArea, users: Sequence[UserTerminal], tdd: TddConfiguration, grid: CarrierGrid,
            radio: RadioModel = RadioModel(), policy: AllocationPolicy = AllocationPolicy()) -> FormationConfiguration:
    """D2D-aided MBSFN area formation."""
    return run_formation(area, users, tdd, grid, radio, policy, algorithm="d2d-maf").configuration


def scf(area: SynchronizationArea, users: Sequence[UserTerminal], tdd: TddConfiguration, grid: CarrierGrid,
        radio: RadioModel = RadioModel(), policy: AllocationPolicy = AllocationPolicy()) -> FormationConfiguration:
    """Unicast-only baseline: same peeling loop, peeled users always go to unicast."""
    return run_formation(area, users, tdd, grid, radio, policy, algorithm="scf").configuration
