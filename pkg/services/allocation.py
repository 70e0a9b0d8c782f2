"""
Radio resource allocation and aggregate data rate accounting.

Downlink RBs of an MBSFN Area are shared in-band between the MBSFN
transmission and the area's unicast users (dealt round-robin). D2D relays
forward on the uplink pool, using only the RBs needed to carry what they
ingested on the downlink.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from network.frame import FRAME_DURATION_S, CarrierGrid, TddConfiguration, subframe_counts
from network.radio import CqiTable, RadioModel, rate_per_rb
from services.models import AdrBreakdown, AllocationPolicy, FormationConfiguration
from services.validation import validate
from utils.errors import ConstraintViolationError, InvalidArgumentError

logger = logging.getLogger(__name__)

_EPS = 1e-9


@dataclass(frozen=True)
class AreaLoad:
    """Users sharing one downlink pool."""

    n_mbsfn_users: int
    unicast_users: Tuple[int, ...]
    n_users: int


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def allocate_downlink(load: AreaLoad, n_rb_dl: int, policy: AllocationPolicy = AllocationPolicy(),
                      strict: bool = True) -> Tuple[int, Dict[int, int]]:
    """
    Split a downlink pool between the MBSFN transmission and unicast users.

    Args:
        load: MBSFN user count, unicast user ids and total user count of the pool
        n_rb_dl: RBs in the pool
        policy: MBSFN share rule and round-robin granularity
        strict: Raise when some unicast user would get no RB

    Returns:
        (rb_b, {unicast user: RBs})

    Raises:
        ConstraintViolationError: If strict and the pool cannot give every unicast user one RB
    """
    if n_rb_dl < 1:
        raise InvalidArgumentError(f"n_rb_dl must be >= 1, got {n_rb_dl}")
    unicast = sorted(load.unicast_users)

    if load.n_mbsfn_users == 0:
        rb_b = 0
    elif not unicast:
        rb_b = n_rb_dl
    elif policy.mbsfn_share_rule == "fixed":
        rb_b = max(1, _round_half_up(n_rb_dl * policy.fraction))
    else:
        rb_b = max(1, _round_half_up(n_rb_dl * load.n_mbsfn_users / max(load.n_users, 1)))
    rb_b = min(rb_b, n_rb_dl)

    remaining = n_rb_dl - rb_b
    if remaining < len(unicast):
        message = f"{remaining} RBs left for {len(unicast)} unicast users"
        if strict:
            raise ConstraintViolationError(message)
        logger.warning(f"Downlink pool too small: {message}")

    grants: Dict[int, int] = {u: 0 for u in unicast}
    while remaining > 0 and unicast:
        for user in unicast:
            if remaining <= 0:
                break
            share = min(policy.rr_granularity, remaining)
            grants[user] += share
            remaining -= share
    return rb_b, {u: n for u, n in grants.items() if n > 0}


def allocate_uplink(ingress_bits_per_frame: float, d2d_rate: float, n_rb_ul: int,
                    n_u: int) -> Tuple[int, float]:
    """
    Size the D2D uplink grant of one area.

    Relays cannot forward more than they received in the same frame, so the
    grant is the smallest per-subframe RB count carrying the DL ingress over
    the frame's U subframes, capped at the whole UL pool.

    Returns:
        (RBs per U subframe, bits forwarded per frame)
    """
    if n_u == 0 or d2d_rate <= 0 or ingress_bits_per_frame <= 0:
        return 0, 0.0
    capacity = d2d_rate * n_rb_ul * n_u
    forwarded = min(ingress_bits_per_frame, capacity)
    rb = min(n_rb_ul, math.ceil(forwarded / (d2d_rate * n_u) - _EPS))
    return max(rb, 1), forwarded


def d2d_users_by_area(cfg: FormationConfiguration) -> Dict[int, List[int]]:
    area_of_cell = cfg.area_of_cell()
    grouped: Dict[int, List[int]] = {}
    for user in sorted(cfg.d2d_users):
        area_id = area_of_cell.get(cfg.user_cell[user])
        if area_id is not None:
            grouped.setdefault(area_id, []).append(user)
    return grouped


def d2d_rate_of_area(cfg: FormationConfiguration, d2d_users: Sequence[int], table: CqiTable) -> Optional[float]:
    """Per-RB rate of the lowest D2D CQI among an area's D2D users."""
    cqis = [cfg.user_cqi[d] for d in d2d_users]
    if not cqis:
        return None
    return rate_per_rb(min(cqis), table)


def compute_adr(cfg: FormationConfiguration, tdd: TddConfiguration, grid: CarrierGrid,
                radio: RadioModel = RadioModel(), check: bool = True) -> AdrBreakdown:
    """
    Aggregate data rate of a configuration over one frame, in bit/s.

    Args:
        cfg: Configuration with RB grants filled in
        tdd: Frame configuration (D subframes carry MBSFN and unicast, U subframes D2D)
        grid: Carrier grid
        radio: CQI table source
        check: Validate the configuration first

    Returns:
        AdrBreakdown whose components sum to the total

    Raises:
        InvalidArgumentError: If check is set and the configuration breaks a constraint
    """
    if check:
        violations = validate(cfg, None, grid)
        if violations:
            raise InvalidArgumentError(f"Cannot compute ADR of an invalid configuration: {violations[0]}")

    table = radio.table
    n_d, n_u, _ = subframe_counts(tdd)
    area_of_cell = cfg.area_of_cell()
    areas = {a.id: a for a in cfg.areas}

    per_area: Dict[int, List[float]] = {a.id: [0.0, 0.0, 0.0] for a in cfg.areas}
    per_cell: Dict[int, float] = {}
    d2d_bits: Dict[int, float] = {}

    def add_cell(user: int, bps: float):
        cell = cfg.user_cell[user]
        per_cell[cell] = per_cell.get(cell, 0.0) + bps

    adr_b = adr_u = adr_d2d = 0.0
    for user in sorted(cfg.mbsfn_users):
        area = areas[area_of_cell[cfg.user_cell[user]]]
        bps = rate_per_rb(area.mcs, table) * area.rb_b * n_d / FRAME_DURATION_S
        per_area[area.id][0] += bps
        adr_b += bps
        add_cell(user, bps)

    for user in sorted(cfg.unicast_users):
        cqi = cfg.user_cqi.get(user, 0)
        # Out of coverage users carry no traffic; validate() reports them.
        bps = 0.0 if cqi < 1 else rate_per_rb(cqi, table) * cfg.rb_unicast.get(user, 0) * n_d / FRAME_DURATION_S
        area_id = area_of_cell.get(cfg.user_cell[user])
        if area_id is not None:
            per_area[area_id][1] += bps
        adr_u += bps
        add_cell(user, bps)

    d2d_grouped = d2d_users_by_area(cfg)
    for area in cfg.areas:
        members = d2d_grouped.get(area.id, [])
        rate_d = d2d_rate_of_area(cfg, members, table)
        if rate_d is None or area.mcs is None:
            continue
        ingress = rate_per_rb(area.mcs, table) * area.rb_b * n_d
        _, forwarded = allocate_uplink(ingress, rate_d, grid.n_rb, n_u)
        d2d_bits[area.id] = forwarded
        for user in members:
            bps = forwarded / FRAME_DURATION_S
            per_area[area.id][2] += bps
            adr_d2d += bps
            add_cell(user, bps)

    return AdrBreakdown(
        adr_b=adr_b,
        adr_u=adr_u,
        adr_d2d=adr_d2d,
        per_area={k: tuple(v) for k, v in per_area.items()},
        per_cell=per_cell,
        d2d_bits_per_frame=d2d_bits,
    )
