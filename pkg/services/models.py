"""
Domain types of the MBSFN area formation engine.

A FormationConfiguration is the full answer of one formation run: the MBSFN
Areas, how every user is served (multicast, unicast or D2D), the radio
resources granted and the aggregate data rate they produce.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from utils.errors import InvalidArgumentError

MAX_AREAS_PER_CELL = 8
MAX_AREAS = 256


@dataclass(frozen=True)
class MbsfnArea:
    id: int
    member_cells: FrozenSet[int]
    mcs: Optional[int]  # lowest MBSFN CQI of the area's multicast users, None when it has none
    rb_b: int = 0


@dataclass(frozen=True)
class AllocationPolicy:
    """How the downlink pool of an area is split between MBSFN and unicast."""

    mbsfn_share_rule: str = "proportional"  # "proportional" | "fixed"
    fraction: float = 1.0
    rr_granularity: int = 1

    def __post_init__(self):
        if self.mbsfn_share_rule not in ("proportional", "fixed"):
            raise InvalidArgumentError(f"Unknown MBSFN share rule: {self.mbsfn_share_rule}")
        if self.mbsfn_share_rule == "fixed" and not 0 < self.fraction <= 1:
            raise InvalidArgumentError(f"Fixed MBSFN fraction must be in (0, 1], got {self.fraction}")
        if self.rr_granularity < 1:
            raise InvalidArgumentError(f"rr_granularity must be >= 1, got {self.rr_granularity}")


@dataclass(frozen=True)
class D2dCsiMatrix:
    """CQI of every candidate relay (rows) towards every excluded user (columns)."""

    relays: Tuple[int, ...]
    receivers: Tuple[int, ...]
    cqi: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        if self.cqi.shape != (len(self.relays), len(self.receivers)):
            raise InvalidArgumentError(
                f"CSI matrix shape {self.cqi.shape} does not match "
                f"{len(self.relays)} relays x {len(self.receivers)} receivers"
            )

    def entry(self, relay: int, receiver: int) -> int:
        return int(self.cqi[self.relays.index(relay), self.receivers.index(receiver)])


@dataclass(frozen=True)
class AdrBreakdown:
    """Aggregate data rate in bit/s split by transmission mode, area and cell."""

    adr_b: float = 0.0
    adr_u: float = 0.0
    adr_d2d: float = 0.0
    per_area: Dict[int, Tuple[float, float, float]] = field(default_factory=dict)
    per_cell: Dict[int, float] = field(default_factory=dict)
    d2d_bits_per_frame: Dict[int, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.adr_b + self.adr_u + self.adr_d2d


@dataclass(frozen=True)
class FormationConfiguration:
    users: Tuple[int, ...]
    user_cell: Dict[int, int]
    areas: Tuple[MbsfnArea, ...] = ()
    mbsfn_users: FrozenSet[int] = frozenset()
    unicast_users: FrozenSet[int] = frozenset()
    d2d_users: Dict[int, int] = field(default_factory=dict)  # d2d user -> relay
    relays: FrozenSet[int] = frozenset()
    rb_unicast: Dict[int, int] = field(default_factory=dict)
    rb_d2d: Dict[int, int] = field(default_factory=dict)  # area id -> UL RBs per U subframe
    # CQI of each user on the path it is served by
    user_cqi: Dict[int, int] = field(default_factory=dict)
    # D2D CSI entry between each D2D user and its relay
    d2d_link_cqi: Dict[int, int] = field(default_factory=dict)
    breakdown: AdrBreakdown = field(default_factory=AdrBreakdown)

    @property
    def adr(self) -> float:
        return self.breakdown.total

    def area_of_cell(self) -> Dict[int, int]:
        mapping: Dict[int, int] = {}
        for area in self.areas:
            for cell_id in area.member_cells:
                mapping[cell_id] = area.id
        return mapping

    def user_area(self, user_id: int) -> Optional[int]:
        return self.area_of_cell().get(self.user_cell[user_id])

    def users_in_area(self, area: MbsfnArea) -> List[int]:
        return sorted(u for u in self.users if self.user_cell[u] in area.member_cells)

    def standalone_cells(self) -> List[int]:
        """Cells hosting users but belonging to no MBSFN Area."""
        covered = self.area_of_cell()
        return sorted({c for c in self.user_cell.values() if c not in covered})

    def to_record(self) -> dict:
        """JSON-serializable dump of the configuration."""
        return {
            "areas": [
                {"id": a.id, "member_cells": sorted(a.member_cells), "mcs": a.mcs, "rb_b": a.rb_b}
                for a in self.areas
            ],
            "mbsfn_users": sorted(self.mbsfn_users),
            "unicast_users": sorted(self.unicast_users),
            "d2d_users": {str(d): r for d, r in sorted(self.d2d_users.items())},
            "relays": sorted(self.relays),
            "rb_unicast": {str(u): n for u, n in sorted(self.rb_unicast.items())},
            "rb_d2d": {str(m): n for m, n in sorted(self.rb_d2d.items())},
            "adr": {
                "total_bps": self.adr,
                "mbsfn_bps": self.breakdown.adr_b,
                "unicast_bps": self.breakdown.adr_u,
                "d2d_bps": self.breakdown.adr_d2d,
            },
        }


@dataclass(frozen=True)
class FormationStep:
    """One evaluated peeling level of a formation run."""

    level: int
    candidate_adr: float
    accepted: bool
    reason: str = ""


@dataclass(frozen=True)
class FormationResult:
    configuration: FormationConfiguration
    basic: FormationConfiguration
    trace: Tuple[FormationStep, ...] = ()
    accepted_states: Tuple[FormationConfiguration, ...] = ()
