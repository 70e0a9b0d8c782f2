"""
Constraint checks for formation configurations.

Violations are returned as data so callers decide whether they are fatal.
"""

import logging
from collections import Counter
from typing import List, Optional

import networkx as nx

from network.frame import CarrierGrid
from network.topology import SynchronizationArea
from services.models import MAX_AREAS, MAX_AREAS_PER_CELL, FormationConfiguration

logger = logging.getLogger(__name__)


def validate(cfg: FormationConfiguration, area: Optional[SynchronizationArea], grid: CarrierGrid) -> List[str]:
    """
    Check a configuration against the system constraints.

    Args:
        cfg: Configuration to check
        area: Synchronization area (adjacency checks are skipped when None)
        grid: Carrier grid giving the DL and UL RB pools

    Returns:
        Human readable violations, empty when every constraint holds
    """
    violations: List[str] = []
    violations += _check_partition(cfg)
    violations += _check_relays(cfg)
    violations += _check_downlink(cfg, grid)
    violations += _check_uplink(cfg, grid)
    violations += _check_areas(cfg, area)
    if violations:
        logger.debug(f"Configuration has {len(violations)} violation(s)")
    return violations


def _check_partition(cfg: FormationConfiguration) -> List[str]:
    violations = []
    b, u, d = set(cfg.mbsfn_users), set(cfg.unicast_users), set(cfg.d2d_users)
    for name_a, set_a, name_b, set_b in (("MBSFN", b, "unicast", u), ("MBSFN", b, "D2D", d),
                                         ("unicast", u, "D2D", d)):
        for user in sorted(set_a & set_b):
            violations.append(f"partition: user {user} is both {name_a} and {name_b}")
    served = b | u | d
    for user in sorted(set(cfg.users) - served):
        violations.append(f"partition: user {user} is not served")
    for user in sorted(served - set(cfg.users)):
        violations.append(f"partition: unknown user {user}")
    for user in sorted(served & set(cfg.users)):
        if cfg.user_cqi.get(user, 0) < 1:
            violations.append(f"service: user {user} has no usable CQI on its path")
    return violations


def _check_relays(cfg: FormationConfiguration) -> List[str]:
    violations = []
    for relay in sorted(set(cfg.relays) - set(cfg.mbsfn_users)):
        violations.append(f"relay: relay {relay} is not an MBSFN user")
    for d2d_user, relay in sorted(cfg.d2d_users.items()):
        if relay not in cfg.relays:
            violations.append(f"relay: D2D user {d2d_user} attached to non-relay {relay}")
        if cfg.d2d_link_cqi.get(d2d_user, 0) < 1:
            violations.append(f"relay: D2D user {d2d_user} has no D2D link to relay {relay}")
        if cfg.user_area(d2d_user) is None or cfg.user_area(d2d_user) != cfg.user_area(relay):
            violations.append(f"relay: D2D user {d2d_user} and relay {relay} are in different MBSFN Areas")
    return violations


def _check_downlink(cfg: FormationConfiguration, grid: CarrierGrid) -> List[str]:
    violations = []
    unicast = set(cfg.unicast_users)
    for user in sorted(unicast):
        if cfg.rb_unicast.get(user, 0) < 1:
            violations.append(f"downlink: unicast user {user} has no RB")
    for user in sorted(set(cfg.rb_unicast) - unicast):
        violations.append(f"downlink: RBs granted to non-unicast user {user}")

    for area in cfg.areas:
        members = cfg.users_in_area(area)
        used = area.rb_b + sum(cfg.rb_unicast.get(u, 0) for u in members if u in unicast)
        if used > grid.n_rb:
            violations.append(f"downlink: area {area.id} uses {used} RBs of {grid.n_rb}")
        if any(u in cfg.mbsfn_users for u in members) and area.rb_b < 1:
            violations.append(f"downlink: area {area.id} has MBSFN users but no MBSFN RB")
    for cell_id in cfg.standalone_cells():
        used = sum(cfg.rb_unicast.get(u, 0) for u in cfg.users
                   if cfg.user_cell[u] == cell_id and u in unicast)
        if used > grid.n_rb:
            violations.append(f"downlink: cell {cell_id} uses {used} RBs of {grid.n_rb}")
        for user in cfg.users:
            if cfg.user_cell[user] == cell_id and user in cfg.mbsfn_users:
                violations.append(f"downlink: MBSFN user {user} in cell {cell_id} outside every MBSFN Area")
    return violations


def _check_uplink(cfg: FormationConfiguration, grid: CarrierGrid) -> List[str]:
    violations = []
    for area_id, rb in sorted(cfg.rb_d2d.items()):
        if rb > grid.n_rb:
            violations.append(f"uplink: area {area_id} uses {rb} D2D RBs of {grid.n_rb}")
        if rb < 0:
            violations.append(f"uplink: area {area_id} has a negative D2D RB count")
    return violations


def _check_areas(cfg: FormationConfiguration, area: Optional[SynchronizationArea]) -> List[str]:
    violations = []
    if len(cfg.areas) > MAX_AREAS:
        violations.append(f"areas: {len(cfg.areas)} MBSFN Areas exceed the limit of {MAX_AREAS}")
    membership = Counter(c for a in cfg.areas for c in a.member_cells)
    for cell_id, count in sorted(membership.items()):
        if count > MAX_AREAS_PER_CELL:
            violations.append(f"areas: cell {cell_id} belongs to {count} MBSFN Areas (max {MAX_AREAS_PER_CELL})")

    graph = area.graph() if area is not None else None
    for a in cfg.areas:
        if not a.member_cells:
            violations.append(f"areas: MBSFN Area {a.id} has no cells")
            continue
        if graph is None:
            continue
        unknown = set(a.member_cells) - set(graph.nodes)
        if unknown:
            violations.append(f"areas: MBSFN Area {a.id} has unknown cells {sorted(unknown)}")
        elif not nx.is_connected(graph.subgraph(a.member_cells)):
            violations.append(f"areas: MBSFN Area {a.id} cells are not adjacent")
    return violations
