"""
Tests for downlink/uplink RB allocation and ADR accounting.
"""

import pytest

from network.frame import FRAME_DURATION_S, carrier_grid, tdd_config
from network.radio import CqiTable, RadioModel, rate_per_rb
from services.allocation import AreaLoad, allocate_downlink, allocate_uplink, compute_adr
from services.models import AllocationPolicy, FormationConfiguration, MbsfnArea
from utils.errors import ConstraintViolationError, InvalidArgumentError


def test_proportional_split_with_round_robin_remainder():
    load = AreaLoad(n_mbsfn_users=90, unicast_users=tuple(range(100, 110)), n_users=100)
    rb_b, grants = allocate_downlink(load, 270)
    assert rb_b == 243
    assert sum(grants.values()) == 27
    assert [grants[u] for u in range(100, 110)] == [3] * 7 + [2] * 3


def test_no_unicast_users_take_whole_pool():
    rb_b, grants = allocate_downlink(AreaLoad(5, (), 5), 270)
    assert rb_b == 270
    assert grants == {}


def test_no_mbsfn_users_leave_pool_to_unicast():
    rb_b, grants = allocate_downlink(AreaLoad(0, (7, 3, 5), 3), 10)
    assert rb_b == 0
    assert grants == {3: 4, 5: 3, 7: 3}


def test_fixed_fraction_rule():
    policy = AllocationPolicy(mbsfn_share_rule="fixed", fraction=0.5)
    rb_b, grants = allocate_downlink(AreaLoad(3, (1, 2), 5), 25, policy)
    assert rb_b == 13
    assert grants == {1: 6, 2: 6}


def test_round_robin_granularity():
    policy = AllocationPolicy(rr_granularity=2)
    rb_b, grants = allocate_downlink(AreaLoad(0, (0, 1, 2), 3), 10, policy)
    assert grants == {0: 4, 1: 4, 2: 2}


def test_pool_too_small_for_unicast_users():
    load = AreaLoad(n_mbsfn_users=5, unicast_users=tuple(range(30)), n_users=35)
    with pytest.raises(ConstraintViolationError):
        allocate_downlink(load, 25)

    rb_b, grants = allocate_downlink(load, 25, strict=False)
    assert rb_b == 4
    assert grants == {u: 1 for u in range(21)}


def test_invalid_pool_and_policy():
    with pytest.raises(InvalidArgumentError):
        allocate_downlink(AreaLoad(1, (), 1), 0)
    with pytest.raises(InvalidArgumentError):
        AllocationPolicy(mbsfn_share_rule="fixed", fraction=0.0)
    with pytest.raises(InvalidArgumentError):
        AllocationPolicy(mbsfn_share_rule="greedy")


def test_uplink_grant_conserves_flow():
    assert allocate_uplink(1000.0, 100.0, 270, 0) == (0, 0.0)
    assert allocate_uplink(1000.0, 100.0, 270, 2) == (5, 1000.0)
    # ingress above the pool capacity is capped at the whole pool
    assert allocate_uplink(1e9, 100.0, 270, 2) == (270, 54000.0)


def test_mbsfn_adr_follows_frame_accounting():
    # CQI 1 carries 100 bits per RB and subframe in this table
    efficiencies = tuple(100.0 / 168.0 + i for i in range(15))
    radio = RadioModel(table=CqiTable(efficiencies=efficiencies))
    users = tuple(range(5))
    cfg = FormationConfiguration(
        users=users,
        user_cell={u: 0 for u in users},
        areas=(MbsfnArea(id=0, member_cells=frozenset({0}), mcs=1, rb_b=10),),
        mbsfn_users=frozenset(users),
        user_cqi={u: 1 for u in users},
    )
    breakdown = compute_adr(cfg, tdd_config(5), carrier_grid(5), radio)
    assert breakdown.adr_b == pytest.approx(4.0e6)
    assert breakdown.adr_u == 0.0
    assert breakdown.adr_d2d == 0.0
    assert breakdown.total == pytest.approx(4.0e6)


def _two_area_configuration():
    return FormationConfiguration(
        users=(0, 1, 2, 3, 4),
        user_cell={0: 0, 1: 0, 2: 0, 3: 1, 4: 1},
        areas=(
            MbsfnArea(id=0, member_cells=frozenset({0}), mcs=15, rb_b=200),
            MbsfnArea(id=1, member_cells=frozenset({1}), mcs=7, rb_b=270),
        ),
        mbsfn_users=frozenset({0, 1, 3, 4}),
        unicast_users=frozenset({2}),
        rb_unicast={2: 70},
        user_cqi={0: 15, 1: 15, 2: 10, 3: 7, 4: 7},
    )


def test_two_areas_sum_to_total():
    cfg = _two_area_configuration()
    breakdown = compute_adr(cfg, tdd_config(2), carrier_grid(50))
    n_d = 6
    expected = (2 * rate_per_rb(15) * 200 + rate_per_rb(10) * 70 + 2 * rate_per_rb(7) * 270) * n_d / FRAME_DURATION_S
    assert breakdown.total == pytest.approx(expected, rel=1e-12)
    assert sum(sum(parts) for parts in breakdown.per_area.values()) == pytest.approx(breakdown.total, rel=1e-12)
    assert sum(breakdown.per_cell.values()) == pytest.approx(breakdown.total, rel=1e-12)
    assert breakdown.per_area[0][1] == pytest.approx(rate_per_rb(10) * 70 * n_d / FRAME_DURATION_S)


def test_d2d_adr_limited_by_uplink_pool():
    cfg = FormationConfiguration(
        users=(0, 1, 2),
        user_cell={0: 0, 1: 0, 2: 0},
        areas=(MbsfnArea(id=0, member_cells=frozenset({0}), mcs=15, rb_b=270),),
        mbsfn_users=frozenset({0, 1}),
        d2d_users={2: 1},
        relays=frozenset({1}),
        rb_d2d={0: 270},
        user_cqi={0: 15, 1: 15, 2: 12},
        d2d_link_cqi={2: 12},
    )
    breakdown = compute_adr(cfg, tdd_config(5), carrier_grid(50))
    assert breakdown.adr_d2d == pytest.approx(rate_per_rb(12) * 270 / FRAME_DURATION_S)
    assert breakdown.d2d_bits_per_frame[0] == pytest.approx(rate_per_rb(12) * 270)
    assert breakdown.adr_b == pytest.approx(2 * rate_per_rb(15) * 270 * 8 / FRAME_DURATION_S)


def test_invalid_configuration_is_rejected():
    cfg = FormationConfiguration(users=(0,), user_cell={0: 0}, unicast_users=frozenset({0}), user_cqi={0: 9})
    with pytest.raises(InvalidArgumentError):
        compute_adr(cfg, tdd_config(0), carrier_grid(5))
