"""
Tests for the link budget, SINR computation and CQI mapping.
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from network.radio import (
    CqiTable,
    LinkBudgetParams,
    SinrSample,
    cell_rx_mw_matrix,
    d2d_rx_mw_matrix,
    dbm_to_mw,
    mw_to_dbm,
    noise_dbm,
    pathloss_db,
    rate_per_rb,
    rx_power_dbm,
    sinr_d2d,
    sinr_mbsfn,
    sinr_to_cqi,
    sinr_to_cqi_array,
    sinr_unicast,
    ue_noise_mw_array,
)
from network.topology import UserTerminal, build_hex_grid, place_users
from utils.errors import InvalidArgumentError


def test_pathloss_anchors():
    assert pathloss_db(1.0) == pytest.approx(128.1)
    assert pathloss_db(0.1) == pytest.approx(90.5)
    # distances below the floor are clamped
    assert pathloss_db(0.0) == pytest.approx(pathloss_db(0.003))
    assert np.allclose(pathloss_db(np.array([1.0, 0.1])), [128.1, 90.5])


def test_unit_conversions():
    assert dbm_to_mw(0.0) == pytest.approx(1.0)
    assert mw_to_dbm(1000.0) == pytest.approx(30.0)
    assert np.allclose(dbm_to_mw(np.array([10.0, 20.0])), [10.0, 100.0])


def test_noise_over_one_rb():
    expected = -174.0 + 10.0 * math.log10(180e3) + 9.0
    assert noise_dbm(1) == pytest.approx(expected)
    assert noise_dbm(270) == pytest.approx(expected + 10.0 * math.log10(270))
    with pytest.raises(InvalidArgumentError):
        noise_dbm(0)


def test_rate_per_rb():
    assert rate_per_rb(15) == pytest.approx(933.19, abs=0.01)
    assert rate_per_rb(1) == pytest.approx(168 * 0.1523)
    for bad in (0, 16):
        with pytest.raises(InvalidArgumentError):
            rate_per_rb(bad)


def test_cqi_thresholds():
    assert sinr_to_cqi(-7.0) == 0
    assert sinr_to_cqi(-6.7) == 1
    assert sinr_to_cqi(10.3) == 9
    assert sinr_to_cqi(22.7) == 15
    assert sinr_to_cqi(60.0) == 15
    assert sinr_to_cqi(-math.inf) == 0


@given(st.lists(st.floats(min_value=1e-4, max_value=1e4), min_size=1, max_size=20))
def test_cqi_array_matches_scalar(values):
    ratios = np.array(values)
    expected = [sinr_to_cqi(float(10.0 * np.log10(v))) for v in values]
    assert sinr_to_cqi_array(ratios).tolist() == expected


def test_cqi_array_of_zero_sinr():
    assert sinr_to_cqi_array(np.array([0.0])).tolist() == [0]


def test_cqi_table_shape():
    with pytest.raises(InvalidArgumentError):
        CqiTable(efficiencies=(1.0,) * 14)
    with pytest.raises(InvalidArgumentError):
        CqiTable(sinr_thresholds=tuple(range(14)) + (13,))


def test_parameter_checks():
    with pytest.raises(InvalidArgumentError):
        LinkBudgetParams(bler_target=1.0)
    with pytest.raises(InvalidArgumentError):
        LinkBudgetParams(bandwidth_rb=0)
    with pytest.raises(InvalidArgumentError):
        SinrSample(signal=1.0, interference=0.0, noise=0.0)
    assert SinrSample(signal=10.0, interference=0.0, noise=1.0).db == pytest.approx(10.0)


def test_single_cell_unicast_equals_mbsfn():
    area = build_hex_grid(1)
    user = place_users(area, 1, 5)[0]
    assert sinr_unicast(user, area.cell(0), area.cells) == pytest.approx(sinr_mbsfn(user, {0}, area.cells))


def test_combining_more_cells_raises_mbsfn_sinr():
    area = build_hex_grid(7)
    user = place_users(area, 1, 11)[0]
    assert sinr_mbsfn(user, set(area.cell_ids), area.cells) > sinr_mbsfn(user, {0}, area.cells)
    with pytest.raises(InvalidArgumentError):
        sinr_mbsfn(user, set(), area.cells)


def test_matrix_helpers_match_scalar_links():
    area = build_hex_grid(7)
    users = place_users(area, 3, 21)
    params = LinkBudgetParams()
    rx = cell_rx_mw_matrix(users, area.cells, params)
    noise = ue_noise_mw_array(users, params)
    assert rx.shape == (21, 7)

    serving = [0, 1, 2]
    for i, user in enumerate(users):
        signal = rx[i, serving].sum()
        interference = rx[i].sum() - signal
        assert signal / (interference + noise[i]) == pytest.approx(sinr_mbsfn(user, serving, area.cells, params))

    d2d = d2d_rx_mw_matrix(users[:2], users[2:], params)
    assert d2d.shape == (2, 19)
    rx_user = users[5]
    expected = d2d[0, 3] / (d2d[1, 3] + noise[5])
    assert sinr_d2d(rx_user, [users[0]], [users[1]], params) == pytest.approx(expected)
    with pytest.raises(InvalidArgumentError):
        sinr_d2d(rx_user, [])


def test_empty_matrices():
    area = build_hex_grid(3)
    params = LinkBudgetParams()
    assert cell_rx_mw_matrix([], area.cells, params).shape == (0, 3)
    assert d2d_rx_mw_matrix([], place_users(area, 1, 1), params).shape == (0, 3)


def test_received_power():
    # 46 dBm cell with 15 dBi antenna at 100 m
    assert rx_power_dbm(46.0, 15.0, 0.0, pathloss_db(0.1)) == pytest.approx(-29.5)


def test_user_noise_figure_defaults_to_link_budget():
    quiet = LinkBudgetParams(ue_noise_figure=3.0)
    assert noise_dbm(1, quiet) == pytest.approx(noise_dbm(1) - 6.0)
    assert noise_dbm(1, quiet, receiver_nf=9.0) == pytest.approx(noise_dbm(1))

    plain = UserTerminal(id=0, home_cell=0, position=(0.0, 0.0))
    noisy = UserTerminal(id=1, home_cell=0, position=(0.0, 0.0), noise_figure=13.0)
    noise = ue_noise_mw_array([plain, noisy], quiet)
    assert noise[0] == pytest.approx(dbm_to_mw(noise_dbm(270, quiet, 3.0)))
    assert noise[1] == pytest.approx(dbm_to_mw(noise_dbm(270, quiet, 13.0)))


def test_link_budget_noise_figure_moves_sinr():
    area = build_hex_grid(7)
    user = place_users(area, 1, 3)[0]
    assert user.noise_figure is None
    quiet = sinr_mbsfn(user, {0}, area.cells, LinkBudgetParams(ue_noise_figure=0.0))
    noisy = sinr_mbsfn(user, {0}, area.cells, LinkBudgetParams(ue_noise_figure=20.0))
    assert quiet > noisy
