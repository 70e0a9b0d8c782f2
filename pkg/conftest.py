"""
Shared fixtures: small hand-placed deployments with known link qualities.
"""

import pytest

from network.frame import carrier_grid, tdd_config
from network.topology import UserTerminal, build_hex_grid


@pytest.fixture
def single_cell():
    return build_hex_grid(1)


@pytest.fixture
def grid_50():
    return carrier_grid(50)


@pytest.fixture
def tdd5():
    return tdd_config(5)


@pytest.fixture
def relay_instance(single_cell):
    """
    One cell, no interference. Users 0-2 decode MBSFN at CQI 15; user 3 sits
    at the cell edge behind a 50 dB noise figure (MBSFN CQI 5) but only 3 m
    from user 2, so it can be served over D2D at CQI 15.
    """
    users = [
        UserTerminal(id=0, home_cell=0, position=(0.0, 10.0)),
        UserTerminal(id=1, home_cell=0, position=(0.0, -10.0)),
        UserTerminal(id=2, home_cell=0, position=(240.0, 3.0)),
        UserTerminal(id=3, home_cell=0, position=(240.0, 0.0), noise_figure=50.0),
    ]
    return single_cell, users
