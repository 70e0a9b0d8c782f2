"""
Link budget, SINR and CQI/rate mapping.

Scalar functions implement one link at a time. The ``*_matrix`` / ``*_array``
helpers compute the same quantities for many users at once with numpy and are
what the formation engine uses on full-size deployments.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Collection, Iterable, Optional, Sequence, Tuple

import numpy as np

from network.topology import CellSite, UserTerminal
from utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_SUBFRAME = 14
N_CQI = 15

DEFAULT_SINR_THRESHOLDS_DB: Tuple[float, ...] = (
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
)
DEFAULT_EFFICIENCIES: Tuple[float, ...] = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)


@dataclass(frozen=True)
class LinkBudgetParams:
    carrier_freq: float = 2.0  # GHz
    rb_bandwidth: float = 180.0  # kHz
    thermal_noise_density: float = -174.0  # dBm/Hz
    # Every receiver is a UE: downlink and D2D on uplink RBs both terminate at a terminal
    ue_noise_figure: float = 9.0  # dB
    bler_target: float = 0.01
    # Bandwidth (in RBs) the transmit power is spread over when computing SINR
    bandwidth_rb: int = 270
    d_min_km: float = 0.003

    def __post_init__(self):
        values = (self.carrier_freq, self.rb_bandwidth, self.thermal_noise_density,
                  self.ue_noise_figure, self.d_min_km)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgumentError("Link budget parameters must be finite")
        if not 0 < self.bler_target < 1:
            raise InvalidArgumentError(f"bler_target must be in (0, 1), got {self.bler_target}")
        if self.bandwidth_rb < 1:
            raise InvalidArgumentError(f"bandwidth_rb must be >= 1, got {self.bandwidth_rb}")
        if not self.d_min_km > 0:
            raise InvalidArgumentError("d_min_km must be positive")


@dataclass(frozen=True)
class CqiTable:
    sinr_thresholds: Tuple[float, ...] = DEFAULT_SINR_THRESHOLDS_DB
    efficiencies: Tuple[float, ...] = DEFAULT_EFFICIENCIES

    def __post_init__(self):
        object.__setattr__(self, 'sinr_thresholds', tuple(float(v) for v in self.sinr_thresholds))
        object.__setattr__(self, 'efficiencies', tuple(float(v) for v in self.efficiencies))
        for name in ('sinr_thresholds', 'efficiencies'):
            values = getattr(self, name)
            if len(values) != N_CQI:
                raise InvalidArgumentError(f"{name} needs exactly {N_CQI} values, got {len(values)}")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise InvalidArgumentError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class SinrSample:
    signal: float  # mW
    interference: float  # mW
    noise: float  # mW

    def __post_init__(self):
        if self.signal < 0 or self.interference < 0:
            raise InvalidArgumentError("signal and interference must be >= 0")
        if not self.noise > 0:
            raise InvalidArgumentError("noise must be positive")

    @property
    def ratio(self) -> float:
        return self.signal / (self.interference + self.noise)

    @property
    def db(self) -> float:
        return linear_to_db(self.ratio)


@dataclass(frozen=True)
class RadioModel:
    """Everything needed to turn geometry into CQIs and rates."""

    params: LinkBudgetParams = field(default_factory=LinkBudgetParams)
    table: CqiTable = field(default_factory=CqiTable)


# ---------------------------------------------------------------------------
# Unit conversions
# ---------------------------------------------------------------------------

def dbm_to_mw(dbm):
    if np.isscalar(dbm):
        return 10.0 ** (dbm / 10.0)
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    if np.isscalar(mw):
        return 10.0 * math.log10(mw)
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


def linear_to_db(ratio: float) -> float:
    return -math.inf if ratio <= 0 else 10.0 * math.log10(ratio)


# ---------------------------------------------------------------------------
# Link budget
# ---------------------------------------------------------------------------

def pathloss_db(distance_km, d_min_km: float = 0.003):
    """128.1 + 37.6 log10(R), R in km, clamped below at d_min_km."""
    if np.isscalar(distance_km):
        return 128.1 + 37.6 * math.log10(max(float(distance_km), d_min_km))
    return 128.1 + 37.6 * np.log10(np.maximum(np.asarray(distance_km, dtype=float), d_min_km))


def rx_power_dbm(tx_dbm, tx_gain, rx_gain, pl):
    return tx_dbm + tx_gain + rx_gain - pl


def noise_dbm(n_rb: int, params: LinkBudgetParams = LinkBudgetParams(),
              receiver_nf: Optional[float] = None) -> float:
    """Thermal noise over n_rb resource blocks plus the receiver noise figure (default: params.ue_noise_figure)."""
    if receiver_nf is None:
        receiver_nf = params.ue_noise_figure
    if n_rb < 1:
        raise InvalidArgumentError(f"n_rb must be >= 1, got {n_rb}")
    bandwidth_hz = n_rb * params.rb_bandwidth * 1e3
    return params.thermal_noise_density + 10.0 * math.log10(bandwidth_hz) + receiver_nf


def _distance_km(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1]) / 1000.0


def _cell_rx_mw(ue: UserTerminal, cell: CellSite, params: LinkBudgetParams) -> float:
    pl = pathloss_db(_distance_km(ue.position, cell.center), params.d_min_km)
    return dbm_to_mw(rx_power_dbm(cell.tx_power, cell.antenna_gain, ue.antenna_gain, pl))


def _d2d_rx_mw(tx: UserTerminal, rx: UserTerminal, params: LinkBudgetParams) -> float:
    pl = pathloss_db(_distance_km(tx.position, rx.position), params.d_min_km)
    return dbm_to_mw(rx_power_dbm(tx.tx_power_d2d, tx.antenna_gain, rx.antenna_gain, pl))


def _ue_noise_mw(ue: UserTerminal, params: LinkBudgetParams) -> float:
    return dbm_to_mw(noise_dbm(params.bandwidth_rb, params, ue.noise_figure))


# ---------------------------------------------------------------------------
# SINR, one link at a time
# ---------------------------------------------------------------------------

def mbsfn_sample(ue: UserTerminal, serving_area_cells: Collection[int], all_cells: Sequence[CellSite],
                 params: LinkBudgetParams = LinkBudgetParams()) -> SinrSample:
    if not serving_area_cells:
        raise InvalidArgumentError("MBSFN serving set must not be empty")
    serving = set(serving_area_cells)
    signal = interference = 0.0
    for cell in all_cells:
        p = _cell_rx_mw(ue, cell, params)
        if cell.id in serving:
            signal += p
        else:
            interference += p
    return SinrSample(signal, interference, _ue_noise_mw(ue, params))


def sinr_mbsfn(ue: UserTerminal, serving_area_cells: Collection[int], all_cells: Sequence[CellSite],
               params: LinkBudgetParams = LinkBudgetParams()) -> float:
    """Linear SINR of a user combining every cell of its MBSFN Area."""
    return mbsfn_sample(ue, serving_area_cells, all_cells, params).ratio


def sinr_unicast(ue: UserTerminal, serving_cell: CellSite, all_cells: Sequence[CellSite],
                 params: LinkBudgetParams = LinkBudgetParams()) -> float:
    """Linear SINR of a point-to-point link from one cell, every other cell interfering."""
    signal = interference = 0.0
    for cell in all_cells:
        p = _cell_rx_mw(ue, cell, params)
        if cell.id == serving_cell.id:
            signal += p
        else:
            interference += p
    return SinrSample(signal, interference, _ue_noise_mw(ue, params)).ratio


def sinr_d2d(ue: UserTerminal, relays_same_area: Collection[UserTerminal],
             relays_other_areas: Collection[UserTerminal] = (),
             params: LinkBudgetParams = LinkBudgetParams()) -> float:
    """Linear SINR of a single-frequency D2D reception on shared uplink RBs."""
    if not relays_same_area:
        raise InvalidArgumentError("D2D reception needs at least one co-area relay")
    signal = sum(_d2d_rx_mw(r, ue, params) for r in relays_same_area)
    interference = sum(_d2d_rx_mw(r, ue, params) for r in relays_other_areas)
    return SinrSample(signal, interference, _ue_noise_mw(ue, params)).ratio


# ---------------------------------------------------------------------------
# CQI and rate
# ---------------------------------------------------------------------------

def sinr_to_cqi(sinr_db: float, table: CqiTable = CqiTable()) -> int:
    """Largest CQI whose threshold is <= sinr_db, 0 below the first threshold."""
    return int(np.searchsorted(np.asarray(table.sinr_thresholds), sinr_db, side='right'))


def sinr_to_cqi_array(sinr_linear: np.ndarray, table: CqiTable = CqiTable()) -> np.ndarray:
    with np.errstate(divide='ignore'):
        sinr_db = 10.0 * np.log10(np.asarray(sinr_linear, dtype=float))
    return np.searchsorted(np.asarray(table.sinr_thresholds), sinr_db, side='right').astype(int)


def rate_per_rb(cqi: int, table: CqiTable = CqiTable()) -> float:
    """Bits carried by one RB in one 1 ms subframe at the given CQI."""
    if not 1 <= int(cqi) <= N_CQI:
        raise InvalidArgumentError(f"CQI must be in 1..{N_CQI}, got {cqi}")
    return SUBCARRIERS_PER_RB * SYMBOLS_PER_SUBFRAME * table.efficiencies[int(cqi) - 1]


# ---------------------------------------------------------------------------
# Vectorized helpers
# ---------------------------------------------------------------------------

def positions(users: Iterable[UserTerminal]) -> np.ndarray:
    pts = [u.position for u in users]
    return np.array(pts, dtype=float).reshape(len(pts), 2)


def distance_km_matrix(a_xy: np.ndarray, b_xy: np.ndarray) -> np.ndarray:
    diff = a_xy[:, None, :] - b_xy[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1]) / 1000.0


def cell_rx_mw_matrix(users: Sequence[UserTerminal], cells: Sequence[CellSite],
                      params: LinkBudgetParams) -> np.ndarray:
    """Received power (mW) of every cell at every user, shape (n_users, n_cells)."""
    if not users:
        return np.zeros((0, len(cells)))
    pl = pathloss_db(distance_km_matrix(positions(users), np.array([c.center for c in cells], dtype=float)),
                     params.d_min_km)
    tx = np.array([c.tx_power + c.antenna_gain for c in cells], dtype=float)
    rx_gain = np.array([u.antenna_gain for u in users], dtype=float)
    return dbm_to_mw(tx[None, :] + rx_gain[:, None] - pl)


def d2d_rx_mw_matrix(transmitters: Sequence[UserTerminal], receivers: Sequence[UserTerminal],
                     params: LinkBudgetParams) -> np.ndarray:
    """Received D2D power (mW), shape (n_transmitters, n_receivers)."""
    if not transmitters or not receivers:
        return np.zeros((len(transmitters), len(receivers)))
    pl = pathloss_db(distance_km_matrix(positions(transmitters), positions(receivers)), params.d_min_km)
    tx = np.array([t.tx_power_d2d + t.antenna_gain for t in transmitters], dtype=float)
    rx_gain = np.array([r.antenna_gain for r in receivers], dtype=float)
    return dbm_to_mw(tx[:, None] + rx_gain[None, :] - pl)


def ue_noise_mw_array(users: Sequence[UserTerminal], params: LinkBudgetParams) -> np.ndarray:
    return np.array([_ue_noise_mw(u, params) for u in users], dtype=float)
