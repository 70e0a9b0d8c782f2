"""
TDD frame configurations and the numerology 0 carrier grid.
"""

import numbers
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

from utils.errors import InvalidArgumentError

FRAME_SUBFRAMES = 10
FRAME_DURATION_S = 0.010


class SubframeKind(Enum):
    DOWNLINK = 'D'
    UPLINK = 'U'
    SPECIAL = 'S'


_TDD_PATTERNS: Dict[int, str] = {
    0: "DSUUUDSUUU",
    1: "DSUUDDSUUD",
    2: "DSUDDDSUDD",
    3: "DSUUUDDDDD",
    4: "DSUUDDDDDD",
    5: "DSUDDDDDDD",
    6: "DSUUUDSUUD",
}

# Maximum transmission bandwidth configuration at 15 kHz SCS (FR1).
_RB_TABLE_MU0: Dict[int, int] = {
    5: 25, 10: 52, 15: 79, 20: 106, 25: 133, 30: 160, 40: 216, 50: 270,
}

SUPPORTED_BANDWIDTHS_MHZ: Tuple[int, ...] = tuple(sorted(_RB_TABLE_MU0))


@dataclass(frozen=True)
class TddConfiguration:
    index: int
    pattern: Tuple[SubframeKind, ...]

    def __post_init__(self):
        if len(self.pattern) != FRAME_SUBFRAMES:
            raise InvalidArgumentError(f"A TDD pattern has {FRAME_SUBFRAMES} subframes, got {len(self.pattern)}")

    @property
    def letters(self) -> str:
        return ''.join(k.value for k in self.pattern)

    def positions(self, kind: SubframeKind) -> Tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.pattern) if k is kind)


@dataclass(frozen=True)
class CarrierGrid:
    bandwidth: int  # MHz
    n_rb: int
    numerology: int = 0
    scs: float = 15.0  # kHz
    tti: float = 1.0  # ms

    def __post_init__(self):
        if self.numerology != 0:
            raise InvalidArgumentError(f"Only numerology 0 is supported, got {self.numerology}")
        if self.n_rb != rb_count(self.bandwidth):
            raise InvalidArgumentError(f"{self.bandwidth} MHz carries {rb_count(self.bandwidth)} RBs, not {self.n_rb}")


def tdd_config(index: int) -> TddConfiguration:
    """Return one of the seven fixed TDD frame configurations."""
    if index not in _TDD_PATTERNS:
        raise InvalidArgumentError(f"TDD configuration index must be in 0..6, got {index}")
    pattern = tuple(SubframeKind(letter) for letter in _TDD_PATTERNS[index])
    return TddConfiguration(index=index, pattern=pattern)


def rb_count(bandwidth_mhz: int) -> int:
    """Number of RBs of a numerology 0 carrier."""
    n_rb = _RB_TABLE_MU0.get(bandwidth_mhz) if isinstance(bandwidth_mhz, numbers.Real) else None
    if n_rb is None:
        raise InvalidArgumentError(
            f"Unsupported bandwidth {bandwidth_mhz} MHz; supported: {list(SUPPORTED_BANDWIDTHS_MHZ)}"
        )
    return n_rb


def carrier_grid(bandwidth_mhz: int) -> CarrierGrid:
    return CarrierGrid(bandwidth=int(bandwidth_mhz), n_rb=rb_count(bandwidth_mhz))


def subframe_counts(cfg: TddConfiguration) -> Tuple[int, int, int]:
    """(downlink, uplink, special) subframe counts of a frame."""
    n_d = sum(1 for k in cfg.pattern if k is SubframeKind.DOWNLINK)
    n_u = sum(1 for k in cfg.pattern if k is SubframeKind.UPLINK)
    n_s = sum(1 for k in cfg.pattern if k is SubframeKind.SPECIAL)
    return n_d, n_u, n_s
