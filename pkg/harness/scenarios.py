"""
Scenario definitions for the Monte-Carlo harness.

Three scenarios sweep one deployment parameter while keeping the others at
their reference values:

    1. users per cell (200..400, step 50)
    2. number of cells (10..36, step 2)
    3. carrier bandwidth (the eight supported numerology 0 bandwidths)
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from network.frame import SUPPORTED_BANDWIDTHS_MHZ, rb_count
from network.radio import CqiTable, RadioModel
from services.formation import ALGORITHMS
from services.models import AllocationPolicy
from utils.errors import InvalidArgumentError
from utils.range_parser import parse_int_list, parse_int_range, parse_name_list

logger = logging.getLogger(__name__)

REFERENCE_USERS_PER_CELL = 300
REFERENCE_CELLS = 10
REFERENCE_BANDWIDTH_MHZ = 50

# scenario -> (swept parameter, short label used in file names, default sweep)
SCENARIOS: Dict[int, Tuple[str, str, Tuple[int, ...]]] = {
    1: ("users_per_cell", "users", tuple(range(200, 401, 50))),
    2: ("n_cells", "cells", tuple(range(10, 37, 2))),
    3: ("bandwidth_mhz", "bw", SUPPORTED_BANDWIDTHS_MHZ),
}

ALL_TDD = tuple(range(7))


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: int
    sweep_values: Tuple[int, ...] = ()
    tdd: Tuple[int, ...] = ALL_TDD
    algorithms: Tuple[str, ...] = ALGORITHMS
    replications: int = 20
    base_seed: int = 1
    users_per_cell: int = REFERENCE_USERS_PER_CELL
    n_cells: int = REFERENCE_CELLS
    bandwidth_mhz: int = REFERENCE_BANDWIDTH_MHZ
    content_bytes: int = 20_000_000
    isd_m: float = 500.0
    # Keep one JSON record per returned configuration
    dump_configurations: bool = False
    policy: AllocationPolicy = field(default_factory=AllocationPolicy)
    radio: RadioModel = field(default_factory=RadioModel)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidArgumentError(f"Scenario must be one of {sorted(SCENARIOS)}, got {self.scenario}")
        if not self.sweep_values:
            object.__setattr__(self, 'sweep_values', SCENARIOS[self.scenario][2])
        object.__setattr__(self, 'sweep_values', tuple(self.sweep_values))
        object.__setattr__(self, 'tdd', tuple(self.tdd))
        object.__setattr__(self, 'algorithms', tuple(self.algorithms))

        if self.replications < 1:
            raise InvalidArgumentError(f"replications must be >= 1, got {self.replications}")
        if not self.tdd or any(t not in ALL_TDD for t in self.tdd):
            raise InvalidArgumentError(f"TDD indices must be a nonempty subset of 0..6, got {self.tdd}")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise InvalidArgumentError(f"Algorithms must be a nonempty subset of {ALGORITHMS}, got {self.algorithms}")
        if self.content_bytes < 1:
            raise InvalidArgumentError(f"content_bytes must be >= 1, got {self.content_bytes}")
        for value in self.sweep_values:
            self.point(value)

    @property
    def sweep_name(self) -> str:
        return SCENARIOS[self.scenario][0]

    @property
    def sweep_label(self) -> str:
        return SCENARIOS[self.scenario][1]

    @property
    def n_points(self) -> int:
        return len(self.sweep_values) * len(self.tdd) * len(self.algorithms)

    def point(self, sweep_value: int) -> Tuple[int, int, int]:
        """
        Deployment of one grid point.

        Returns:
            (users per cell, number of cells, bandwidth in MHz)
        """
        params = {
            "users_per_cell": self.users_per_cell,
            "n_cells": self.n_cells,
            "bandwidth_mhz": self.bandwidth_mhz,
        }
        params[self.sweep_name] = int(sweep_value)
        if params["users_per_cell"] < 1:
            raise InvalidArgumentError(f"users per cell must be >= 1, got {params['users_per_cell']}")
        if not 1 <= params["n_cells"] <= 256:
            raise InvalidArgumentError(f"number of cells must be in 1..256, got {params['n_cells']}")
        rb_count(params["bandwidth_mhz"])
        return params["users_per_cell"], params["n_cells"], params["bandwidth_mhz"]


def _parse_allocation(raw: Dict[str, Any]) -> AllocationPolicy:
    unknown = set(raw) - {"rule", "fraction", "rr_granularity"}
    if unknown:
        raise InvalidArgumentError(f"Unknown allocation keys: {sorted(unknown)}")
    return AllocationPolicy(
        mbsfn_share_rule=raw.get("rule", "proportional"),
        fraction=float(raw.get("fraction", 1.0)),
        rr_granularity=int(raw.get("rr_granularity", 1)),
    )


_FILE_KEYS = {
    "scenario", "sweep", "tdd", "algorithms", "replications", "base_seed", "users_per_cell", "n_cells",
    "bandwidth_mhz", "content_bytes", "isd_m", "allocation", "cqi_sinr_thresholds", "cqi_efficiencies",
    "dump_configurations",
}


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a JSON scenario file into ScenarioSpec keyword arguments.

    Args:
        path: JSON file with keys mirroring ScenarioSpec plus CQI table overrides

    Returns:
        Keyword arguments; keys missing from the file are absent

    Raises:
        InvalidArgumentError: If the file cannot be read or holds unknown or malformed keys
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidArgumentError(f"Cannot read config file {path}: {e}")
    if not isinstance(raw, dict):
        raise InvalidArgumentError(f"Config file {path} must hold a JSON object")

    unknown = set(raw) - _FILE_KEYS
    if unknown:
        raise InvalidArgumentError(f"Unknown keys in {path}: {sorted(unknown)}")

    kwargs: Dict[str, Any] = {}
    try:
        for key in ("scenario", "replications", "base_seed", "users_per_cell", "n_cells", "bandwidth_mhz",
                    "content_bytes"):
            if key in raw:
                kwargs[key] = int(raw[key])
        if "dump_configurations" in raw:
            if not isinstance(raw["dump_configurations"], bool):
                raise ValueError("dump_configurations must be true or false")
            kwargs["dump_configurations"] = raw["dump_configurations"]
        if "isd_m" in raw:
            kwargs["isd_m"] = float(raw["isd_m"])
        if "sweep" in raw:
            sweep = raw["sweep"]
            kwargs["sweep_values"] = tuple(parse_int_range(sweep) if isinstance(sweep, str) else parse_int_list(sweep))
        if "tdd" in raw:
            kwargs["tdd"] = tuple(parse_int_list(raw["tdd"]))
        if "algorithms" in raw:
            kwargs["algorithms"] = tuple(parse_name_list(raw["algorithms"], ALGORITHMS))
        if "allocation" in raw:
            kwargs["policy"] = _parse_allocation(dict(raw["allocation"]))
        if "cqi_sinr_thresholds" in raw or "cqi_efficiencies" in raw:
            table = CqiTable()
            table = CqiTable(
                sinr_thresholds=tuple(raw.get("cqi_sinr_thresholds", table.sinr_thresholds)),
                efficiencies=tuple(raw.get("cqi_efficiencies", table.efficiencies)),
            )
            kwargs["radio"] = RadioModel(table=table)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"Malformed value in {path}: {e}")

    logger.info(f"Loaded scenario settings from {path}: {sorted(raw)}")
    return kwargs


def build_spec(file_values: Optional[Dict[str, Any]] = None, **overrides) -> ScenarioSpec:
    """
    Merge settings into a ScenarioSpec: explicit overrides win over file values,
    which win over the dataclass defaults. Overrides set to None are ignored.
    """
    kwargs = dict(file_values or {})
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if "scenario" not in kwargs:
        raise InvalidArgumentError("A scenario number is required")
    return ScenarioSpec(**kwargs)
