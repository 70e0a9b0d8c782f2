"""
Hexagonal synchronization area, user deployment and cell adjacency.

Cells are laid out on a hexagonal lattice that spirals outward from the
origin, so the first 7 cells always form the centre cell plus its first ring.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

MAX_CELLS = 256
ADJACENCY_TOLERANCE_M = 1.0

# Axial directions; ring walks start at direction 4 scaled by the ring index.
HEX_DIRECTIONS: Tuple[Tuple[int, int], ...] = (
    (1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1),
)


@dataclass(frozen=True)
class CellSite:
    id: int
    center: Tuple[float, float]
    radius: float = 250.0
    tx_power: float = 46.0  # dBm
    antenna_gain: float = 15.0  # dBi

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgumentError(f"Cell {self.id}: radius must be positive, got {self.radius}")
        if not (math.isfinite(self.tx_power) and math.isfinite(self.antenna_gain)):
            raise InvalidArgumentError(f"Cell {self.id}: tx power and antenna gain must be finite")


@dataclass(frozen=True)
class UserTerminal:
    id: int
    home_cell: int
    position: Tuple[float, float]
    antenna_gain: float = 0.0  # dBi
    # dB; None takes the UE noise figure of the link budget
    noise_figure: Optional[float] = None
    tx_power_d2d: float = 23.0  # dBm


@dataclass(frozen=True)
class SynchronizationArea:
    """A set of cells eligible to host MBSFN Areas, with their adjacency matrix."""

    cells: Tuple[CellSite, ...]
    isd: float = 500.0
    adjacency: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.cells) < 1:
            raise InvalidArgumentError("A synchronization area needs at least one cell")
        ids = [c.id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("Cell ids must be unique within an area")
        if self.adjacency is None:
            object.__setattr__(self, 'adjacency', _adjacency_matrix(self.cells, self.isd))
        self.adjacency.setflags(write=False)

    @property
    def cell_ids(self) -> List[int]:
        return [c.id for c in self.cells]

    @property
    def centers(self) -> np.ndarray:
        """Cell centres as an (n_cells, 2) array in meters."""
        return np.array([c.center for c in self.cells], dtype=float)

    def index_of(self, cell_id: int) -> int:
        for i, cell in enumerate(self.cells):
            if cell.id == cell_id:
                return i
        raise InvalidArgumentError(f"Unknown cell id {cell_id}")

    def cell(self, cell_id: int) -> CellSite:
        return self.cells[self.index_of(cell_id)]

    def is_adjacent(self, a: int, b: int) -> bool:
        return bool(self.adjacency[self.index_of(a), self.index_of(b)])

    def graph(self) -> nx.Graph:
        """Adjacency as a networkx graph keyed by cell id."""
        g = nx.Graph()
        ids = self.cell_ids
        g.add_nodes_from(ids)
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        g.add_edges_from((ids[i], ids[j]) for i, j in zip(rows, cols))
        return g


def _adjacency_matrix(cells: Iterable[CellSite], isd: float) -> np.ndarray:
    centers = np.array([c.center for c in cells], dtype=float)
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    adjacency = np.abs(dist - isd) <= ADJACENCY_TOLERANCE_M
    np.fill_diagonal(adjacency, False)
    return adjacency


def _hex_spiral(n: int) -> List[Tuple[int, int]]:
    """Axial coordinates of the first n hexagons of an outward spiral."""
    coords = [(0, 0)]
    ring = 1
    while len(coords) < n:
        q, r = HEX_DIRECTIONS[4][0] * ring, HEX_DIRECTIONS[4][1] * ring
        for dq, dr in HEX_DIRECTIONS:
            for _ in range(ring):
                coords.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    return coords[:n]


def build_hex_grid(n_cells: int, isd: float = 500.0, radius: float = 250.0) -> SynchronizationArea:
    """
    Build a hexagonal grid of cells spiralling outward from the origin.

    Args:
        n_cells: Number of cells (1..256)
        isd: Inter site distance in meters

    Returns:
        SynchronizationArea with adjacency derived from centre distance == isd

    Raises:
        InvalidArgumentError: If n_cells is out of range or isd is not positive
    """
    if not 1 <= n_cells <= MAX_CELLS:
        raise InvalidArgumentError(f"n_cells must be in 1..{MAX_CELLS}, got {n_cells}")
    if not isd > 0:
        raise InvalidArgumentError(f"isd must be positive, got {isd}")

    cells = []
    for cell_id, (q, r) in enumerate(_hex_spiral(n_cells)):
        x = isd * (q + r / 2.0)
        y = isd * (math.sqrt(3) / 2.0) * r
        cells.append(CellSite(id=cell_id, center=(x, y), radius=radius))

    area = SynchronizationArea(cells=tuple(cells), isd=isd)
    logger.debug(f"Built hex grid with {n_cells} cells, isd={isd} m")
    return area


def place_users(area: SynchronizationArea, users_per_cell: int, rng_seed: int) -> List[UserTerminal]:
    """
    Drop users uniformly over each cell disk.

    Args:
        area: Synchronization area
        users_per_cell: Users per cell (0 allowed)
        rng_seed: Seed for numpy's default generator

    Returns:
        Users ordered by cell, ids 0..n-1
    """
    if users_per_cell < 0:
        raise InvalidArgumentError(f"users_per_cell must be >= 0, got {users_per_cell}")

    rng = np.random.default_rng(rng_seed)
    users: List[UserTerminal] = []
    for cell in area.cells:
        # sqrt on the radius draw keeps the density uniform over the disk
        rho = cell.radius * np.sqrt(rng.random(users_per_cell))
        theta = 2.0 * np.pi * rng.random(users_per_cell)
        xs = cell.center[0] + rho * np.cos(theta)
        ys = cell.center[1] + rho * np.sin(theta)
        for x, y in zip(xs, ys):
            users.append(UserTerminal(id=len(users), home_cell=cell.id, position=(float(x), float(y))))
    return users


def adjacent_subsets(area: SynchronizationArea, cell_ids: Iterable[int]) -> List[FrozenSet[int]]:
    """
    Split a set of cells into groups of mutually reachable adjacent cells.

    Args:
        area: Synchronization area providing the adjacency
        cell_ids: Cells to split

    Returns:
        Connected components of the induced subgraph, ordered by lowest member id

    Raises:
        InvalidArgumentError: If a cell id is not part of the area
    """
    wanted = set(cell_ids)
    unknown = wanted - set(area.cell_ids)
    if unknown:
        raise InvalidArgumentError(f"Unknown cell id(s): {sorted(unknown)}")
    if not wanted:
        return []

    subgraph = area.graph().subgraph(wanted)
    components = [frozenset(c) for c in nx.connected_components(subgraph)]
    components.sort(key=min)
    return components
