"""Discrete design space: cells, 4-neighbourhoods and directions.

Cells are ``(i, j)`` tuples with ``i`` running west to east over
``0..W-1`` and ``j`` running south to north over ``0..L-1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .errors import OutOfBounds

Cell = tuple[int, int]


class Direction(enum.Enum):
    E = (1, 0)
    W = (-1, 0)
    S = (0, -1)
    N = (0, 1)

    @property
    def offset(self) -> Cell:
        return self.value

    @property
    def inverse(self) -> "Direction":
        return _INVERSE[self]

    def step(self, cell: Cell) -> Cell:
        return (cell[0] + self.value[0], cell[1] + self.value[1])


_INVERSE = {
    Direction.E: Direction.W,
    Direction.W: Direction.E,
    Direction.S: Direction.N,
    Direction.N: Direction.S,
}

# fixed iteration order used everywhere (variable naming, LP output)
DIRECTIONS: tuple[Direction, ...] = (Direction.E, Direction.W, Direction.S, Direction.N)


@dataclass(frozen=True)
class Grid:
    W: int
    L: int
    indoor: frozenset  # cells of G'
    entrance: Cell

    def __post_init__(self):
        if self.W < 1 or self.L < 1:
            raise ValueError(f"grid extents must be positive, got {self.W}x{self.L}")
        if not self.indoor:
            raise ValueError("grid has no indoor cells")
        if self.entrance not in self.indoor:
            raise ValueError(f"entrance {self.entrance} is not an indoor cell")

    @classmethod
    def full(cls, W: int, L: int, entrance: Cell = (0, 0), outdoor: Iterable[Cell] = ()) -> "Grid":
        out = set(outdoor)
        cells = frozenset((i, j) for j in range(L) for i in range(W) if (i, j) not in out)
        return cls(W, L, cells, tuple(entrance))

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.W and 0 <= cell[1] < self.L

    def is_indoor(self, cell: Cell) -> bool:
        return cell in self.indoor

    def cells(self) -> Iterator[Cell]:
        """All cells of G in row-major order (j outer)."""
        for j in range(self.L):
            for i in range(self.W):
                yield (i, j)

    def indoor_cells(self) -> list[Cell]:
        """Cells of G' in deterministic row-major order."""
        return [c for c in self.cells() if c in self.indoor]

    @property
    def n_indoor(self) -> int:
        return len(self.indoor)

    @property
    def big_m(self) -> int:
        return len(self.indoor) + 1


def neighbors(g: Grid, c: Cell) -> list[Cell]:
    """Indoor, in-bounds 4-neighbours of ``c``."""
    if not g.in_bounds(c):
        raise OutOfBounds(f"cell {c} outside {g.W}x{g.L} grid")
    out = []
    for d in DIRECTIONS:
        n = d.step(c)
        if n in g.indoor:
            out.append(n)
    return out


def adj(g: Grid, c: Cell, d: Direction) -> Optional[Cell]:
    n = d.step(c)
    return n if n in g.indoor else None


def boundary_cells(g: Grid) -> set[Cell]:
    """Indoor cells with at least one 4-neighbour outside G'."""
    return {c for c in g.indoor if any(d.step(c) not in g.indoor for d in DIRECTIONS)}


def exterior_directions(g: Grid, c: Cell) -> list[Direction]:
    """Directions from ``c`` that leave G'."""
    return [d for d in DIRECTIONS if d.step(c) not in g.indoor]


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])
