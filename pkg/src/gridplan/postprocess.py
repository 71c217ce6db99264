"""Walls, doors and windows derived from a solved layout.

Edges are addressed as ``(cell, direction)``.  Interior edges are stored
from the cell on their west or south side (direction E or N), exterior
edges from the indoor cell they bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoCandidate
from .grid import DIRECTIONS, Cell, Direction, Grid, exterior_directions
from .layout import CORRIDOR, Layout
from .rng import SplitMix64

EXTERIOR = "exterior"
INTERIOR = "interior"
WINDOW_SALT = 0x57494E444F57  # separates the window stream from the door stream
DEFAULT_WINDOWS = 2

_DIR_RANK = {d: n for n, d in enumerate(DIRECTIONS)}


@dataclass(frozen=True)
class Edge:
    cell: Cell
    direction: Direction

    def key(self):
        return (self.cell[1], self.cell[0], _DIR_RANK[self.direction])

    def far(self) -> Cell:
        return self.direction.step(self.cell)

    def to_list(self) -> list:
        return [self.cell[0], self.cell[1], self.direction.name]

    @classmethod
    def from_list(cls, v) -> "Edge":
        return cls((int(v[0]), int(v[1])), Direction[v[2]])


@dataclass(frozen=True)
class Wall:
    edge: Edge
    kind: str
    sides: tuple  # labels on the two sides; outdoor is -1


@dataclass(frozen=True)
class Door:
    edge: Edge
    room: int
    kind: str  # "room" or "entrance"


@dataclass(frozen=True)
class Window:
    edge: Edge
    space: int  # 0 is the corridor


@dataclass
class FloorplanArtifacts:
    walls: list = field(default_factory=list)
    doors: list = field(default_factory=list)
    windows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "walls": [{"edge": w.edge.to_list(), "kind": w.kind, "sides": list(w.sides)} for w in self.walls],
            "doors": [{"edge": d.edge.to_list(), "room": d.room, "kind": d.kind} for d in self.doors],
            "windows": [{"edge": w.edge.to_list(), "space": w.space} for w in self.windows],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FloorplanArtifacts":
        return cls(
            [Wall(Edge.from_list(w["edge"]), w["kind"], tuple(w["sides"])) for w in doc.get("walls", [])],
            [Door(Edge.from_list(d["edge"]), int(d["room"]), d["kind"]) for d in doc.get("doors", [])],
            [Window(Edge.from_list(w["edge"]), int(w["space"])) for w in doc.get("windows", [])],
        )


def _closed(layout: Layout, label) -> bool:
    return label not in (None, CORRIDOR) and label not in layout.scene.open_room_ids


def generate_walls(layout: Layout, grid: Grid) -> list[Wall]:
    """Exterior walls on the envelope; interior walls wherever a closed room meets another area."""
    walls = []
    labels = layout.labels
    for c in grid.indoor_cells():
        for d in DIRECTIONS:
            n = d.step(c)
            if n not in grid.indoor:
                walls.append(Wall(Edge(c, d), EXTERIOR, (labels[c], -1)))
            elif d in (Direction.E, Direction.N):
                a, b = labels[c], labels[n]
                if a != b and (_closed(layout, a) or _closed(layout, b)):
                    walls.append(Wall(Edge(c, d), INTERIOR, (a, b)))
    return sorted(walls, key=lambda w: w.edge.key())


def entrance_edge(grid: Grid) -> Edge:
    dirs = sorted(exterior_directions(grid, grid.entrance), key=lambda d: d.name)
    return Edge(grid.entrance, dirs[0])


def place_doors(layout: Layout, walls: list, rng_seed: int = 0) -> list[Door]:
    """One door per closed room, open-area side preferred, plus the entrance door."""
    grid = layout.grid
    rng = SplitMix64(rng_seed)
    fcells = layout.furniture_cells()
    interior = [w for w in walls if w.kind == INTERIOR]
    doors = []
    for r in layout.scene.rooms:
        if r.open:
            continue
        classes = ([], [])
        for w in interior:
            a, b = w.edge.cell, w.edge.far()
            for inner, outer in ((a, b), (b, a)):
                if layout.labels[inner] != r.id or inner in fcells:
                    continue
                if not layout.is_q_cell(outer, fcells):
                    continue
                classes[0 if layout.labels[outer] != CORRIDOR else 1].append(w.edge)
        pool = classes[0] or classes[1]
        if not pool:
            raise NoCandidate(f"room {r.id} ({r.name}) has no free wall edge towards a traversable cell")
        doors.append(Door(rng.choice(pool), r.id, "room"))
    doors.append(Door(entrance_edge(grid), layout.labels[grid.entrance], "entrance"))
    return doors


def place_windows(layout: Layout, walls: list, rng_seed: int = 0,
                  count_per_space: int = DEFAULT_WINDOWS) -> list[Window]:
    """Up to ``count_per_space`` windows per space on free exterior edges."""
    grid = layout.grid
    rng = SplitMix64(rng_seed ^ WINDOW_SALT)
    fcells = layout.furniture_cells()
    taken = entrance_edge(grid)
    by_space: dict[int, list] = {}
    for w in walls:
        if w.kind != EXTERIOR or w.edge == taken or w.edge.cell in fcells:
            continue
        by_space.setdefault(layout.labels[w.edge.cell], []).append(w.edge)
    windows = []
    for space in [CORRIDOR] + [r.id for r in layout.scene.rooms]:
        for e in rng.sample(by_space.get(space, []), count_per_space):
            windows.append(Window(e, space))
    return windows


def postprocess(layout: Layout, seed: int = 0, count_per_space: int = DEFAULT_WINDOWS) -> FloorplanArtifacts:
    grid = layout.grid
    walls = generate_walls(layout, grid)
    return FloorplanArtifacts(walls, place_doors(layout, walls, seed), place_windows(layout, walls, seed, count_per_space))
