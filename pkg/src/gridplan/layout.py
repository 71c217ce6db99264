"""Solved assignment of cells and furniture, plus its JSON wire format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

import jsonschema

from .errors import SchemaError
from .grid import Cell, Grid
from .scene_graph import SceneGraph, from_dict, to_dict

CORRIDOR = 0
OUTDOOR = -1
LAYOUT_SCHEMA_VERSION = 1

ORIENTATIONS = ((0, 1), (1, 0), (0, -1), (-1, 0))


def orientation_from_bits(sigma: int, mu: int) -> tuple[int, int]:
    s = 1 - 2 * mu
    return (sigma * s, (1 - sigma) * s)


def bits_from_orientation(nu: tuple[int, int]) -> tuple[int, int]:
    sigma = 1 if nu[0] != 0 else 0
    mu = 1 if (nu[0] + nu[1]) < 0 else 0
    return sigma, mu


@dataclass(frozen=True)
class FurnitureBox:
    room: int
    id: int
    origin: Cell
    dims: tuple[int, int]
    orientation: tuple[int, int]

    @property
    def sigma(self) -> int:
        return bits_from_orientation(self.orientation)[0]

    def cells(self) -> list[Cell]:
        i0, j0 = self.origin
        return [(i0 + a, j0 + b) for b in range(self.dims[1]) for a in range(self.dims[0])]

    def doubled_centroid(self) -> tuple[int, int]:
        return (2 * self.origin[0] + self.dims[0] - 1, 2 * self.origin[1] + self.dims[1] - 1)

    @property
    def area(self) -> int:
        return self.dims[0] * self.dims[1]


@dataclass
class Layout:
    scene: SceneGraph
    labels: dict  # indoor cell -> 0 (corridor) or room id
    furniture: dict = field(default_factory=dict)  # (k, l) -> FurnitureBox
    objective: dict = field(default_factory=dict)
    artifacts: Any = None  # postprocess.FloorplanArtifacts

    @property
    def grid(self) -> Grid:
        return self.scene.grid()

    def room_cells(self, k: int) -> list[Cell]:
        return sorted((c for c, v in self.labels.items() if v == k), key=lambda c: (c[1], c[0]))

    def furniture_cells(self) -> dict:
        """cell -> (k, l) for every furniture-covered cell (first owner wins)."""
        out = {}
        for key in sorted(self.furniture):
            for c in self.furniture[key].cells():
                out.setdefault(c, key)
        return out

    def is_q_cell(self, c: Cell, fcells: Optional[dict] = None) -> bool:
        lab = self.labels.get(c)
        if lab is None:
            return False
        if lab == CORRIDOR:
            return True
        if lab in self.scene.open_room_ids:
            if fcells is None:
                fcells = self.furniture_cells()
            return c not in fcells
        return False


# ---------------------------------------------------------------------------
# JSON


def layout_to_dict(layout: Layout) -> dict:
    sg = layout.scene
    W, L = sg.floor.width_cells, sg.floor.length_cells
    rows = []
    for j in range(L):
        rows.append([layout.labels.get((i, j), OUTDOOR) for i in range(W)])
    doc: dict[str, Any] = {
        "schema_version": LAYOUT_SCHEMA_VERSION,
        "scene": to_dict(sg),
        "labels": rows,
        "furniture": [
            {
                "room": b.room,
                "id": b.id,
                "origin": list(b.origin),
                "dims": list(b.dims),
                "orientation": list(b.orientation),
            }
            for _, b in sorted(layout.furniture.items())
        ],
        "objective": {k: _round(v) for k, v in sorted(layout.objective.items())},
    }
    if layout.artifacts is not None:
        doc["artifacts"] = layout.artifacts.to_dict()
    return doc


def _round(v: float) -> float:
    # strip solver float noise so files are byte-stable
    r = round(v, 9)
    return 0.0 if r == 0 else r


def dumps_layout(layout: Layout) -> str:
    return json.dumps(layout_to_dict(layout), indent=2) + "\n"


@lru_cache(maxsize=None)
def _schema() -> dict:
    return json.loads(resources.files("gridplan.data").joinpath("layout.schema.json").read_text())


def layout_from_dict(doc: dict) -> Layout:
    from .postprocess import FloorplanArtifacts

    if not isinstance(doc, dict) or doc.get("schema_version") != LAYOUT_SCHEMA_VERSION:
        raise SchemaError("unsupported layout schema_version")
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as e:
        raise SchemaError(f"layout: {e.message} at /{'/'.join(map(str, e.absolute_path))}") from e
    try:
        sg = from_dict(doc["scene"])
        W, L = sg.floor.width_cells, sg.floor.length_cells
        rows = doc["labels"]
        if len(rows) != L or any(len(r) != W for r in rows):
            raise SchemaError("labels must be an L x W array")
        labels = {}
        for j, row in enumerate(rows):
            for i, v in enumerate(row):
                if v != OUTDOOR:
                    labels[(i, j)] = int(v)
        furniture = {}
        for f in doc.get("furniture", []):
            b = FurnitureBox(
                room=int(f["room"]), id=int(f["id"]), origin=tuple(f["origin"]),
                dims=tuple(f["dims"]), orientation=tuple(f["orientation"]),
            )
            furniture[(b.room, b.id)] = b
        art = doc.get("artifacts")
        artifacts = FloorplanArtifacts.from_dict(art) if art is not None else None
        return Layout(sg, labels, furniture, dict(doc.get("objective", {})), artifacts)
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed layout document: {e}") from e


def load_layout(path) -> Layout:
    with open(path) as fh:
        return layout_from_dict(json.load(fh))
