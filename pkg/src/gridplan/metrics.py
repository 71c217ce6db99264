"""Physical-plausibility metrics over axis-aligned rectangles.

OOR is the pairwise overlap area between objects and OOB the object area
lying outside the owning room, both as a percentage of the total object
area.  Overlaps among three or more objects are counted once per pair, so
OOR can exceed 100.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
from shapely.geometry import box
from shapely.ops import unary_union

from .errors import MissingRoom, SchemaError
from .layout import Layout

REL_TOL = 1e-9  # relative area below which overlaps and spills count as zero


@dataclass(frozen=True)
class Rect:
    label: str
    x0: float
    y0: float
    x1: float
    y1: float
    room: str = ""  # owning room label, objects only

    def __post_init__(self):
        for v in (self.x0, self.y0, self.x1, self.y1):
            if not math.isfinite(v):
                raise SchemaError(f"non-finite coordinate in {self.label!r}")
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise SchemaError(f"negative extent in {self.label!r}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def geometry(self):
        return box(self.x0, self.y0, self.x1, self.y1)


@dataclass
class BoxScene:
    rooms: list = field(default_factory=list)
    objects: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rooms": [{"label": r.label, "rect": [r.x0, r.y0, r.x1, r.y1]} for r in self.rooms],
            "objects": [{"label": o.label, "room": o.room, "rect": [o.x0, o.y0, o.x1, o.y1]} for o in self.objects],
        }


def _schema() -> dict:
    return json.loads(resources.files("gridplan.data").joinpath("boxscene.schema.json").read_text())


def boxscene_from_dict(doc: dict) -> BoxScene:
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as e:
        raise SchemaError(f"box scene: {e.message}") from e
    rooms = [Rect(r["label"], *map(float, r["rect"])) for r in doc["rooms"]]
    objects = [Rect(o["label"], *map(float, o["rect"]), room=o["room"]) for o in doc["objects"]]
    return BoxScene(rooms, objects)


def load_boxscene(path) -> BoxScene:
    with open(path) as fh:
        return boxscene_from_dict(json.load(fh))


def oor(scene: BoxScene) -> float:
    total = sum(o.area for o in scene.objects)
    if total == 0:
        return 0.0
    geoms = [o.geometry() for o in scene.objects]
    inter = 0.0
    for a in range(len(geoms)):
        for b in range(a + 1, len(geoms)):
            ab = geoms[a].intersection(geoms[b]).area
            inter += ab if ab > REL_TOL * min(geoms[a].area, geoms[b].area) else 0.0
    return 100.0 * inter / total


def oob(scene: BoxScene) -> float:
    total = sum(o.area for o in scene.objects)
    by_label: dict[str, list] = {}
    for r in scene.rooms:
        by_label.setdefault(r.label, []).append(r.geometry())
    unions = {k: unary_union(v) for k, v in by_label.items()}
    outside = 0.0
    for o in scene.objects:
        if o.room not in unions:
            raise MissingRoom(f"object {o.label!r} belongs to unknown room {o.room!r}")
        g = o.geometry()
        out = g.area - g.intersection(unions[o.room]).area
        # coordinates in metres carry rounding noise; snap it away instead of reporting -0.00
        outside += out if out > REL_TOL * g.area else 0.0
    if total == 0:
        return 0.0
    return 100.0 * outside / total


def layout_to_boxscene(layout: Layout) -> BoxScene:
    """Rooms as one rectangle per horizontal run of cells, objects from furniture boxes (metres)."""
    s = layout.scene.floor.cell_size_m
    rooms = []
    names = {r.id: f"{r.id}:{r.name}" for r in layout.scene.rooms}
    for r in layout.scene.rooms:
        cells = set(c for c, v in layout.labels.items() if v == r.id)
        for j in sorted({c[1] for c in cells}):
            row = sorted(c[0] for c in cells if c[1] == j)
            start = prev = row[0]
            for i in row[1:] + [None]:
                if i is not None and i == prev + 1:
                    prev = i
                    continue
                rooms.append(Rect(names[r.id], start * s, j * s, (prev + 1) * s, (j + 1) * s))
                if i is not None:
                    start = prev = i
    objects = []
    for (k, l), b in sorted(layout.furniture.items()):
        fs = layout.scene.room(k).furniture_by_id(l)
        x0, y0 = b.origin[0] * s, b.origin[1] * s
        objects.append(Rect(f"{k}/{l}:{fs.name}", x0, y0, x0 + b.dims[0] * s, y0 + b.dims[1] * s, room=names[k]))
    return BoxScene(rooms, objects)


def metrics_table(scene: BoxScene) -> dict[str, float]:
    return {"OOR": oor(scene), "OOB": oob(scene)}
