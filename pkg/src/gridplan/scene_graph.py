"""Structured design description consumed by the optimizer.

A scene graph is exchanged as a single JSON document (see
``data/scene_graph.schema.json``).  All lengths are integer cell counts;
metres only appear through ``cell_size_m``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

import jsonschema

from .errors import CapacityError, SceneReferenceError, SchemaError
from .grid import Cell, Grid, DIRECTIONS

SCHEMA_VERSION = 1
CORNERS = ("NW", "NE", "SW", "SE")
WEIGHT_KEYS = ("w_rect", "w_perim", "w_area", "w_aspect", "w_rel", "w_bal", "w_priv", "w_ref")


@dataclass(frozen=True)
class FurnitureSpec:
    id: int
    name: str
    width_cells: int
    length_cells: int
    against_wall: bool = False

    @property
    def footprint(self) -> int:
        return self.width_cells * self.length_cells


@dataclass(frozen=True)
class RoomSpec:
    id: int
    name: str
    target_area_cells: int
    open: bool = False
    corner_pref: Optional[str] = None
    furniture: tuple[FurnitureSpec, ...] = ()

    def furniture_by_id(self, l: int) -> FurnitureSpec:
        for f in self.furniture:
            if f.id == l:
                return f
        raise KeyError(l)


@dataclass(frozen=True)
class FloorSpec:
    width_cells: int
    length_cells: int
    cell_size_m: float
    outdoor_cells: frozenset = frozenset()
    entrance: Cell = (0, 0)


@dataclass(frozen=True)
class ConstraintSet:
    adjacency_pairs: tuple[tuple[int, int], ...] = ()
    privacy_order: tuple[int, ...] = ()
    alignment_pairs: tuple[tuple[int, int, int], ...] = ()
    facing_pairs: tuple[tuple[int, int, int], ...] = ()
    relative_offsets: tuple[tuple[int, int, int, float, float], ...] = ()


@dataclass(frozen=True)
class ObjectiveWeights:
    w_rect: float
    w_perim: float
    w_area: float
    w_aspect: float
    w_rel: float
    w_bal: float
    w_priv: float
    w_ref: float

    def __post_init__(self):
        for k in WEIGHT_KEYS:
            v = getattr(self, k)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise SchemaError(f"weight {k} must be finite and >= 0, got {v!r}")

    @classmethod
    def default(cls) -> "ObjectiveWeights":
        return cls(**_default_weights())

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in WEIGHT_KEYS}

    def scaled(self, factor: float) -> "ObjectiveWeights":
        return ObjectiveWeights(**{k: v * factor for k, v in self.as_dict().items()})


@dataclass(frozen=True)
class SceneGraph:
    floor: FloorSpec
    rooms: tuple[RoomSpec, ...]
    constraints: ConstraintSet = ConstraintSet()
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights.default)
    metadata: Any = None  # free-form annotations, JSON-compatible

    @property
    def N(self) -> int:
        return len(self.rooms)

    def room(self, k: int) -> RoomSpec:
        return self.rooms[k - 1]

    @property
    def open_room_ids(self) -> frozenset:
        return frozenset(r.id for r in self.rooms if r.open)

    def grid(self) -> Grid:
        f = self.floor
        return Grid.full(f.width_cells, f.length_cells, f.entrance, f.outdoor_cells)

    def with_weights(self, weights: ObjectiveWeights) -> "SceneGraph":
        return replace(self, weights=weights)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    fatal: bool = True

    def __str__(self):
        tag = "error" if self.fatal else "warning"
        return f"{tag}[{self.code}]: {self.message}"


def corner_cell(corner: str, W: int, L: int) -> Cell:
    """Grid cell for a corner name; i grows eastwards, j grows northwards."""
    return {
        "NW": (0, L - 1),
        "NE": (W - 1, L - 1),
        "SW": (0, 0),
        "SE": (W - 1, 0),
    }[corner]


@lru_cache(maxsize=None)
def _default_weights() -> dict:
    text = resources.files("gridplan.data").joinpath("config.default.json").read_text()
    return load_weights_dict(json.loads(text), require_all=True)


def load_weights_dict(data: dict, require_all: bool = False) -> dict:
    unknown = set(data) - set(WEIGHT_KEYS)
    if unknown:
        raise SchemaError(f"unknown weight keys: {sorted(unknown)}")
    if require_all:
        missing = [k for k in WEIGHT_KEYS if k not in data]
        if missing:
            raise SchemaError(f"config is missing weight keys: {missing}")
    out = {}
    for k, v in data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"weight {k} must be a number")
        out[k] = float(v)
    return out


def load_weights(path) -> ObjectiveWeights:
    with open(path) as fh:
        return ObjectiveWeights(**load_weights_dict(json.load(fh), require_all=True))


@lru_cache(maxsize=None)
def _schema() -> dict:
    text = resources.files("gridplan.data").joinpath("scene_graph.schema.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# validation


def validate_scene_graph(sg: SceneGraph) -> list[Diagnostic]:
    """Check every scene-graph invariant.

    Returns fatal diagnostics for broken invariants and non-fatal ones for
    heuristic warnings (likely-infeasible furniture, outdoor corner cells).
    An empty list means the scene is clean.
    """
    diags: list[Diagnostic] = []
    f = sg.floor
    W, L = f.width_cells, f.length_cells
    if W < 2 or L < 2:
        diags.append(Diagnostic("SchemaError", f"floor must be at least 2x2, got {W}x{L}"))
        return diags
    for c in sorted(f.outdoor_cells):
        if not (0 <= c[0] < W and 0 <= c[1] < L):
            diags.append(Diagnostic("OutOfBounds", f"outdoor cell {c} outside the {W}x{L} floor"))
    indoor = {(i, j) for j in range(L) for i in range(W)} - set(f.outdoor_cells)
    e = tuple(f.entrance)
    if e not in indoor:
        diags.append(Diagnostic("EntranceOutdoor", f"entrance {e} is not an indoor cell"))
    elif all(d.step(e) in indoor for d in DIRECTIONS):
        diags.append(Diagnostic("EntranceNotOnBoundary", f"entrance {e} has no neighbour outside the indoor space"))

    ids = [r.id for r in sg.rooms]
    if ids != list(range(1, len(ids) + 1)):
        diags.append(Diagnostic("SchemaError", f"room ids must be 1..N in order, got {ids}"))
    furn_ids: dict[int, set[int]] = {}
    for r in sg.rooms:
        fids = [x.id for x in r.furniture]
        if fids != list(range(1, len(fids) + 1)):
            diags.append(Diagnostic("SchemaError", f"furniture ids of room {r.id} must be 1..N_k, got {fids}"))
        furn_ids[r.id] = set(fids)
        if r.target_area_cells < 1:
            diags.append(Diagnostic("SchemaError", f"room {r.id} target area must be >= 1"))
        total = sum(x.footprint for x in r.furniture)
        if total > r.target_area_cells:
            diags.append(Diagnostic(
                "CapacityError",
                f"room {r.id} ({r.name}) furniture footprint {total} exceeds target area {r.target_area_cells}",
            ))
        for x in r.furniture:
            if x.width_cells < 1 or x.length_cells < 1:
                diags.append(Diagnostic("SchemaError", f"furniture {r.id}/{x.id} has non-positive size"))
            side = math.sqrt(r.target_area_cells)
            if x.width_cells > side and x.length_cells > side:
                diags.append(Diagnostic(
                    "LikelyInfeasible",
                    f"furniture {r.id}/{x.id} ({x.name}) {x.width_cells}x{x.length_cells} is wider than "
                    f"room {r.id}'s square-root side {side:.2f} in both dimensions",
                    fatal=False,
                ))
        if r.corner_pref is not None:
            if r.corner_pref not in CORNERS:
                diags.append(Diagnostic("SchemaError", f"room {r.id} has unknown corner {r.corner_pref!r}"))
            elif corner_cell(r.corner_pref, W, L) not in indoor:
                diags.append(Diagnostic(
                    "CornerOutdoor", f"room {r.id} corner {r.corner_pref} maps to an outdoor cell", fatal=False,
                ))

    area = sum(r.target_area_cells for r in sg.rooms)
    if area > len(indoor):
        diags.append(Diagnostic("CapacityError", f"rooms request {area} cells but only {len(indoor)} are indoor"))

    rooms = set(ids)
    c = sg.constraints

    def room_ok(k, what):
        if k not in rooms:
            diags.append(Diagnostic("ReferenceError", f"{what} references unknown room {k}"))
            return False
        return True

    def furn_ok(k, l, what):
        if room_ok(k, what) and l not in furn_ids.get(k, ()):
            diags.append(Diagnostic("ReferenceError", f"{what} references unknown furniture {l} in room {k}"))

    for k, m in c.adjacency_pairs:
        room_ok(k, "adjacency pair")
        room_ok(m, "adjacency pair")
        if k == m:
            diags.append(Diagnostic("SelfPair", f"adjacency pair ({k}, {m}) references the same room"))
    for k in c.privacy_order:
        room_ok(k, "privacy order")
    if len(set(c.privacy_order)) != len(c.privacy_order):
        diags.append(Diagnostic("SelfPair", "privacy order lists a room twice"))
    for name, pairs in (("alignment pair", c.alignment_pairs), ("facing pair", c.facing_pairs)):
        for k, l1, l2 in pairs:
            furn_ok(k, l1, name)
            furn_ok(k, l2, name)
            if l1 == l2:
                diags.append(Diagnostic("SelfPair", f"{name} ({k}, {l1}, {l2}) references the same furniture"))
    for k, l1, l2, di, dj in c.relative_offsets:
        furn_ok(k, l1, "relative offset")
        furn_ok(k, l2, "relative offset")
        if l1 == l2:
            diags.append(Diagnostic("SelfPair", f"relative offset ({k}, {l1}, {l2}) references the same furniture"))
        if not (math.isfinite(di) and math.isfinite(dj)):
            diags.append(Diagnostic("SchemaError", "relative offsets must be finite"))
    return diags


def fatal(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.fatal]


# ---------------------------------------------------------------------------
# (de)serialization


def _tuple_cell(v) -> Cell:
    return (int(v[0]), int(v[1]))


def from_dict(doc: dict) -> SceneGraph:
    """Build a SceneGraph from a schema-valid document without semantic checks."""
    fl = doc["floor"]
    floor = FloorSpec(
        width_cells=fl["width_cells"],
        length_cells=fl["length_cells"],
        cell_size_m=float(fl["cell_size_m"]),
        outdoor_cells=frozenset(_tuple_cell(c) for c in fl.get("outdoor_cells", [])),
        entrance=_tuple_cell(fl["entrance"]),
    )
    rooms = []
    for r in doc["rooms"]:
        furn = tuple(
            FurnitureSpec(
                id=x["id"], name=x["name"], width_cells=x["width_cells"],
                length_cells=x["length_cells"], against_wall=bool(x.get("against_wall", False)),
            )
            for x in r.get("furniture", [])
        )
        rooms.append(RoomSpec(
            id=r["id"], name=r["name"], target_area_cells=r["target_area_cells"],
            open=bool(r.get("open", False)), corner_pref=r.get("corner_pref"), furniture=furn,
        ))
    c = doc.get("constraints", {})
    cons = ConstraintSet(
        adjacency_pairs=tuple(tuple(p) for p in c.get("adjacency_pairs", [])),
        privacy_order=tuple(c.get("privacy_order", [])),
        alignment_pairs=tuple(tuple(p) for p in c.get("alignment_pairs", [])),
        facing_pairs=tuple(tuple(p) for p in c.get("facing_pairs", [])),
        relative_offsets=tuple(
            (int(k), int(a), int(b), _num(di), _num(dj)) for k, a, b, di, dj in c.get("relative_offsets", [])
        ),
    )
    w = dict(_default_weights())
    w.update(load_weights_dict(doc.get("weights", {})))
    return SceneGraph(floor, tuple(rooms), cons, ObjectiveWeights(**w), doc.get("metadata"))


def _num(v):
    # keep integral offsets as ints so serialization is stable
    return int(v) if float(v).is_integer() else float(v)


def to_dict(sg: SceneGraph) -> dict:
    f = sg.floor
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "floor": {
            "width_cells": f.width_cells,
            "length_cells": f.length_cells,
            "cell_size_m": f.cell_size_m,
            "outdoor_cells": [list(c) for c in sorted(f.outdoor_cells)],
            "entrance": list(f.entrance),
        },
        "rooms": [
            {
                "id": r.id,
                "name": r.name,
                "target_area_cells": r.target_area_cells,
                "open": r.open,
                "corner_pref": r.corner_pref,
                "furniture": [
                    {
                        "id": x.id, "name": x.name, "width_cells": x.width_cells,
                        "length_cells": x.length_cells, "against_wall": x.against_wall,
                    }
                    for x in r.furniture
                ],
            }
            for r in sg.rooms
        ],
        "constraints": {
            "adjacency_pairs": [list(p) for p in sg.constraints.adjacency_pairs],
            "privacy_order": list(sg.constraints.privacy_order),
            "alignment_pairs": [list(p) for p in sg.constraints.alignment_pairs],
            "facing_pairs": [list(p) for p in sg.constraints.facing_pairs],
            "relative_offsets": [list(p) for p in sg.constraints.relative_offsets],
        },
        "weights": sg.weights.as_dict(),
    }
    if sg.metadata is not None:
        doc["metadata"] = sg.metadata
    return doc


def serialize(sg: SceneGraph) -> str:
    return json.dumps(to_dict(sg), indent=2) + "\n"


def parse_scene_graph(document) -> SceneGraph:
    """Parse and check a scene-graph document (JSON text or already-decoded dict).

    Raises SchemaError, SceneReferenceError or CapacityError on the first
    category of fatal problem found.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}") from e
    try:
        jsonschema.validate(document, _schema())
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(f"{path}: {e.message}") from e
    sg = from_dict(document)
    problems = fatal(validate_scene_graph(sg))
    if problems:
        by_code = {d.code for d in problems}
        msg = "; ".join(str(d) for d in problems)
        if "ReferenceError" in by_code:
            raise SceneReferenceError(msg)
        if by_code == {"CapacityError"}:
            raise CapacityError(msg)
        raise SchemaError(msg)
    return sg


def load_scene_graph(path) -> SceneGraph:
    with open(path) as fh:
        return parse_scene_graph(fh.read())
