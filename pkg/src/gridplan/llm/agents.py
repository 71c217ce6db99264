"""Six-stage agent pipeline turning a free-text brief into a SceneGraph.

Each stage answers with JSON that must validate against its schema before
the next stage runs; every stage sees the brief and the validated answers
of the stages before it.  After assembly the scene graph is checked, and
the stage responsible for the first fatal diagnostic is asked again with
the diagnostics appended, up to ``max_retries`` times.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from string import Template
from typing import Optional

import jsonschema

from ..errors import ConflictError, StageSchemaError
from ..scene_graph import Diagnostic, SceneGraph, fatal, from_dict, validate_scene_graph
from .client import ChatClient, LlmClientConfig, dumps, make_client
from .stages import STAGE_NAMES, STAGES, AgentStage


def round_dimensions(meters: float, cell_size_m: float) -> int:
    """Cells for a length: round half up, at least one cell."""
    if meters <= 0 or cell_size_m <= 0:
        raise ValueError("lengths and cell size must be positive")
    # guard against 1.5000000000000002-style noise deciding the rounding
    q = round(meters / cell_size_m, 9)
    return max(1, int(math.floor(q + 0.5)))


def _round_half_up(x: float) -> int:
    return int(math.floor(round(x, 9) + 0.5))


@dataclass
class AgentsReport:
    scene: SceneGraph
    retries: dict = field(default_factory=dict)  # stage -> retry count
    outputs: dict = field(default_factory=dict)  # stage -> final validated answer
    diagnostics: list = field(default_factory=list)  # non-fatal diagnostics of the final scene


def _render_prompt(stage: AgentStage, brief: str, context: dict, feedback: list) -> tuple[str, str]:
    system = Template(stage.prompt_template()).substitute(schema=json.dumps(stage.schema, indent=2, sort_keys=True))
    parts = [f"Brief:\n{brief.strip()}"]
    if context:
        parts.append("Validated answers of earlier stages:\n" + dumps(context))
    if feedback:
        parts.append("Your previous answer was rejected:\n" + "\n".join(f"- {m}" for m in feedback))
    return system, "\n\n".join(parts)


class _Pipeline:
    def __init__(self, brief: str, cfg: LlmClientConfig, client: ChatClient):
        self.brief = brief
        self.cfg = cfg
        self.client = client
        self.outputs: dict = {}
        self.attempts = dict.fromkeys(STAGE_NAMES, 0)

    def retries(self) -> dict:
        return {s: max(0, n - 1) for s, n in self.attempts.items()}

    def run_stage(self, stage: AgentStage, feedback: Optional[list] = None) -> None:
        feedback = list(feedback or [])
        budget = self.cfg.max_retries + 1
        while True:
            context = {s: self.outputs[s] for s in STAGE_NAMES if s in self.outputs and s != stage.name}
            system, user = _render_prompt(stage, self.brief, context, feedback)
            attempt = self.attempts[stage.name]
            self.attempts[stage.name] += 1
            budget -= 1
            text = self.client.complete(stage.name, system, user, stage.schema, attempt)
            try:
                answer = json.loads(text)
                jsonschema.validate(answer, stage.schema)
            except (json.JSONDecodeError, jsonschema.ValidationError) as e:
                msg = e.msg if isinstance(e, json.JSONDecodeError) else e.message
                if budget <= 0:
                    raise StageSchemaError(f"stage {stage.name}: invalid answer after retries: {msg}") from e
                feedback = feedback + [f"schema violation: {msg}"]
                continue
            self.outputs[stage.name] = answer
            return


def run_agents_report(brief: str, cfg: LlmClientConfig, client: Optional[ChatClient] = None) -> AgentsReport:
    client = client or make_client(cfg)
    pipe = _Pipeline(brief, cfg, client)
    by_name = {s.name: s for s in STAGES}
    for stage in STAGES:
        pipe.run_stage(stage)
    for round_ in range(cfg.max_retries + 1):
        sg, diags = assemble(pipe.outputs, brief)
        bad = fatal(diags)
        if not bad:
            return AgentsReport(sg, pipe.retries(), dict(pipe.outputs), diags)
        if round_ == cfg.max_retries:
            raise ConflictError("scene graph still has fatal diagnostics after retries: "
                                + "; ".join(str(d) for d in bad), bad)
        culprit = min((_stage_of(d) for d in bad), key=STAGE_NAMES.index)
        pipe.run_stage(by_name[culprit], [str(d) for d in bad if _stage_of(d) == culprit])
    raise AssertionError("unreachable")


def run_agents(brief: str, cfg: LlmClientConfig, client: Optional[ChatClient] = None) -> SceneGraph:
    return run_agents_report(brief, cfg, client).scene


# -- assembly --------------------------------------------------------------


_STAGE_BY_CODE = {
    "SchemaError": "basic_info",
    "OutOfBounds": "outdoor_space",
    "EntranceOutdoor": "entrance",
    "EntranceNotOnBoundary": "entrance",
}


@dataclass(frozen=True)
class _StageDiagnostic(Diagnostic):
    stage: str = "room_analysis"


def _stage_of(d: Diagnostic) -> str:
    if isinstance(d, _StageDiagnostic):
        return d.stage
    if d.code in _STAGE_BY_CODE:
        return _STAGE_BY_CODE[d.code]
    return "furniture_analysis" if "furniture" in d.message else "room_analysis"


def assemble(outputs: dict, brief: str = "") -> tuple[SceneGraph, list]:
    """Combine validated stage answers into a SceneGraph plus diagnostics."""
    basic, env = outputs["basic_info"], outputs["environment"]
    outdoor, ent = outputs["outdoor_space"], outputs["entrance"]
    rooms_ans, furn_ans = outputs["room_analysis"], outputs["furniture_analysis"]
    diags: list[Diagnostic] = []

    cell = float(basic["cell_size_m"])
    W = round_dimensions(basic["floor_width_m"], cell)
    L = round_dimensions(basic["floor_length_m"], cell)

    out_cells = set()
    for reg in outdoor["regions"]:
        for j in range(L):
            for i in range(W):
                cx, cy = (i + 0.5) * cell, (j + 0.5) * cell
                if reg["x_m"] <= cx < reg["x_m"] + reg["width_m"] and reg["y_m"] <= cy < reg["y_m"] + reg["length_m"]:
                    out_cells.add((i, j))

    side = ent["side"]
    along = W if side in ("N", "S") else L
    pos = min(along - 1, int(math.floor(round(ent["offset_m"] / cell, 9))))
    entrance = {"S": (pos, 0), "N": (pos, L - 1), "W": (0, pos), "E": (W - 1, pos)}[side]

    env_corner = {r["room"]: r["corner"] for r in env["room_recommendations"]}
    room_id: dict[str, int] = {}
    rooms = []
    for n, r in enumerate(rooms_ans["rooms"], 1):
        if r["name"] in room_id:
            diags.append(_StageDiagnostic("ReferenceError", f"room name {r['name']!r} is used twice",
                                          stage="room_analysis"))
        room_id.setdefault(r["name"], n)
        corner = r["corner"] if r["corner"] is not None else env_corner.get(r["name"])
        rooms.append({
            "id": n, "name": r["name"],
            "target_area_cells": max(1, _round_half_up(r["area_m2"] / (cell * cell))),
            "open": r["open"], "corner_pref": corner, "furniture": [],
        })

    def rid(name, stage):
        if name not in room_id:
            diags.append(_StageDiagnostic("ReferenceError", f"unknown room {name!r}", stage=stage))
            return None
        return room_id[name]

    adjacency = []
    for a, b in rooms_ans["adjacencies"]:
        ka, kb = rid(a, "room_analysis"), rid(b, "room_analysis")
        if ka is not None and kb is not None:
            adjacency.append([ka, kb])
    privacy = [k for k in (rid(n, "room_analysis") for n in rooms_ans["privacy_order"]) if k is not None]

    furn_id: dict[tuple[int, str], int] = {}
    for x in furn_ans["furniture"]:
        k = rid(x["room"], "furniture_analysis")
        if k is None:
            continue
        items = rooms[k - 1]["furniture"]
        items.append({
            "id": len(items) + 1, "name": x["name"],
            "width_cells": round_dimensions(x["width_m"], cell),
            "length_cells": round_dimensions(x["length_m"], cell),
            "against_wall": x["against_wall"],
        })
        furn_id.setdefault((k, x["name"]), len(items))

    align, face, offsets = [], [], []
    for rel in furn_ans["relations"]:
        k = rid(rel["room"], "furniture_analysis")
        if k is None:
            continue
        ids = []
        for nm in (rel["a"], rel["b"]):
            if (k, nm) not in furn_id:
                diags.append(_StageDiagnostic("ReferenceError", f"unknown furniture {nm!r} in room {rel['room']!r}",
                                              stage="furniture_analysis"))
            ids.append(furn_id.get((k, nm)))
        if None in ids:
            continue
        if rel["type"] == "align":
            align.append([k, *ids])
        elif rel["type"] == "face":
            face.append([k, *ids])
        else:
            dx = _round_half_up(rel.get("dx_m", 0.0) / cell)
            dy = _round_half_up(rel.get("dy_m", 0.0) / cell)
            offsets.append([k, ids[0], ids[1], dx, dy])

    metadata = {
        "source": "llm_agents",
        "brief": brief.strip(),
        "floor_height_m": basic["floor_height_m"],
        "lifestyle": basic["lifestyle"],
        "household": basic["household"],
        "climate": env["climate"],
        "orientation_notes": env["orientation_notes"],
        "entrance_reason": ent["reason"],
        "outdoor_regions": [r["name"] for r in outdoor["regions"]],
        "room_attributes": {
            r["name"]: {"activities": r["activities"], "quietness": r["quietness"], "natural_light": r["natural_light"]}
            for r in rooms_ans["rooms"]
        },
    }
    doc = {
        "schema_version": 1,
        "floor": {
            "width_cells": W, "length_cells": L, "cell_size_m": cell,
            "outdoor_cells": [list(c) for c in sorted(out_cells)], "entrance": list(entrance),
        },
        "rooms": rooms,
        "constraints": {
            "adjacency_pairs": adjacency, "privacy_order": privacy,
            "alignment_pairs": align, "facing_pairs": face, "relative_offsets": offsets,
        },
        "metadata": metadata,
    }
    sg = from_dict(doc)
    return sg, diags + validate_scene_graph(sg)
