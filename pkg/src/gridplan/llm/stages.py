"""Stage definitions: order, prompt file and JSON Schema of each agent's answer.

All lengths in stage answers are metres, areas square metres; conversion
to cells happens when the scene graph is assembled.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

CORNERS = ["NW", "NE", "SW", "SE"]
SIDES = ["N", "S", "E", "W"]

_pos = {"type": "number", "exclusiveMinimum": 0}
_corner = {"anyOf": [{"enum": CORNERS}, {"type": "null"}]}

BASIC_INFO = {
    "type": "object",
    "required": ["floor_width_m", "floor_length_m", "floor_height_m", "cell_size_m", "lifestyle", "household"],
    "properties": {
        "floor_width_m": _pos,
        "floor_length_m": _pos,
        "floor_height_m": _pos,
        "cell_size_m": _pos,
        "lifestyle": {"type": "string"},
        "household": {"type": "string"},
    },
    "additionalProperties": False,
}

ENVIRONMENT = {
    "type": "object",
    "required": ["climate", "orientation_notes", "room_recommendations"],
    "properties": {
        "climate": {"type": "string"},
        "orientation_notes": {
            "type": "object",
            "required": SIDES,
            "properties": {s: {"type": "string"} for s in SIDES},
            "additionalProperties": False,
        },
        "room_recommendations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["room", "corner", "reason"],
                "properties": {"room": {"type": "string"}, "corner": _corner, "reason": {"type": "string"}},
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

OUTDOOR_SPACE = {
    "type": "object",
    "required": ["regions"],
    "properties": {
        "regions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "x_m", "y_m", "width_m", "length_m"],
                "properties": {
                    "name": {"type": "string"},
                    "x_m": {"type": "number", "minimum": 0},
                    "y_m": {"type": "number", "minimum": 0},
                    "width_m": _pos,
                    "length_m": _pos,
                },
                "additionalProperties": False,
            },
        }
    },
    "additionalProperties": False,
}

ENTRANCE = {
    "type": "object",
    "required": ["side", "offset_m", "reason"],
    "properties": {
        "side": {"enum": SIDES},
        "offset_m": {"type": "number", "minimum": 0},
        "reason": {"type": "string"},
    },
    "additionalProperties": False,
}

ROOM_ANALYSIS = {
    "type": "object",
    "required": ["rooms", "adjacencies", "privacy_order"],
    "properties": {
        "rooms": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "area_m2", "open", "corner", "activities", "quietness", "natural_light"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "area_m2": _pos,
                    "open": {"type": "boolean"},
                    "corner": _corner,
                    "activities": {"type": "array", "items": {"type": "string"}},
                    "quietness": {"enum": ["low", "medium", "high"]},
                    "natural_light": {"enum": ["low", "medium", "high"]},
                },
                "additionalProperties": False,
            },
        },
        "adjacencies": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        },
        "privacy_order": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}

FURNITURE_ANALYSIS = {
    "type": "object",
    "required": ["furniture", "relations"],
    "properties": {
        "furniture": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["room", "name", "width_m", "length_m", "against_wall"],
                "properties": {
                    "room": {"type": "string"},
                    "name": {"type": "string", "minLength": 1},
                    "width_m": _pos,
                    "length_m": _pos,
                    "against_wall": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        },
        "relations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type", "room", "a", "b"],
                "properties": {
                    "type": {"enum": ["align", "face", "offset"]},
                    "room": {"type": "string"},
                    "a": {"type": "string"},
                    "b": {"type": "string"},
                    "dx_m": {"type": "number"},
                    "dy_m": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class AgentStage:
    name: str
    schema: dict

    @property
    def prompt_path(self) -> str:
        return f"prompts/{self.name}.md"

    def prompt_template(self) -> str:
        return resources.files("gridplan.llm").joinpath(self.prompt_path).read_text()


STAGES = (
    AgentStage("basic_info", BASIC_INFO),
    AgentStage("environment", ENVIRONMENT),
    AgentStage("outdoor_space", OUTDOOR_SPACE),
    AgentStage("entrance", ENTRANCE),
    AgentStage("room_analysis", ROOM_ANALYSIS),
    AgentStage("furniture_analysis", FURNITURE_ANALYSIS),
)
STAGE_NAMES = tuple(s.name for s in STAGES)
