from __future__ import annotations

from pathlib import Path

import pytest

from gridplan.scene_graph import from_dict

FIXTURES = Path(__file__).parent / "fixtures"
SCENES = FIXTURES / "scenes"
SCENE_FILES = sorted(SCENES.glob("*.json"))


def scene_doc(W=3, L=3, entrance=(0, 0), rooms=None, outdoor=(), constraints=None, weights=None) -> dict:
    doc = {
        "schema_version": 1,
        "floor": {
            "width_cells": W, "length_cells": L, "cell_size_m": 0.6,
            "outdoor_cells": [list(c) for c in outdoor], "entrance": list(entrance),
        },
        "rooms": rooms if rooms is not None else [
            {"id": 1, "name": "room", "target_area_cells": 4, "open": False, "furniture": []},
        ],
        "constraints": {
            "adjacency_pairs": [], "privacy_order": [], "alignment_pairs": [],
            "facing_pairs": [], "relative_offsets": [],
            **(constraints or {}),
        },
    }
    if weights is not None:
        doc["weights"] = weights
    return doc


def make_scene(**kw):
    return from_dict(scene_doc(**kw))


def room(k, area, open_=False, corner=None, furniture=()):
    return {
        "id": k, "name": f"room{k}", "target_area_cells": area, "open": open_, "corner_pref": corner,
        "furniture": [
            {"id": n, "name": f"item{n}", "width_cells": w, "length_cells": l, "against_wall": aw}
            for n, (w, l, aw) in enumerate(furniture, 1)
        ],
    }


@pytest.fixture
def toy_scene():
    """3x3 floor, one closed room of 4 cells with a 1x2 item against a wall."""
    return make_scene(W=3, L=3, entrance=(1, 0), rooms=[room(1, 4, furniture=[(1, 2, True)])])


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE: dict = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
