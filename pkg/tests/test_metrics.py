from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from gridplan.errors import MissingRoom, SchemaError
from gridplan.layout import load_layout
from gridplan.metrics import BoxScene, Rect, boxscene_from_dict, layout_to_boxscene, metrics_table, oob, oor

from conftest import FIXTURES


def scene(objects, rooms=(("r", (0, 0, 10, 10)),)):
    return BoxScene([Rect(l, *r) for l, r in rooms], [Rect(l, *r, room=rm) for l, rm, r in objects])


def test_oor_pairwise():
    s = scene([("a", "r", (0, 0, 2, 1)), ("b", "r", (1, 0, 3, 1))])
    assert oor(s) == pytest.approx(25.0)  # overlap 1 over total 4


def test_oor_counts_each_pair():
    unit = ("o", "r", (0, 0, 1, 1))
    assert oor(scene([unit] * 3)) == pytest.approx(100.0)
    assert oor(scene([unit] * 4)) == pytest.approx(150.0)


def test_oob_union_of_room_rects():
    rooms = (("r", (0, 0, 2, 2)), ("r", (2, 0, 4, 1)), ("s", (4, 0, 6, 2)))
    s = scene([("a", "r", (1, 0, 5, 2))], rooms)
    # 8 units of area: 2 inside each rect of room r, the rest outside it
    assert oob(s) == pytest.approx(100 * 4 / 8)


def test_empty_and_degenerate():
    assert metrics_table(scene([])) == {"OOR": 0.0, "OOB": 0.0}
    assert oor(scene([("a", "r", (1, 1, 1, 3))])) == 0.0


def test_errors():
    with pytest.raises(MissingRoom):
        oob(scene([("a", "nowhere", (0, 0, 1, 1))]))
    with pytest.raises(SchemaError):
        boxscene_from_dict({"rooms": []})
    with pytest.raises(SchemaError):
        boxscene_from_dict({"rooms": [{"label": "r", "rect": [0, 0, 1]}], "objects": []})
    with pytest.raises(SchemaError):
        Rect("x", 2, 0, 1, 1)
    with pytest.raises(SchemaError):
        boxscene_from_dict({"rooms": [{"label": "r", "rect": [0, 0, math.nan, 1]}], "objects": []})


rects = st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(1, 3), st.integers(1, 3)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3]))


def _cells(r):
    return {(x, y) for x in range(r[0], r[2]) for y in range(r[1], r[3])}


@given(st.lists(rects, min_size=1, max_size=5), st.lists(rects, min_size=1, max_size=3))
def test_against_unit_cell_count(objs, room_rects):
    s = scene([(f"o{n}", "r", r) for n, r in enumerate(objs)], [("r", r) for r in room_rects])
    total = sum(len(_cells(r)) for r in objs)
    inter = sum(len(_cells(a) & _cells(b)) for n, a in enumerate(objs) for b in objs[n + 1:])
    room_cells = set().union(*map(_cells, room_rects))
    out = sum(len(_cells(r) - room_cells) for r in objs)
    assert oor(s) == pytest.approx(100 * inter / total)
    assert oob(s) == pytest.approx(100 * out / total)


@pytest.mark.parametrize("path", sorted((FIXTURES / "handcrafted").glob("*.json")), ids=lambda p: p.stem)
def test_valid_layouts_score_zero(path):
    lay = load_layout(path)
    bs = layout_to_boxscene(lay)
    s = lay.scene.floor.cell_size_m
    for r in lay.scene.rooms:
        area = sum(x.area for x in bs.rooms if x.label.startswith(f"{r.id}:"))
        assert area == pytest.approx(len(lay.room_cells(r.id)) * s * s)
    assert metrics_table(bs) == {"OOR": 0.0, "OOB": 0.0}
    assert boxscene_from_dict(bs.to_dict()) == bs


def test_rounding_noise_is_not_reported():
    # rows of 0.6 m cells; the raw union difference leaves about 2e-14 of spill
    s = 0.6
    widths = [8, 8, 8, 5, 3]
    rooms = [Rect("r", 0, j * s, w * s, (j + 1) * s) for j, w in enumerate(widths)]
    bs = BoxScene(rooms, [Rect("o", 0, 2 * s, 2 * s, 5 * s, room="r")])
    assert metrics_table(bs) == {"OOR": 0.0, "OOB": 0.0}
