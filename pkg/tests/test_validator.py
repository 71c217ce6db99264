from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from gridplan.grid import Grid
from gridplan.layout import FurnitureBox, Layout, layout_from_dict, layout_to_dict, load_layout
from gridplan.validator import check_layout, connectivity_ok, q_cells, reachable, recompute_objective

from conftest import FIXTURES, make_scene, room
from oracles.objective_oracle import evaluate

HANDCRAFTED = FIXTURES / "handcrafted"

# hand-derived term values, confirmed by the brute-force oracle
EXPECTED_TERMS = {
    "l_shaped_room": {"E_rect": 4, "E_perim": 12, "E_area": 0, "E_aspect": 0, "E_rel": 0, "E_bal": 0, "E_priv": 0,
                      "total": 7.0},
    "off_center_furniture": {"E_rect": 0, "E_perim": 10, "E_area": 0, "E_aspect": 1, "E_rel": 2, "E_bal": 1,
                             "E_priv": 0, "total": 5.25},
    "violated_privacy": {"E_rect": 0, "E_perim": 12, "E_area": 1, "E_aspect": 2, "E_rel": 0, "E_bal": 0,
                         "E_priv": 3.5, "total": 9.5},
}


def grid_labels(rows: list[str]) -> dict:
    """Rows north to south; '.' corridor, digits room ids, '#' outdoor."""
    out = {}
    for n, row in enumerate(rows):
        j = len(rows) - 1 - n
        for i, ch in enumerate(row):
            if ch != "#":
                out[(i, j)] = 0 if ch == "." else int(ch)
    return out


def box(k, l, origin, dims, nu=(0, 1)):
    return FurnitureBox(k, l, origin, dims, nu)


@pytest.mark.parametrize("name", sorted(EXPECTED_TERMS))
def test_handcrafted_terms(name):
    path = HANDCRAFTED / f"{name}.json"
    lay = load_layout(path)
    sg = lay.scene
    assert check_layout(sg, sg.grid(), lay).ok
    got = recompute_objective(sg, sg.grid(), lay)
    oracle = evaluate(json.loads(path.read_text()))
    for term, want in EXPECTED_TERMS[name].items():
        assert got[term] == pytest.approx(want, abs=1e-9), term
        assert oracle[term] == pytest.approx(want, abs=1e-9), term


def test_toy_layout_passes(toy_scene):
    labels = grid_labels(["11.", "1..", "1.."])
    lay = Layout(toy_scene, labels, {(1, 1): box(1, 1, (0, 0), (1, 2), (0, 1))})
    rep = check_layout(toy_scene, toy_scene.grid(), lay)
    assert rep.ok, rep.summary()


def test_disconnected_corridor():
    sg = make_scene(W=3, L=3, entrance=(0, 0), rooms=[room(1, 3)])
    lay = Layout(sg, grid_labels(["...", "111", "..."]))
    rep = check_layout(sg, sg.grid(), lay)
    assert not rep.check("connectivity").passed
    assert rep.check("connectivity").cells == [(0, 2), (1, 2), (2, 2)]


def test_furniture_blocks_access():
    sg = make_scene(W=3, L=2, entrance=(0, 0), rooms=[room(1, 2, furniture=[(1, 2, False)])])
    labels = grid_labels([".11", "..."])
    blocked = Layout(sg, labels, {(1, 1): box(1, 1, (1, 1), (2, 1), (1, 0))})
    assert not check_layout(sg, sg.grid(), blocked).check("accessibility").passed
    sg2 = make_scene(W=3, L=2, entrance=(0, 0), rooms=[room(1, 2, furniture=[(1, 1, False)])])
    free = Layout(sg2, labels, {(1, 1): box(1, 1, (2, 1), (1, 1))})
    assert check_layout(sg2, sg2.grid(), free).ok


def test_open_room_furniture_is_not_traversable():
    sg = make_scene(W=3, L=1, entrance=(0, 0), rooms=[room(1, 2, open_=True, furniture=[(1, 1, False)])])
    lay = Layout(sg, grid_labels(["011"]), {(1, 1): box(1, 1, (1, 0), (1, 1))})
    assert q_cells(lay) == {(0, 0), (2, 0)}
    assert not check_layout(sg, sg.grid(), lay).check("connectivity").passed


def test_constraint_failures():
    rooms = [room(1, 2, corner="NE", furniture=[(1, 1, True), (1, 1, False)]), room(2, 2)]
    sg = make_scene(W=4, L=3, entrance=(3, 0), rooms=rooms, constraints={
        "adjacency_pairs": [[1, 2]], "alignment_pairs": [[1, 1, 2]], "facing_pairs": [[1, 1, 2]],
    })
    labels = grid_labels(["111.", "....", "22.."])
    furn = {
        (1, 1): box(1, 1, (2, 2), (1, 1), (1, 0)),  # front cell is outside the room
        (1, 2): box(1, 2, (0, 2), (1, 1), (0, 1)),  # other axis, and behind item 1
    }
    rep = check_layout(sg, sg.grid(), Layout(sg, labels, furn))
    failed = {c.name for c in rep.failures}
    assert failed == {"adjacency", "corner", "against_wall", "alignment", "facing"}


def test_furniture_shape_and_overlap():
    sg = make_scene(W=2, L=2, entrance=(0, 0), rooms=[room(1, 2, open_=True, furniture=[(2, 1, False), (1, 1, False)])])
    labels = grid_labels(["11", ".."])
    furn = {(1, 1): box(1, 1, (0, 1), (1, 2)), (1, 2): box(1, 2, (0, 1), (1, 1))}
    failed = {c.name for c in check_layout(sg, sg.grid(), Layout(sg, labels, furn)).failures}
    assert {"furniture_shape", "furniture_disjoint", "furniture_in_room"} <= failed


def test_bad_labels():
    sg = make_scene(W=2, L=1, entrance=(0, 0), rooms=[room(1, 1)])
    rep = check_layout(sg, sg.grid(), Layout(sg, {(0, 0): 0, (1, 0): 7}))
    assert rep.check("labels").cells == [(1, 0)]


def _flood(cells: set, start) -> set:
    # union of a repeatedly grown frontier; independent of the validator's queue
    seen = {start} if start in cells else set()
    while True:
        grow = {(i + di, j + dj) for (i, j) in seen for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))} & cells
        if grow <= seen:
            return seen
        seen |= grow


@given(st.lists(st.booleans(), min_size=16, max_size=16), st.integers(0, 15))
def test_reachable_matches_flood_fill(bits, s):
    cells = {(n % 4, n // 4) for n, b in enumerate(bits) if b}
    start = (s % 4, s // 4)
    g = Grid.full(4, 4, start)
    assert reachable(g, start, cells) == _flood(cells, start)
    ok, missing = connectivity_ok(g, cells)
    assert ok == (not cells or _flood(cells, start) == cells)
    assert set(missing) == cells - _flood(cells, start)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=9, max_size=9),
       st.tuples(st.integers(0, 2), st.integers(0, 2)), st.tuples(st.integers(0, 2), st.integers(0, 2)))
def test_recompute_matches_oracle(labels, o1, o2):
    sg = make_scene(W=3, L=3, entrance=(1, 0),
                    rooms=[room(1, 3, furniture=[(1, 1, False)]), room(2, 2, furniture=[(1, 1, False)])],
                    constraints={"privacy_order": [2, 1], "relative_offsets": [[1, 1, 1, 1, 0]]})
    lab = {(n % 3, n // 3): v for n, v in enumerate(labels)}
    # park each item on a cell of its own room when the room has any
    furn = {}
    for k, o in ((1, o1), (2, o2)):
        mine = sorted(c for c, v in lab.items() if v == k)
        if mine:
            furn[(k, 1)] = box(k, 1, mine[(o[0] * 3 + o[1]) % len(mine)], (1, 1))
    if len(furn) < 2:
        return
    lay = Layout(sg, lab, furn)
    got = recompute_objective(sg, sg.grid(), lay)
    want = evaluate(layout_to_dict(lay))
    for term in ("E_perim", "E_area", "E_rel", "E_priv", "total"):
        assert got[term] == pytest.approx(want[term], abs=1e-9), term


def test_layout_round_trip_keeps_validation():
    lay = load_layout(HANDCRAFTED / "off_center_furniture.json")
    again = layout_from_dict(layout_to_dict(lay))
    assert again.labels == lay.labels and again.furniture == lay.furniture
