from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from gridplan.errors import NoCandidate
from gridplan.grid import Direction
from gridplan.layout import FurnitureBox, Layout, load_layout
from gridplan.postprocess import (
    EXTERIOR, INTERIOR, Edge, FloorplanArtifacts, entrance_edge, generate_walls, place_doors, place_windows,
    postprocess,
)
from gridplan.validator import q_cells

from conftest import FIXTURES, make_scene, room
from test_validator import grid_labels

HANDCRAFTED = sorted((FIXTURES / "handcrafted").glob("*.json"))


def two_room_layout():
    # closed room 1 touches open room 2 and the corridor; room 3 only the corridor
    sg = make_scene(W=4, L=3, entrance=(3, 0), rooms=[room(1, 2), room(2, 4, open_=True), room(3, 2)])
    return Layout(sg, grid_labels(["1122", "..22", "33.."]))


def test_walls_toy(toy_scene):
    lay = Layout(toy_scene, grid_labels(["11.", "1..", "1.."]), {(1, 1): FurnitureBox(1, 1, (0, 0), (1, 2), (0, 1))})
    walls = generate_walls(lay, toy_scene.grid())
    ext = [w for w in walls if w.kind == EXTERIOR]
    inter = [w for w in walls if w.kind == INTERIOR]
    assert len(ext) == 12
    # room 1 meets the corridor along (0,0)E, (0,1)E, (1,2)E and (1,1)N
    assert sorted((w.edge.cell, w.edge.direction.name) for w in inter) == [
        ((0, 0), "E"), ((0, 1), "E"), ((1, 1), "N"), ((1, 2), "E")]
    assert all(w.sides[1] == -1 for w in ext)


def test_no_walls_between_open_room_and_corridor():
    lay = two_room_layout()
    walls = generate_walls(lay, lay.grid)
    for w in walls:
        if w.kind == INTERIOR:
            assert 1 in w.sides or 3 in w.sides


def test_doors_prefer_open_rooms():
    lay = two_room_layout()
    for seed in range(20):
        doors = place_doors(lay, generate_walls(lay, lay.grid), seed)
        by_room = {d.room: d for d in doors if d.kind == "room"}
        assert set(by_room) == {1, 3}
        e1 = by_room[1].edge
        assert {lay.labels[e1.cell], lay.labels[e1.far()]} == {1, 2}
        e3 = by_room[3].edge
        assert {lay.labels[e3.cell], lay.labels[e3.far()]} == {3, 0}


def test_entrance_edge_tie_break():
    sg = make_scene(W=3, L=3, entrance=(0, 0), rooms=[room(1, 1)])
    assert entrance_edge(sg.grid()) == Edge((0, 0), Direction.S)
    sg = make_scene(W=3, L=3, entrance=(2, 1), rooms=[room(1, 1)])
    assert entrance_edge(sg.grid()) == Edge((2, 1), Direction.E)


def test_no_candidate():
    sg = make_scene(W=3, L=1, entrance=(2, 0), rooms=[room(1, 2, furniture=[(1, 2, False)])])
    lay = Layout(sg, grid_labels(["11."]), {(1, 1): FurnitureBox(1, 1, (0, 0), (2, 1), (1, 0))})
    with pytest.raises(NoCandidate):
        place_doors(lay, generate_walls(lay, lay.grid))


@pytest.mark.parametrize("path", HANDCRAFTED, ids=lambda p: p.stem)
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1))
def test_artifact_invariants(path, seed):
    lay = load_layout(path)
    art = postprocess(lay, seed)
    fcells = lay.furniture_cells()
    q = q_cells(lay)
    doors = [d for d in art.doors if d.kind == "room"]
    closed = [r.id for r in lay.scene.rooms if not r.open]
    assert sorted(d.room for d in doors) == sorted(closed)
    for d in doors:
        a, b = d.edge.cell, d.edge.far()
        inner, outer = (a, b) if lay.labels.get(a) == d.room else (b, a)
        assert lay.labels[inner] == d.room and inner not in fcells and outer in q
    assert [d.edge for d in art.doors if d.kind == "entrance"] == [entrance_edge(lay.grid)]
    wall_edges = {w.edge for w in art.walls if w.kind == EXTERIOR}
    per_space: dict = {}
    for w in art.windows:
        assert w.edge in wall_edges and w.edge != entrance_edge(lay.grid) and w.edge.cell not in fcells
        per_space[w.space] = per_space.get(w.space, 0) + 1
    assert all(n <= 2 for n in per_space.values())
    assert postprocess(lay, seed).to_dict() == art.to_dict()
    assert FloorplanArtifacts.from_dict(art.to_dict()) == art


def test_windows_count_and_seed():
    lay = load_layout(HANDCRAFTED[0])
    walls = generate_walls(lay, lay.grid)
    assert place_windows(lay, walls, 0, 0) == []
    picks = {tuple(w.edge for w in place_windows(lay, walls, s, 1)) for s in range(30)}
    assert len(picks) > 1
