from __future__ import annotations

import copy
import itertools

import pytest

from gridplan.errors import BuildError
from gridplan.ip_builder import (
    CoarseHint, binary_counts, build_model, decode_layout, placements, pname, polish_solution, xname,
)
from gridplan.layout import ORIENTATIONS, FurnitureBox, Layout
from gridplan.model import EQ
from gridplan.solver import INFEASIBLE, OPTIMAL, SolveParams, solve
from gridplan.validator import check_layout, recompute_objective

from conftest import make_scene, room


def brute_force_optimum(sg):
    """Minimum recomputed objective over every labelling and furniture placement that validates."""
    g = sg.grid()
    cells = g.indoor_cells()
    items = [(r.id, f) for r in sg.rooms for f in r.furniture]
    boxes_per_item = []
    for k, f in items:
        opts = []
        for nu in ORIENTATIONS:
            dims = (f.length_cells, f.width_cells) if nu[0] else (f.width_cells, f.length_cells)
            for o in itertools.product(range(g.W), range(g.L)):
                opts.append(FurnitureBox(k, f.id, o, dims, nu))
        boxes_per_item.append(opts)
    best = None
    for labs in itertools.product(range(sg.N + 1), repeat=len(cells)):
        labels = dict(zip(cells, labs))
        if not check_layout(sg, g, Layout(sg, labels)).ok and not items:
            continue
        for combo in itertools.product(*boxes_per_item):
            lay = Layout(sg, labels, {(b.room, b.id): b for b in combo})
            if not check_layout(sg, g, lay).ok:
                continue
            t = recompute_objective(sg, g, lay)["total"]
            if best is None or t < best - 1e-9:
                best = t
    return best


# objective optima frozen from brute_force_optimum (recomputed in the slow test below)
ORACLE_CASES = [
    (dict(W=3, L=3, entrance=(1, 0), rooms=[room(1, 6)]), 3.0),
    (dict(W=3, L=2, entrance=(0, 0), rooms=[room(1, 2), room(2, 2, open_=True)]), 4.0),
    (dict(W=3, L=3, entrance=(0, 1), rooms=[room(1, 3, corner="NE"), room(2, 2)],
          constraints={"privacy_order": [1, 2]}), 5.0),
    (dict(W=4, L=2, entrance=(0, 0), rooms=[room(1, 3), room(2, 3)],
          constraints={"adjacency_pairs": [[1, 2]]}), 6.0),
    (dict(W=3, L=2, entrance=(0, 0), rooms=[room(1, 3, furniture=[(1, 2, True)])]), None),
]


@pytest.mark.parametrize("kw,expected", ORACLE_CASES)
def test_builtin_matches_enumeration(kw, expected):
    sg = make_scene(**kw)
    oracle = brute_force_optimum(sg)
    if expected is not None:
        assert oracle == pytest.approx(expected)
    sol = solve(build_model(sg), SolveParams(time_limit_s=120), backend="builtin")
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(oracle, abs=1e-6)


def test_variable_families(toy_scene):
    m = build_model(toy_scene)
    counts = binary_counts(m)
    n = toy_scene.grid().n_indoor
    assert counts["x"] == n and counts["p"] == n and counts["f"] == n
    assert counts["sigma"] == 1 and counts["mu"] == 1
    assert m.metadata["phase"] == "direct"
    flows = [v for v in m.variables if v.name.startswith("flow_")]
    # one arc per ordered pair of indoor neighbours
    assert len(flows) == 2 * (2 * 3 * 2)


def test_coarse_phase_drops_furniture(toy_scene):
    m = build_model(toy_scene, phase="coarse")
    names = {v.name for v in m.variables}
    assert not any(n.startswith(("f_", "sigma_", "mu_", "place_", "phi_")) for n in names)
    assert "E_bal" not in m.objective and "E_rel" not in m.objective


def test_fine_hint_adds_reference_term(toy_scene):
    hint = CoarseHint(pi={(0, 0): 1}, z={(0, 0): True, (1, 0): False}, s_i=2, s_j=2, warm_start={(0, 0): 1})
    m = build_model(toy_scene, phase="fine", coarse_hint=hint)
    assert "E_ref" in m.objective
    assert m.warm_start[xname(1, (0, 0))] == 1
    with pytest.raises(BuildError):
        build_model(toy_scene, phase="direct", coarse_hint=hint)
    with pytest.raises(BuildError):
        build_model(toy_scene, phase="medium")


def test_placements_stay_indoor():
    sg = make_scene(W=3, L=3, outdoor=[(2, 2)], rooms=[room(1, 4, furniture=[(1, 2, False)])])
    fs = sg.rooms[0].furniture[0]
    pl = placements(fs, sg.grid())
    for sigma, (i, j) in pl:
        dims = (2, 1) if sigma else (1, 2)
        assert all((i + a, j + b) in sg.grid().indoor for a in range(dims[0]) for b in range(dims[1]))
    # 3x3 minus one corner: 5 vertical + 5 horizontal positions
    assert len(pl) == 10


def test_decode_and_polish_round_trip(toy_scene):
    m = build_model(toy_scene)
    sol = solve(m, SolveParams(time_limit_s=60), backend="builtin")
    vals = polish_solution(m, toy_scene, toy_scene.grid(), sol.values)
    assert m.violations(vals) == []
    assert m.evaluate(vals) <= sol.objective + 1e-9
    lay = decode_layout(m, toy_scene, vals)
    assert check_layout(toy_scene, toy_scene.grid(), lay).ok
    assert recompute_objective(toy_scene, toy_scene.grid(), lay)["total"] == pytest.approx(m.evaluate(vals))


def _fixed(model, sg, labels):
    """Copy of ``model`` with every room/corridor variable pinned to ``labels``."""
    m = copy.deepcopy(model)
    for c, lab in labels.items():
        for k in range(1, sg.N + 1):
            m.add_constr(m.var(xname(k, c)), EQ, 1 if lab == k else 0, "fix")
        m.add_constr(m.var(pname(c)), EQ, 1 if lab == 0 else 0, "fix")
    return m


def _grid_labels(rows):
    """Labels from rows written north first."""
    return {(i, j): v for j, r in enumerate(reversed(rows)) for i, v in enumerate(r)}


MUTANTS = [
    # corridor column cut off from the entrance by a room
    ("flowbal", "connectivity", [room(1, 3)], {}, [[0, 1, 0], [0, 1, 0], [0, 1, 0]]),
    # room 2 walled in by room 1
    ("access", "accessibility", [room(1, 3), room(2, 1)], {}, [[0, 1, 2], [0, 1, 1], [0, 0, 0]]),
    # required neighbours that do not touch
    ("adjacency", "adjacency", [room(1, 2), room(2, 2)], {"adjacency_pairs": [[1, 2]]},
     [[1, 0, 2], [1, 0, 2], [0, 0, 0]]),
    # corner preference ignored
    ("corner", "corner", [room(1, 2, corner="NE")], {}, [[1, 0, 0], [1, 0, 0], [0, 0, 0]]),
]


@pytest.mark.parametrize("family,check,rooms,cons,rows", MUTANTS, ids=[m[0] for m in MUTANTS])
def test_mutation_is_caught_by_validator(family, check, rooms, cons, rows):
    """Dropping one constraint family admits a labelling that the validator rejects."""
    sg = make_scene(W=3, L=3, entrance=(0, 0), rooms=rooms, constraints=cons)
    labels = _grid_labels(rows)
    rep = check_layout(sg, sg.grid(), Layout(sg, labels))
    assert not rep.check(check).passed
    params = SolveParams(time_limit_s=60)
    intact = solve(_fixed(build_model(sg), sg, labels), params, backend="builtin")
    assert intact.status == INFEASIBLE
    mutant = build_model(sg)
    mutant.constraints = [c for c in mutant.constraints if c.family != family]
    assert solve(_fixed(mutant, sg, labels), params, backend="builtin").has_solution
