"""Independent combinatorial checks of a decoded layout.

Nothing here touches the MILP: every constraint family is re-verified
from the scene graph and the layout alone, so an encoder bug cannot hide
behind its own model.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .grid import DIRECTIONS, Cell, Grid, manhattan
from .layout import CORRIDOR, ORIENTATIONS, Layout
from .scene_graph import SceneGraph, corner_cell


@dataclass
class Check:
    name: str
    passed: bool
    cells: list = field(default_factory=list)
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "checks": {c.name: c.passed for c in self.checks},
            "failures": [
                {"check": c.name, "detail": c.detail, "cells": [list(x) for x in c.cells]} for c in self.failures
            ],
            "warnings": list(self.warnings),
        }


def q_cells(layout: Layout) -> set:
    fcells = layout.furniture_cells()
    return {c for c in layout.labels if layout.is_q_cell(c, fcells)}


def reachable(grid: Grid, start: Cell, allowed: set) -> set:
    """Cells of ``allowed`` reachable from ``start`` through 4-neighbours."""
    if start not in allowed:
        return set()
    seen = {start}
    todo = deque([start])
    while todo:
        c = todo.popleft()
        for d in DIRECTIONS:
            n = d.step(c)
            if n in allowed and n not in seen:
                seen.add(n)
                todo.append(n)
    return seen


def connectivity_ok(grid: Grid, qset: set) -> tuple[bool, list]:
    """All traversable cells reachable from the entrance (vacuous when none)."""
    if not qset:
        return True, []
    seen = reachable(grid, grid.entrance, qset)
    missing = sorted(qset - seen, key=lambda c: (c[1], c[0]))
    return not missing, missing


def check_layout(sg: SceneGraph, grid: Grid, layout: Layout) -> ValidationReport:
    checks = []
    N = sg.N
    labels = layout.labels

    # label totality
    bad = [c for c in grid.indoor if labels.get(c) not in range(0, N + 1)]
    bad += [c for c in labels if c not in grid.indoor]
    checks.append(Check("labels", not bad, _sorted(bad), "cells without a valid label"))

    # furniture containment, disjointness, exact shape
    outside, overlap, shape_bad, missing = [], [], [], []
    owner: dict = {}
    for r in sg.rooms:
        for fs in r.furniture:
            box = layout.furniture.get((r.id, fs.id))
            if box is None:
                missing.append((r.id, fs.id))
                continue
            for c in box.cells():
                if labels.get(c) != r.id:
                    outside.append(c)
                if c in owner:
                    overlap.append(c)
                owner[c] = (r.id, fs.id)
            expect = (fs.width_cells, fs.length_cells) if box.sigma == 0 else (fs.length_cells, fs.width_cells)
            if tuple(box.orientation) not in ORIENTATIONS or tuple(box.dims) != expect:
                shape_bad.extend(box.cells() or [box.origin])
    checks.append(Check(
        "furniture_in_room", not outside and not missing, _sorted(outside),
        f"missing furniture {missing}" if missing else "furniture cells outside their room",
    ))
    checks.append(Check("furniture_disjoint", not overlap, _sorted(overlap), "cells covered twice"))
    checks.append(Check("furniture_shape", not shape_bad, _sorted(shape_bad), "box does not match footprint"))

    # corridor connectivity
    qset = {c for c in grid.indoor if _is_q(sg, labels, owner, c)}
    ok, unreachable = connectivity_ok(grid, qset)
    checks.append(Check("connectivity", ok, unreachable, "traversable cells unreachable from the entrance"))

    # room accessibility
    blocked, inaccessible = [], []
    for r in sg.rooms:
        if r.open:
            continue
        cand = [c for c in labels if labels[c] == r.id and any(d.step(c) in qset for d in DIRECTIONS)]
        free = [c for c in cand if c not in owner]
        if not free:
            inaccessible.append(r.id)
            blocked.extend(cand)
    checks.append(Check(
        "accessibility", not inaccessible, _sorted(blocked),
        f"rooms without a free cell next to a traversable cell: {inaccessible}" if inaccessible else "",
    ))

    # required adjacency
    apart = []
    for k, m in sg.constraints.adjacency_pairs:
        if not any(labels.get(d.step(c)) == m for c in labels if labels[c] == k for d in DIRECTIONS):
            apart.append((k, m))
    checks.append(Check("adjacency", not apart, [], f"room pairs not sharing an edge: {apart}" if apart else ""))

    # corners
    corner_bad = []
    for r in sg.rooms:
        if r.corner_pref is not None:
            c = corner_cell(r.corner_pref, grid.W, grid.L)
            if labels.get(c) != r.id:
                corner_bad.append(c)
    checks.append(Check("corner", not corner_bad, corner_bad, "corner cells not owned by their room"))

    # against wall: a witness cell touching non-room space, and every front cell in the room
    wall_bad = []
    for r in sg.rooms:
        for fs in r.furniture:
            box = layout.furniture.get((r.id, fs.id))
            if not fs.against_wall or box is None:
                continue
            cells = box.cells()
            touches = any(labels.get(d.step(c)) != r.id for c in cells for d in DIRECTIONS)
            nu = box.orientation
            fronts = [(c[0] + nu[0], c[1] + nu[1]) for c in cells]
            facing_out = [c for c, fr in zip(cells, fronts) if labels.get(fr) != r.id]
            if not touches:
                wall_bad.extend(cells)
            wall_bad.extend(facing_out)
    checks.append(Check("against_wall", not wall_bad, _sorted(set(wall_bad)), "against-wall furniture misplaced"))

    # alignment and facing
    align_bad = []
    for k, l1, l2 in sg.constraints.alignment_pairs:
        b1, b2 = layout.furniture.get((k, l1)), layout.furniture.get((k, l2))
        if b1 is None or b2 is None or b1.sigma != b2.sigma:
            align_bad.append((k, l1, l2))
    checks.append(Check("alignment", not align_bad, [], f"unaligned pairs {align_bad}" if align_bad else ""))
    face_bad = []
    for k, l1, l2 in sg.constraints.facing_pairs:
        b1, b2 = layout.furniture.get((k, l1)), layout.furniture.get((k, l2))
        if b1 is None or b2 is None:
            face_bad.append((k, l1, l2))
            continue
        nu = b1.orientation
        dot = nu[0] * (b2.origin[0] - b1.origin[0]) + nu[1] * (b2.origin[1] - b1.origin[1])
        if dot < 0:
            face_bad.append((k, l1, l2))
    checks.append(Check("facing", not face_bad, [], f"pairs not facing {face_bad}" if face_bad else ""))

    warnings = [f"room {r.id} ({r.name}) received no cells" for r in sg.rooms if r.id not in set(labels.values())]
    return ValidationReport(checks, warnings)


def _is_q(sg: SceneGraph, labels: dict, owner: dict, c: Cell) -> bool:
    lab = labels.get(c)
    if lab == CORRIDOR:
        return True
    return lab in sg.open_room_ids and c not in owner


def _sorted(cells) -> list:
    return sorted(set(cells), key=lambda c: (c[1], c[0]))


# ---------------------------------------------------------------------------
# objective re-evaluation


def recompute_objective(sg: SceneGraph, grid: Grid, layout: Layout, hint=None) -> dict[str, float]:
    """Evaluate every objective term in closed form from the layout.

    The room bounding boxes are not part of a layout; they are chosen here
    the way an optimal solver would, by minimising the weighted
    rectangularity, aspect and balance contributions over all boxes that
    contain the room.
    """
    w = sg.weights
    labels = layout.labels
    terms = dict.fromkeys(("E_rect", "E_perim", "E_area", "E_aspect", "E_rel", "E_bal", "E_priv"), 0.0)

    for r in sg.rooms:
        k = r.id
        cells = [c for c in labels if labels[c] == k]
        n = len(cells)
        terms["E_area"] += abs(r.target_area_cells - n)
        cs = set(cells)
        terms["E_perim"] += sum(1 for c in cells for d in DIRECTIONS if d.step(c) not in cs)

        boxes = [layout.furniture[(k, f.id)] for f in r.furniture if (k, f.id) in layout.furniture]
        total = sum(b.area for b in boxes)
        sums = (
            sum(b.area * b.doubled_centroid()[0] for b in boxes),
            sum(b.area * b.doubled_centroid()[1] for b in boxes),
        )

        def best_offset(axis, length, lo_cell, hi_cell, extent):
            # min over box origins of the balance term along one axis
            if lo_cell is None:
                lo, hi = 0, extent - length
            else:
                lo, hi = max(0, hi_cell - length + 1), min(lo_cell, extent - length)
            if lo > hi:
                return None
            if not boxes:
                return 0.0
            return min(abs(sums[axis] - total * (2 * g + length - 1)) for g in range(lo, hi + 1)) / (2 * total)

        if cells:
            mn = (min(c[0] for c in cells), min(c[1] for c in cells))
            mx = (max(c[0] for c in cells), max(c[1] for c in cells))
        else:
            mn = mx = (None, None)
        best = None
        for li in range(1, grid.W + 1):
            bi = best_offset(0, li, mn[0], mx[0], grid.W)
            if bi is None:
                continue
            for lj in range(1, grid.L + 1):
                bj = best_offset(1, lj, mn[1], mx[1], grid.L)
                if bj is None:
                    continue
                rect, asp, bal = li * lj - n, abs(li - lj), bi + bj
                cost = w.w_rect * rect + w.w_aspect * asp + w.w_bal * bal
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, rect, asp, bal)
        terms["E_rect"] += best[1]
        terms["E_aspect"] += best[2]
        terms["E_bal"] += best[3]

    for k, l1, l2, di, dj in sg.constraints.relative_offsets:
        b1, b2 = layout.furniture.get((k, l1)), layout.furniture.get((k, l2))
        if b1 is None or b2 is None:
            continue
        c1, c2 = b1.doubled_centroid(), b2.doubled_centroid()
        terms["E_rel"] += (abs(c1[0] - c2[0] - 2 * di) + abs(c1[1] - c2[1] - 2 * dj)) / 2

    order = sg.constraints.privacy_order
    if len(order) >= 2:
        dist = {}
        for k in order:
            area = sg.room(k).target_area_cells
            dist[k] = sum(manhattan(c, grid.entrance) for c in labels if labels[c] == k) / area
        terms["E_priv"] = sum(max(0.0, dist[b] - dist[a]) for a, b in zip(order, order[1:]))

    weights = {
        "E_rect": w.w_rect, "E_perim": w.w_perim, "E_area": w.w_area, "E_aspect": w.w_aspect,
        "E_rel": w.w_rel, "E_bal": w.w_bal, "E_priv": w.w_priv,
    }
    if hint is not None:
        terms["E_ref"] = float(sum(1 for c, on in hint.z.items() if on and c in grid.indoor
                                   and labels.get(c) != hint.pi[c]))
        weights["E_ref"] = w.w_ref
    terms["total"] = sum(weights[k] * v for k, v in terms.items())
    return terms
