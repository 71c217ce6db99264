"""Compile a scene graph and grid into a MILP.

Every constraint family and objective term is emitted by its own
``encode_*`` function; :func:`build_model` runs them in order.  Variable
names follow a fixed scheme (see ``docs/variables.md``) so that LP files
and solution files can be mapped back to cells and furniture.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import BuildError, CornerOutdoor, GridplanError
from .grid import DIRECTIONS, Cell, Direction, Grid, adj, manhattan
from .layout import CORRIDOR, FurnitureBox, Layout, orientation_from_bits
from .model import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, LinExpr, MilpModel
from .scene_graph import SceneGraph, corner_cell, serialize

PHASES = ("coarse", "fine", "direct")
FLOW_FAMILIES = ("flowcap", "flowbal")

# (sigma, mu) cases in a fixed order
ORIENT_CASES = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass
class CoarseHint:
    """Room assignment mapped down from a coarse solution.

    ``pi`` maps fine cells to the coarse room id; it is defined exactly on
    the cells where ``z`` holds.
    """

    pi: dict
    z: dict
    s_i: int
    s_j: int
    warm_start: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s_i < 1 or self.s_j < 1:
            raise ValueError("down-sampling factors must be >= 1")
        for c, on in self.z.items():
            if on != (c in self.pi):
                raise ValueError(f"pi must be defined exactly where z holds (cell {c})")


# -- naming --------------------------------------------------------------


def xname(k, c):
    return f"x_{k}_{c[0]}_{c[1]}"


def pname(c):
    return f"p_{c[0]}_{c[1]}"


def fname(k, l, c):
    return f"f_{k}_{l}_{c[0]}_{c[1]}"


def flowname(c, d: Direction):
    return f"flow_{c[0]}_{c[1]}_{d.name}"


def _has_furniture(model: MilpModel) -> bool:
    return model.metadata.get("phase") != "coarse"


def _x(model, k, c):
    return model.var(xname(k, c))


def _f_sum(model, sg, k, c) -> LinExpr:
    if not _has_furniture(model):
        return LinExpr()
    return LinExpr.sum(model.var(fname(k, f.id, c)) for f in sg.room(k).furniture)


def q_expr(model: MilpModel, sg: SceneGraph, c: Cell) -> LinExpr:
    """Traversable indicator: corridor, or open-room cell free of furniture."""
    e = LinExpr.of(model.var(pname(c)))
    for k in sorted(sg.open_room_ids):
        e.iadd(_x(model, k, c))
        e.iadd(_f_sum(model, sg, k, c), -1.0)
    return e


def ell(model, sg, k, l) -> tuple[LinExpr, LinExpr]:
    """Footprint extents along i and j as expressions of the orientation bit."""
    fs = sg.room(k).furniture_by_id(l)
    s = model.var(f"sigma_{k}_{l}")
    Wf, Lf = fs.width_cells, fs.length_cells
    return (s * (Lf - Wf) + Wf, s * (Wf - Lf) + Lf)


def doubled_centroid(model, sg, k, l) -> tuple[LinExpr, LinExpr]:
    li, lj = ell(model, sg, k, l)
    xi, xj = model.var(f"xii_{k}_{l}"), model.var(f"xij_{k}_{l}")
    return (xi * 2 + li - 1, xj * 2 + lj - 1)


def _missing(grid: Grid, c: Cell) -> int:
    return sum(1 for d in DIRECTIONS if d.step(c) not in grid.indoor)


# -- variables -------------------------------------------------------------


def declare_variables(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    W, L = grid.W, grid.L
    cells = grid.indoor_cells()
    for k in range(1, sg.N + 1):
        for c in cells:
            model.add_var(xname(k, c))
    for c in cells:
        model.add_var(pname(c))
    for k in range(1, sg.N + 1):
        model.add_var(f"gmini_{k}", INTEGER, 0, W - 1)
        model.add_var(f"gminj_{k}", INTEGER, 0, L - 1)
        model.add_var(f"gleni_{k}", INTEGER, 1, W)
        model.add_var(f"glenj_{k}", INTEGER, 1, L)
    if not _has_furniture(model):
        return
    for r in sg.rooms:
        for fs in r.furniture:
            for c in cells:
                model.add_var(fname(r.id, fs.id, c))
            model.add_var(f"sigma_{r.id}_{fs.id}")
            model.add_var(f"mu_{r.id}_{fs.id}")
            model.add_var(f"xii_{r.id}_{fs.id}", INTEGER, 0, W - 1)
            model.add_var(f"xij_{r.id}_{fs.id}", INTEGER, 0, L - 1)


# -- constraint families ---------------------------------------------------


def encode_non_overlap(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    for c in grid.indoor_cells():
        e = LinExpr.of(model.var(pname(c)))
        for k in range(1, sg.N + 1):
            e.iadd(_x(model, k, c))
        model.add_constr(e, EQ, 1, "nonoverlap")


def encode_connectivity(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    M = model.big_m
    cells = grid.indoor_cells()
    q = {c: q_expr(model, sg, c) for c in cells}
    flows = {}
    for c in cells:
        for d in DIRECTIONS:
            n = adj(grid, c, d)
            if n is None:
                continue
            v = model.add_var(flowname(c, d), CONTINUOUS, 0, float("inf"))
            flows[(c, d)] = v
            model.add_constr(v - q[c] * M, LE, 0, "flowcap")
            model.add_constr(v - q[n] * M, LE, 0, "flowcap")
    total_q = LinExpr.sum(q.values())
    for c in cells:
        net = LinExpr()
        for d in DIRECTIONS:
            if (c, d) in flows:
                net.iadd(flows[(c, d)])
            src = adj(grid, c, d.inverse)
            if src is not None and (src, d) in flows:
                net.iadd(flows[(src, d)], -1.0)
        if c == grid.entrance:
            # the entrance supplies every other traversable cell
            model.add_constr(net - total_q + q[c], EQ, 0, "flowbal")
        else:
            model.add_constr(net + q[c], EQ, 0, "flowbal")


def encode_accessibility(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    cells = grid.indoor_cells()
    q = {c: q_expr(model, sg, c) for c in cells}
    for r in sg.rooms:
        if r.open:
            continue
        k = r.id
        alphas = []
        for c in cells:
            nbrs = [n for n in (d.step(c) for d in DIRECTIONS) if n in grid.indoor]
            a = model.add_var(f"alpha_{k}_{c[0]}_{c[1]}")
            alphas.append(a)
            model.add_constr(a - _x(model, k, c) + _f_sum(model, sg, k, c), LE, 0, "access")
            model.add_constr(LinExpr.sum(q[n] for n in nbrs) - a, GE, 0, "access")
        model.add_constr(LinExpr.sum(alphas), GE, 1, "access")


def encode_adjacency(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    cells = grid.indoor_cells()
    for k, m in sg.constraints.adjacency_pairs:
        if k == m:
            raise BuildError(f"adjacency pair ({k}, {m}) is a self pair")
        betas = []
        for c in cells:
            nbrs = [n for n in (d.step(c) for d in DIRECTIONS) if n in grid.indoor]
            b = model.add_var(f"beta_{k}_{m}_{c[0]}_{c[1]}")
            betas.append(b)
            model.add_constr(b - _x(model, k, c), LE, 0, "adjacency")
            model.add_constr(LinExpr.sum(_x(model, m, n) for n in nbrs) - b, GE, 0, "adjacency")
        model.add_constr(LinExpr.sum(betas), GE, 1, "adjacency")


def _box_rows(model, ind, gi, gj, li, lj, c, grid, family):
    """ind = 1 forces cell c inside the box with origin (gi, gj) and extents (li, lj).

    Each row uses the smallest constant that deactivates it when ind = 0
    (the box always fits in the grid); rows whose constant would be zero
    are implied by the variable bounds and skipped.
    """
    i, j = c
    for lo, ln, v, ext in ((gi, li, i, grid.W), (gj, lj, j, grid.L)):
        m_hi = ext - 1 - v  # lo <= ext - 1
        m_lo = v  # lo + ln >= 1
        if m_hi:
            model.add_constr(lo + ind * m_hi, LE, v + m_hi, family)
        if m_lo:
            model.add_constr(lo + ln - ind * m_lo, GE, v + 1 - m_lo, family)


def encode_room_bbox(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    for k in range(1, sg.N + 1):
        gi, gj = model.var(f"gmini_{k}"), model.var(f"gminj_{k}")
        li, lj = model.var(f"gleni_{k}"), model.var(f"glenj_{k}")
        model.add_constr(gi + li, LE, grid.W, "roombox")
        model.add_constr(gj + lj, LE, grid.L, "roombox")
        for c in grid.indoor_cells():
            _box_rows(model, _x(model, k, c), gi, gj, li, lj, c, grid, "roombox")


def encode_corner(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    for r in sg.rooms:
        if r.corner_pref is None:
            continue
        c = corner_cell(r.corner_pref, grid.W, grid.L)
        if c not in grid.indoor:
            raise CornerOutdoor(f"room {r.id} corner {r.corner_pref} cell {c} is not indoor")
        model.add_constr(_x(model, r.id, c), EQ, 1, "corner")


def placements(fs, grid: Grid) -> list[tuple[int, Cell]]:
    """(sigma, origin) pairs whose footprint lies entirely on indoor cells."""
    out = []
    for sigma in (0, 1):
        di, dj = (fs.width_cells, fs.length_cells) if sigma == 0 else (fs.length_cells, fs.width_cells)
        for j in range(grid.L - dj + 1):
            for i in range(grid.W - di + 1):
                if all((i + a, j + b) in grid.indoor for a in range(di) for b in range(dj)):
                    out.append((sigma, (i, j)))
    return out


def _placement_rows(model, fs, k, grid: Grid) -> None:
    """Disaggregated placement choice tied to f, sigma and the origin.

    Integer solutions are unchanged; the linear relaxation becomes much
    tighter than with the box rows alone.
    """
    l = fs.id
    opts = placements(fs, grid)
    if not opts:
        raise BuildError(f"furniture {k}/{l} fits nowhere on the indoor cells")
    ys = []
    cover: dict[Cell, LinExpr] = {c: LinExpr() for c in grid.indoor_cells()}
    si, sj, ss = LinExpr(), LinExpr(), LinExpr()
    for sigma, o in opts:
        y = model.add_var(f"place_{k}_{l}_{sigma}_{o[0]}_{o[1]}")
        ys.append(y)
        di, dj = (fs.width_cells, fs.length_cells) if sigma == 0 else (fs.length_cells, fs.width_cells)
        for a in range(di):
            for b in range(dj):
                cover[(o[0] + a, o[1] + b)].iadd(y)
        si.iadd(y, float(o[0]))
        sj.iadd(y, float(o[1]))
        if sigma:
            ss.iadd(y)
    model.add_constr(LinExpr.sum(ys), EQ, 1, "fplace")
    model.add_constr(model.var(f"sigma_{k}_{l}") - ss, EQ, 0, "fplace")
    model.add_constr(model.var(f"xii_{k}_{l}") - si, EQ, 0, "fplace")
    model.add_constr(model.var(f"xij_{k}_{l}") - sj, EQ, 0, "fplace")
    for c in grid.indoor_cells():
        model.add_constr(model.var(fname(k, l, c)) - cover[c], EQ, 0, "fplace")


def encode_furniture(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    cells = grid.indoor_cells()
    for r in sg.rooms:
        k = r.id
        for c in cells:
            if len(r.furniture) >= 2:
                model.add_constr(_f_sum(model, sg, k, c), LE, 1, "fnonoverlap")
        for fs in r.furniture:
            l = fs.id
            li, lj = ell(model, sg, k, l)
            xi, xj = model.var(f"xii_{k}_{l}"), model.var(f"xij_{k}_{l}")
            model.add_constr(xi + li, LE, grid.W, "fbox")
            model.add_constr(xj + lj, LE, grid.L, "fbox")
            fsum = LinExpr()
            for c in cells:
                f = model.var(fname(k, l, c))
                fsum.iadd(f)
                model.add_constr(f - _x(model, k, c), LE, 0, "fcontain")
                _box_rows(model, f, xi, xj, li, lj, c, grid, "fbox")
            # l_i * l_j == W * L for either orientation
            model.add_constr(fsum, EQ, fs.footprint, "farea")
            _placement_rows(model, fs, k, grid)


def _orient_literals(model, k, l, case):
    s, m = model.var(f"sigma_{k}_{l}"), model.var(f"mu_{k}_{l}")
    sv, mv = case
    return (s if sv else 1 - s), (m if mv else 1 - m)


def encode_against_wall(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    cells = grid.indoor_cells()
    for r in sg.rooms:
        k = r.id
        for fs in r.furniture:
            if not fs.against_wall:
                continue
            l = fs.id
            phis = []
            for c in cells:
                nbrs = [n for n in (d.step(c) for d in DIRECTIONS) if n in grid.indoor]
                phi = model.add_var(f"phi_{k}_{l}_{c[0]}_{c[1]}")
                phis.append(phi)
                model.add_constr(phi - model.var(fname(k, l, c)), LE, 0, "wall")
                outside = LinExpr(None, len(nbrs) + _missing(grid, c)) - LinExpr.sum(_x(model, k, n) for n in nbrs)
                model.add_constr(outside - phi, GE, 0, "wall")
            model.add_constr(LinExpr.sum(phis), GE, 1, "wall")
            for c in cells:
                f = model.var(fname(k, l, c))
                for case in ORIENT_CASES:
                    nu = orientation_from_bits(*case)
                    front = (c[0] + nu[0], c[1] + nu[1])
                    ls, lm = _orient_literals(model, k, l, case)
                    e = f + ls + lm
                    if front in grid.indoor:
                        e = e - _x(model, k, front)
                    model.add_constr(e, LE, 2, "orient")


def encode_alignment_facing(model: MilpModel, sg: SceneGraph, grid: Grid) -> None:
    for k, l1, l2 in sg.constraints.alignment_pairs:
        model.add_constr(model.var(f"sigma_{k}_{l1}") - model.var(f"sigma_{k}_{l2}"), EQ, 0, "align")
    Mf = grid.W + grid.L
    for k, l1, l2 in sg.constraints.facing_pairs:
        di = model.var(f"xii_{k}_{l2}") - model.var(f"xii_{k}_{l1}")
        dj = model.var(f"xij_{k}_{l2}") - model.var(f"xij_{k}_{l1}")
        for case in ORIENT_CASES:
            nu = orientation_from_bits(*case)
            ls, lm = _orient_literals(model, k, l1, case)
            # nu . delta >= 0 whenever both literals hold
            e = di * nu[0] + dj * nu[1] + (2 - ls - lm) * Mf
            model.add_constr(e, GE, 0, "facing")


# -- objective -------------------------------------------------------------


def _abs_aux(model, name, expr: LinExpr, family: str, hi: float):
    t = model.add_var(name, CONTINUOUS, 0, hi)
    model.add_constr(t - expr, GE, 0, family)
    model.add_constr(t + expr, GE, 0, family)
    return t


def add_objectives(model: MilpModel, sg: SceneGraph, grid: Grid, hint: Optional[CoarseHint] = None) -> None:
    w = sg.weights
    W, L = grid.W, grid.L
    cells = grid.indoor_cells()
    room_sum = {k: LinExpr.sum(_x(model, k, c) for c in cells) for k in range(1, sg.N + 1)}

    # rectangularity: rect_k >= gleni_k * glenj_k, exact through a one-hot on gleni_k
    e_rect = LinExpr()
    for k in range(1, sg.N + 1):
        li, lj = model.var(f"gleni_{k}"), model.var(f"glenj_{k}")
        sel = [model.add_var(f"gsel_{k}_{v}") for v in range(1, W + 1)]
        model.add_constr(LinExpr.sum(sel), EQ, 1, "rect")
        model.add_constr(li - LinExpr.sum(s * v for v, s in enumerate(sel, 1)), EQ, 0, "rect")
        rect = model.add_var(f"rect_{k}", CONTINUOUS, 0, W * L)
        for v, s in enumerate(sel, 1):
            model.add_constr(rect - lj * v - s * (v * L), GE, -v * L, "rect")
        # valid for every integer point; they only tighten the relaxation
        model.add_constr(rect - room_sum[k], GE, 0, "rect")
        model.add_constr(rect - li - lj, GE, -1, "rect")
        model.add_constr(rect - li * L - lj * W, GE, -W * L, "rect")
        e_rect.iadd(rect)
        e_rect.iadd(room_sum[k], -1.0)
    model.set_term("E_rect", w.w_rect, e_rect)

    # exposed perimeter
    e_perim = LinExpr()
    for k in range(1, sg.N + 1):
        for c in cells:
            miss = _missing(grid, c)
            if miss:
                e_perim.iadd(_x(model, k, c), float(miss))
            for d in (Direction.E, Direction.N):
                n = adj(grid, c, d)
                if n is None:
                    continue
                diff = _x(model, k, c) - _x(model, k, n)
                e_perim.iadd(_abs_aux(model, f"perim_{k}_{c[0]}_{c[1]}_{d.name}", diff, "perim", 1))
    model.set_term("E_perim", w.w_perim, e_perim)

    e_area = LinExpr()
    for r in sg.rooms:
        diff = room_sum[r.id] - r.target_area_cells
        e_area.iadd(_abs_aux(model, f"area_{r.id}", diff, "area", max(r.target_area_cells, len(cells))))
    model.set_term("E_area", w.w_area, e_area)

    e_aspect = LinExpr()
    for k in range(1, sg.N + 1):
        diff = model.var(f"gleni_{k}") - model.var(f"glenj_{k}")
        e_aspect.iadd(_abs_aux(model, f"aspect_{k}", diff, "aspect", max(W, L)))
    model.set_term("E_aspect", w.w_aspect, e_aspect)

    if _has_furniture(model):
        # centroids are doubled to stay integral; terms carry the 1/2 back
        e_rel = LinExpr()
        for n, (k, l1, l2, di, dj) in enumerate(sg.constraints.relative_offsets):
            c1, c2 = doubled_centroid(model, sg, k, l1), doubled_centroid(model, sg, k, l2)
            for axis, delta, ext in ((0, di, W), (1, dj, L)):
                diff = c1[axis] - c2[axis] - 2 * delta
                t = _abs_aux(model, f"rel{'ij'[axis]}_{n}", diff, "rel", 2 * ext + 2 * abs(delta))
                e_rel.iadd(t, 0.5)
        model.set_term("E_rel", w.w_rel, e_rel)

        e_bal = LinExpr()
        for r in sg.rooms:
            if not r.furniture:
                continue
            k = r.id
            total = sum(fs.footprint for fs in r.furniture)
            room_c = (
                model.var(f"gmini_{k}") * 2 + model.var(f"gleni_{k}") - 1,
                model.var(f"gminj_{k}") * 2 + model.var(f"glenj_{k}") - 1,
            )
            for axis, ext in ((0, W), (1, L)):
                s = LinExpr()
                for fs in r.furniture:
                    s.iadd(doubled_centroid(model, sg, k, fs.id)[axis], float(fs.footprint))
                diff = s - room_c[axis] * total
                t = _abs_aux(model, f"bal{'ij'[axis]}_{k}", diff, "bal", 2 * ext * total)
                e_bal.iadd(t, 1.0 / (2 * total))
        model.set_term("E_bal", w.w_bal, e_bal)

    order = sg.constraints.privacy_order
    e_priv = LinExpr()
    if len(order) >= 2:
        dist = {}
        for k in order:
            area = sg.room(k).target_area_cells
            dist[k] = LinExpr.sum(_x(model, k, c) * (manhattan(c, grid.entrance) / area) for c in cells)
        for t, (a, b) in enumerate(zip(order, order[1:]), 1):
            theta = model.add_var(f"theta_{t}", CONTINUOUS, 0, float("inf"))
            model.add_constr(theta + dist[a] - dist[b], GE, 0, "priv")
            e_priv.iadd(theta)
    model.set_term("E_priv", w.w_priv, e_priv)

    if hint is not None:
        e_ref = LinExpr()
        for c in cells:
            if hint.z.get(c):
                e_ref.iadd(1.0)
                e_ref.iadd(_x(model, hint.pi[c], c), -1.0)
        model.set_term("E_ref", w.w_ref, e_ref)


# -- driver ----------------------------------------------------------------


def scene_digest(sg: SceneGraph) -> str:
    return hashlib.sha256(serialize(sg).encode()).hexdigest()[:16]


def build_model(sg: SceneGraph, grid: Optional[Grid] = None, phase: str = "direct",
                coarse_hint: Optional[CoarseHint] = None) -> MilpModel:
    """Run every encoder and return the finished model.

    ``phase="coarse"`` drops all furniture variables, rows and terms;
    ``phase="fine"`` with a hint adds the reference penalty and records
    the warm start for the room variables.
    """
    if phase not in PHASES:
        raise BuildError(f"unknown phase {phase!r}")
    if coarse_hint is not None and phase != "fine":
        raise BuildError("a coarse hint is only meaningful for the fine phase")
    grid = grid or sg.grid()
    model = MilpModel(big_m=grid.big_m)
    model.metadata.update(
        phase=phase, scene_digest=scene_digest(sg), W=grid.W, L=grid.L,
        n_indoor=grid.n_indoor, entrance=list(grid.entrance), n_rooms=sg.N,
        open_rooms=sorted(sg.open_room_ids), flow_families=list(FLOW_FAMILIES),
    )
    try:
        declare_variables(model, sg, grid)
        encode_non_overlap(model, sg, grid)
        encode_connectivity(model, sg, grid)
        encode_accessibility(model, sg, grid)
        encode_adjacency(model, sg, grid)
        encode_room_bbox(model, sg, grid)
        encode_corner(model, sg, grid)
        if phase != "coarse":
            encode_furniture(model, sg, grid)
            encode_against_wall(model, sg, grid)
            encode_alignment_facing(model, sg, grid)
        add_objectives(model, sg, grid, coarse_hint)
    except BuildError:
        raise
    except (GridplanError, KeyError) as e:
        raise BuildError(f"{type(e).__name__}: {e}") from e
    if coarse_hint is not None:
        # hinted cells get their full label assignment; the rest is left to the solver
        for c, k in coarse_hint.warm_start.items():
            if c in grid.indoor:
                for m in range(1, sg.N + 1):
                    model.warm_start[xname(m, c)] = 1 if m == k else 0
                model.warm_start[pname(c)] = 0
    model.metadata["binary_counts"] = binary_counts(model)
    return model


def binary_counts(model: MilpModel) -> dict[str, int]:
    """Binary variables grouped by name prefix, for documentation and checks."""
    out: dict[str, int] = {}
    for v in model.variables:
        if v.kind == BINARY:
            prefix = v.name.split("_", 1)[0]
            out[prefix] = out.get(prefix, 0) + 1
    return dict(sorted(out.items()))


# -- decoding --------------------------------------------------------------


def decode_layout(model: MilpModel, sg: SceneGraph, values: Mapping[str, float],
                  grid: Optional[Grid] = None) -> Layout:
    """Turn solver values into a Layout (labels, furniture boxes)."""
    grid = grid or sg.grid()

    def on(name):
        return values.get(name, 0.0) > 0.5

    labels = {}
    for c in grid.indoor_cells():
        lab = CORRIDOR
        for k in range(1, sg.N + 1):
            if on(xname(k, c)):
                lab = k
                break
        labels[c] = lab
    furniture = {}
    if _has_furniture(model):
        for r in sg.rooms:
            for fs in r.furniture:
                occ = [c for c in grid.indoor_cells() if on(fname(r.id, fs.id, c))]
                sigma = int(on(f"sigma_{r.id}_{fs.id}"))
                mu = int(on(f"mu_{r.id}_{fs.id}"))
                if occ:
                    i0 = min(c[0] for c in occ)
                    j0 = min(c[1] for c in occ)
                    dims = (max(c[0] for c in occ) - i0 + 1, max(c[1] for c in occ) - j0 + 1)
                else:
                    i0, j0, dims = 0, 0, (0, 0)
                furniture[(r.id, fs.id)] = FurnitureBox(r.id, fs.id, (i0, j0), dims, orientation_from_bits(sigma, mu))
    return Layout(sg, labels, furniture)


# -- post-solve polishing --------------------------------------------------


def polish_solution(model: MilpModel, sg: SceneGraph, grid: Grid, values: Mapping[str, float]) -> dict:
    """Re-optimise the room bounding boxes for the solved cells and furniture.

    With a relative gap a solver may stop on a solution whose box variables
    are not the cheapest ones for its own room assignment.  The box block
    only touches the rectangularity, aspect and balance terms, so it is
    re-chosen here by enumeration, the one-hot selector is reset, and the
    epigraph variables are recomputed.  The result is feasible and never
    worse than the input.
    """
    vals = model.polish(values)
    w = sg.weights
    furnished = _has_furniture(model)
    for k in range(1, sg.N + 1):
        cells = [c for c in grid.indoor_cells() if vals[xname(k, c)] > 0.5]
        n = len(cells)
        boxes = []
        if furnished:
            for fs in sg.room(k).furniture:
                s = round(vals[f"sigma_{k}_{fs.id}"])
                li = fs.width_cells if s == 0 else fs.length_cells
                lj = fs.length_cells if s == 0 else fs.width_cells
                boxes.append((fs.footprint, 2 * round(vals[f"xii_{k}_{fs.id}"]) + li - 1,
                              2 * round(vals[f"xij_{k}_{fs.id}"]) + lj - 1))
        total = sum(b[0] for b in boxes)

        def axis_options(axis, extent):
            # length -> (balance cost, origin) of the best admissible origin
            coords = [c[axis] for c in cells]
            weighted = sum(b[0] * b[1 + axis] for b in boxes)
            out = {}
            for ln in range(1, extent + 1):
                lo, hi = 0, extent - ln
                if coords:
                    lo, hi = max(lo, max(coords) - ln + 1), min(hi, min(coords))
                best = None
                for g in range(lo, hi + 1):
                    cost = abs(weighted - total * (2 * g + ln - 1)) / (2 * total) if total else 0.0
                    if best is None or cost < best[0] - 1e-12:
                        best = (cost, g)
                if best is not None:
                    out[ln] = best
            return out

        oi, oj = axis_options(0, grid.W), axis_options(1, grid.L)
        wb = w.w_bal if (furnished and boxes) else 0.0
        current = (round(vals[f"gleni_{k}"]), round(vals[f"glenj_{k}"]))

        def cost(li, lj):
            return w.w_rect * (li * lj - n) + w.w_aspect * abs(li - lj) + wb * (oi[li][0] + oj[lj][0])

        best = min(((cost(li, lj), (li, lj) != current, li, lj) for li in oi for lj in oj))
        li, lj = best[2], best[3]
        vals[f"gleni_{k}"], vals[f"glenj_{k}"] = float(li), float(lj)
        vals[f"gmini_{k}"], vals[f"gminj_{k}"] = float(oi[li][1]), float(oj[lj][1])
        for v in range(1, grid.W + 1):
            vals[f"gsel_{k}_{v}"] = 1.0 if v == li else 0.0
    return model.polish(vals)
