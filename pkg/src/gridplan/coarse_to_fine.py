"""Two-phase solve: rooms only on a down-sampled grid, then the full model.

The coarse room assignment is mapped back onto the fine grid by floor
division and used twice: as a warm start for the room variables and as
the reference of the ``E_ref`` penalty.  The hint is never a hard
constraint, so it cannot make the fine model infeasible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import BuildError, CornerOutdoor, DegenerateGrid
from .grid import Cell, Grid, exterior_directions
from .ip_builder import CoarseHint, build_model, decode_layout, polish_solution
from .layout import CORRIDOR, Layout
from .scene_graph import ConstraintSet, FloorSpec, SceneGraph
from .solver import SolveParams, Solution, solve
from .validator import recompute_objective


def coarse_cell(c: Cell, s_i: int, s_j: int) -> Cell:
    """0-based floor-division mapping of a fine cell to its coarse cell."""
    return (c[0] // s_i, c[1] // s_j)


def downsample(sg: SceneGraph, grid: Grid, s_i: int, s_j: int) -> tuple[SceneGraph, Grid]:
    """Coarse scene and grid: majority indoor mask, scaled areas, no furniture."""
    if s_i < 1 or s_j < 1:
        raise ValueError("down-sampling factors must be >= 1")
    Wc, Lc = math.ceil(grid.W / s_i), math.ceil(grid.L / s_j)
    counts: dict[Cell, list[int]] = {}
    for i in range(grid.W):
        for j in range(grid.L):
            tally = counts.setdefault(coarse_cell((i, j), s_i, s_j), [0, 0])
            tally[0 if (i, j) in grid.indoor else 1] += 1
    entrance = coarse_cell(grid.entrance, s_i, s_j)
    # ties count as indoor; the entrance block is kept whatever its majority
    outdoor = frozenset(c for c, (n_in, n_out) in counts.items() if n_in < n_out and c != entrance)
    if Wc * Lc - len(outdoor) < sg.N:
        raise DegenerateGrid(f"coarse grid {Wc}x{Lc} has fewer indoor cells than rooms ({sg.N})")
    floor = FloorSpec(
        width_cells=Wc, length_cells=Lc, cell_size_m=sg.floor.cell_size_m * max(s_i, s_j),
        outdoor_cells=outdoor, entrance=entrance,
    )
    rooms = tuple(
        replace(r, target_area_cells=max(1, _round_half_up(r.target_area_cells / (s_i * s_j))), furniture=())
        for r in sg.rooms
    )
    cons = ConstraintSet(adjacency_pairs=sg.constraints.adjacency_pairs, privacy_order=sg.constraints.privacy_order)
    csg = SceneGraph(floor, rooms, cons, sg.weights, sg.metadata)
    return csg, csg.grid()


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def map_coarse_to_fine(coarse_labels: Mapping[Cell, int], s_i: int, s_j: int, fine_grid: Grid) -> CoarseHint:
    """Fine-grid hint from a coarse room assignment (corridor and outdoor give no hint)."""
    pi, z, warm = {}, {}, {}
    for c in fine_grid.indoor_cells():
        lab = coarse_labels.get(coarse_cell(c, s_i, s_j))
        on = lab is not None and lab != CORRIDOR
        z[c] = on
        if on:
            pi[c] = lab
            warm[c] = lab
    return CoarseHint(pi=pi, z=z, s_i=s_i, s_j=s_j, warm_start=warm)


@dataclass
class PhaseReport:
    name: str
    status: str
    wall_s: float
    objective: Optional[float] = None
    bound: Optional[float] = None
    n_binaries: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name, "status": self.status, "wall_s": self.wall_s, "objective": self.objective,
            "bound": self.bound, "n_binaries": self.n_binaries, "message": self.message,
        }


@dataclass
class SolveResult:
    status: str
    layout: Optional[Layout]
    solution: Solution
    phases: list = field(default_factory=list)
    fallback: bool = False
    fallback_reason: str = ""
    hint: Optional[CoarseHint] = None
    model: object = None

    @property
    def wall_s(self) -> float:
        return sum(p.wall_s for p in self.phases)

    @property
    def design_objective(self) -> Optional[float]:
        """Objective without the reference penalty, comparable across modes."""
        return None if self.layout is None else self.layout.objective["total"]


def _phase(name, model, sol, wall) -> PhaseReport:
    nb = sum(model.metadata.get("binary_counts", {}).values())
    return PhaseReport(name, sol.status, wall, sol.objective, sol.bound, nb, sol.message)


def _finish(sg, grid, model, sol) -> tuple[Solution, Optional[Layout]]:
    if not sol.has_solution:
        return sol, None
    values = polish_solution(model, sg, grid, sol.values)
    sol = replace(sol, values=values, objective=model.evaluate(values))
    layout = decode_layout(model, sg, values, grid)
    layout.objective = recompute_objective(sg, grid, layout)
    return sol, layout


def solve_direct(sg: SceneGraph, grid: Optional[Grid] = None, params: Optional[SolveParams] = None,
                 backend: str = "builtin", solver_command: Optional[str] = None) -> SolveResult:
    grid = grid or sg.grid()
    params = params or SolveParams()
    t0 = time.monotonic()
    model = build_model(sg, grid, phase="direct")
    sol = solve(model, params, backend, solver_command)
    sol, layout = _finish(sg, grid, model, sol)
    wall = time.monotonic() - t0
    return SolveResult(sol.status, layout, sol, [_phase("direct", model, sol, wall)], model=model)


def solve_c2f(sg: SceneGraph, grid: Optional[Grid] = None, params: Optional[SolveParams] = None,
              s_i: int = 2, s_j: int = 2, backend: str = "builtin",
              solver_command: Optional[str] = None) -> SolveResult:
    """Coarse rooms-only solve, then the hinted fine solve.

    Falls back to a direct solve when the coarse phase cannot be built
    (degenerate grid, outdoor corner at coarse resolution) or is
    infeasible.  Each phase gets the full time limit.
    """
    grid = grid or sg.grid()
    params = params or SolveParams()
    phases = []
    t0 = time.monotonic()
    reason = ""
    csol = None
    try:
        csg, cgrid = downsample(sg, grid, s_i, s_j)
        cmodel = build_model(csg, cgrid, phase="coarse")
    except DegenerateGrid as e:
        reason = f"DegenerateGrid: {e}"
    except BuildError as e:
        if not isinstance(e.__cause__, CornerOutdoor):
            raise
        reason = f"CornerOutdoor: {e.__cause__}"
    else:
        csol = solve(cmodel, params, backend, solver_command)
        phases.append(_phase("coarse", cmodel, csol, time.monotonic() - t0))
        if not csol.has_solution:
            reason = f"coarse phase {csol.status}"
    if reason:
        res = solve_direct(sg, grid, params, backend, solver_command)
        res.phases = phases + res.phases
        res.fallback, res.fallback_reason = True, reason
        return res

    clayout = decode_layout(cmodel, csg, csol.values, cgrid)
    hint = map_coarse_to_fine(clayout.labels, s_i, s_j, grid)
    t1 = time.monotonic()
    model = build_model(sg, grid, phase="fine", coarse_hint=hint)
    sol = solve(model, params, backend, solver_command, warm_start=model.warm_start or None)
    sol, layout = _finish(sg, grid, model, sol)
    phases.append(_phase("fine", model, sol, time.monotonic() - t1))
    return SolveResult(sol.status, layout, sol, phases, hint=hint, model=model)


def upscale(sg: SceneGraph, factor: int) -> SceneGraph:
    """Refine every cell into ``factor x factor`` cells (used for resolution sweeps)."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    f = factor
    fl = sg.floor
    outdoor = frozenset((i * f + a, j * f + b) for i, j in fl.outdoor_cells for a in range(f) for b in range(f))
    ei, ej = fl.entrance
    # keep the entrance on the envelope: pick the sub-cell nearest the outside
    ext = {d.name for d in exterior_directions(sg.grid(), fl.entrance)}
    di = f - 1 if "E" in ext else 0
    dj = f - 1 if "N" in ext else 0
    floor = FloorSpec(fl.width_cells * f, fl.length_cells * f, fl.cell_size_m / f, outdoor, (ei * f + di, ej * f + dj))
    rooms = tuple(
        replace(
            r, target_area_cells=r.target_area_cells * f * f,
            furniture=tuple(replace(x, width_cells=x.width_cells * f, length_cells=x.length_cells * f)
                            for x in r.furniture),
        )
        for r in sg.rooms
    )
    c = sg.constraints
    cons = replace(c, relative_offsets=tuple((k, a, b, di_ * f, dj_ * f) for k, a, b, di_, dj_ in c.relative_offsets))
    return SceneGraph(floor, rooms, cons, sg.weights, sg.metadata)

