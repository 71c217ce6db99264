"""Command-line entry point.

Exit codes: 0 when a layout was produced (or a check passed), 2 when the
problem is infeasible or a check failed, 1 on errors.  Machine-readable
results go to files (``report.json`` for solves); human text to stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .coarse_to_fine import downsample, map_coarse_to_fine, solve_c2f, solve_direct, upscale
from .errors import GridplanError
from .ip_builder import CoarseHint, build_model, decode_layout
from .layout import dumps_layout, load_layout
from .metrics import layout_to_boxscene, load_boxscene, metrics_table
from .postprocess import DEFAULT_WINDOWS, postprocess
from .render import RenderStyle, render_svg
from .scene_graph import ObjectiveWeights, load_scene_graph, load_weights_dict, serialize
from .solver import INFEASIBLE, SolveParams
from .solver.external import parse_solution
from .solver.lp_format import export_lp
from .validator import check_layout

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


@dataclass
class RunReport:
    command: str
    seed: int
    backend: str
    c2f: bool = False
    factors: tuple = (1, 1)
    config_digest: str = ""
    status: str = ""
    fallback: Optional[str] = None
    phases: list = field(default_factory=list)
    objective: Optional[float] = None
    design_objective: Optional[float] = None
    bound: Optional[float] = None
    validation: Optional[dict] = None
    outputs: dict = field(default_factory=dict)
    wall_s: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "command": self.command, "seed": self.seed, "backend": self.backend, "c2f": self.c2f,
            "factors": list(self.factors), "config_digest": self.config_digest, "status": self.status,
            "fallback": self.fallback, "phases": self.phases, "objective": self.objective,
            "design_objective": self.design_objective, "bound": self.bound, "validation": self.validation,
            "outputs": self.outputs, "wall_s": self.wall_s, "error": self.error,
        }

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")


# -- shared helpers ----------------------------------------------------------


def _load_scene(args):
    sg = load_scene_graph(args.scene)
    if args.config:
        with open(args.config) as fh:
            override = load_weights_dict(json.load(fh))
        merged = sg.weights.as_dict()
        merged.update(override)
        sg = sg.with_weights(ObjectiveWeights(**merged))
    return sg


def _config_digest(sg) -> str:
    return hashlib.sha256(json.dumps(sg.weights.as_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _params(args) -> SolveParams:
    return SolveParams(time_limit_s=args.time_limit, gap_tolerance=args.gap, seed=args.seed)


def _run_solve(sg, args):
    params = _params(args)
    if args.no_c2f:
        return solve_direct(sg, params=params, backend=args.backend, solver_command=args.solver_cmd)
    return solve_c2f(sg, params=params, s_i=args.coarse_factor_i, s_j=args.coarse_factor_j,
                     backend=args.backend, solver_command=args.solver_cmd)


# -- subcommands -------------------------------------------------------------


def cmd_extract(args) -> int:
    from .llm.agents import run_agents_report
    from .llm.client import LlmClientConfig

    brief = Path(args.brief).read_text()
    cfg = LlmClientConfig.from_env(
        offline_fixture_dir=args.offline_fixture_dir, max_retries=args.max_retries,
        endpoint=args.endpoint, model=args.model,
    )
    rep = run_agents_report(brief, cfg)
    Path(args.output).write_text(serialize(rep.scene))
    for d in rep.diagnostics:
        _log(str(d))
    _log(f"retries: {json.dumps(rep.retries, sort_keys=True)}")
    return EXIT_OK


def cmd_solve(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport("solve", args.seed, args.backend, c2f=not args.no_c2f,
                       factors=(args.coarse_factor_i, args.coarse_factor_j))
    t0 = time.monotonic()
    code = EXIT_ERROR
    try:
        sg = _load_scene(args)
        report.config_digest = _config_digest(sg)
        res = _run_solve(sg, args)
        report.status = res.status
        report.fallback = res.fallback_reason or None
        report.phases = [p.to_dict() for p in res.phases]
        report.objective, report.bound = res.solution.objective, res.solution.bound
        if res.layout is None:
            code = EXIT_INFEASIBLE if res.status == INFEASIBLE else EXIT_ERROR
            report.error = None if code == EXIT_INFEASIBLE else f"solver: no solution ({res.status})"
        else:
            layout = res.layout
            report.design_objective = layout.objective["total"]
            layout.artifacts = postprocess(layout, args.seed, args.windows)
            rep = check_layout(sg, sg.grid(), layout)
            report.validation = rep.summary()
            (out / "layout.json").write_text(dumps_layout(layout))
            (out / "plan.svg").write_text(render_svg(layout, layout.artifacts, RenderStyle(cell_px=args.cell_px)))
            report.outputs = {"layout": str(out / "layout.json"), "svg": str(out / "plan.svg")}
            code = EXIT_OK if rep.ok else EXIT_ERROR
            if not rep.ok:
                report.error = "validator: " + ", ".join(c.name for c in rep.failures)
    except GridplanError as e:
        report.error = f"{type(e).__module__.rsplit('.', 1)[-1]}.{type(e).__name__}: {e}"
    finally:
        report.wall_s = time.monotonic() - t0
        report.outputs["report"] = str(out / "report.json")
        report.write(out / "report.json")
    _log(f"status={report.status or 'error'} objective={report.objective} wall={report.wall_s:.2f}s")
    if report.error:
        _log(report.error)
    return code


def _read_hint(args, sg) -> CoarseHint:
    csg, cgrid = downsample(sg, sg.grid(), args.coarse_factor_i, args.coarse_factor_j)
    cmodel = build_model(csg, cgrid, phase="coarse")
    _, values, _, _ = parse_solution(Path(args.hint).read_text())
    if not values:
        raise GridplanError(f"hint file {args.hint} holds no solution values")
    clayout = decode_layout(cmodel, csg, values, cgrid)
    return map_coarse_to_fine(clayout.labels, args.coarse_factor_i, args.coarse_factor_j, sg.grid())


def cmd_export(args, parser) -> int:
    if args.phase == "fine" and not args.hint:
        parser.error("--phase fine requires --hint (a solution file of the coarse model)")
    sg = _load_scene(args)
    if args.phase == "coarse":
        csg, cgrid = downsample(sg, sg.grid(), args.coarse_factor_i, args.coarse_factor_j)
        model = build_model(csg, cgrid, phase="coarse")
    elif args.phase == "fine":
        model = build_model(sg, phase="fine", coarse_hint=_read_hint(args, sg))
    else:
        model = build_model(sg, phase="direct")
    Path(args.output).write_text(export_lp(model))
    c = model.counts()
    _log(f"wrote {args.output}: {c['binary']} binary, {c['integer']} integer, "
         f"{c['continuous']} continuous, {c['constraints']} rows")
    return EXIT_OK


def cmd_validate(args) -> int:
    layout = load_layout(args.layout)
    rep = check_layout(layout.scene, layout.grid, layout)
    print(json.dumps(rep.summary(), indent=2))
    return EXIT_OK if rep.ok else EXIT_INFEASIBLE


def cmd_metrics(args) -> int:
    with open(args.file) as fh:
        doc = json.load(fh)
    scene = layout_to_boxscene(load_layout(args.file)) if "labels" in doc else load_boxscene(args.file)
    for name, value in metrics_table(scene).items():
        print(f"{name}\t{value:.2f}")
    return EXIT_OK


def cmd_render(args) -> int:
    layout = load_layout(args.layout)
    if layout.artifacts is None:
        layout.artifacts = postprocess(layout, args.seed, args.windows)
    style = RenderStyle(cell_px=args.cell_px, legend=not args.no_legend)
    Path(args.output).write_text(render_svg(layout, layout.artifacts, style))
    return EXIT_OK


def bench_rows(sg, factors, repeats, params, backend, solver_command, s_i=2, s_j=2, log=None) -> list[dict]:
    rows = []
    for f in factors:
        scene = upscale(sg, f)
        res_label = f"{scene.floor.width_cells}x{scene.floor.length_cells}"
        for mode in ("direct", "c2f"):
            times, objs, statuses = [], [], []
            for _ in range(repeats):
                t0 = time.monotonic()
                if mode == "direct":
                    r = solve_direct(scene, params=params, backend=backend, solver_command=solver_command)
                else:
                    r = solve_c2f(scene, params=params, s_i=s_i, s_j=s_j, backend=backend,
                                  solver_command=solver_command)
                times.append(time.monotonic() - t0)
                objs.append(r.design_objective)
                statuses.append(r.status)
                if log:
                    log(f"{res_label} {mode}: {r.status} {times[-1]:.2f}s objective={r.design_objective}")
            found = [o for o in objs if o is not None]
            rows.append({
                "resolution": res_label, "mode": mode,
                "mean_s": statistics.fmean(times), "std_s": statistics.pstdev(times),
                "objective": statistics.fmean(found) if found else None,
                "gap": params.gap_for(backend), "statuses": statuses,
            })
    return rows


def cmd_bench(args) -> int:
    sg = _load_scene(args)
    factors = [int(x) for x in args.resolutions.split(",")]
    rows = bench_rows(sg, factors, args.repeats, _params(args), args.backend, args.solver_cmd,
                      args.coarse_factor_i, args.coarse_factor_j, log=_log)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["resolution", "mode", "mean_s", "std_s", "objective", "gap"])
        for r in rows:
            obj = "" if r["objective"] is None else f"{r['objective']:.6f}"
            w.writerow([r["resolution"], r["mode"], f"{r['mean_s']:.3f}", f"{r['std_s']:.3f}", obj, f"{r['gap']:g}"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _solve_flags(p) -> None:
    p.add_argument("--time-limit", type=float, default=60.0, help="seconds per solver call (default 60)")
    p.add_argument("--gap", type=float, default=None, help="relative gap (default: 0 builtin, 0.01 external)")
    p.add_argument("--coarse-factor-i", type=int, default=2)
    p.add_argument("--coarse-factor-j", type=int, default=2)
    p.add_argument("--no-c2f", action="store_true", help="solve the full model directly")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridplan", description="Floorplan and furniture layout on a cell grid.")
    ap.add_argument("--version", action="version", version=f"gridplan {__version__}")
    ap.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    ap.add_argument("--config", help="JSON file with objective weights (partial overrides allowed)")
    ap.add_argument("--backend", choices=("builtin", "external"), default="external")
    ap.add_argument("--solver-cmd", default=None, help="external solver command template")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="brief -> scene graph through the agent pipeline")
    p.add_argument("brief")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--offline-fixture-dir", default=None)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default=None)

    p = sub.add_parser("solve", help="scene graph -> layout.json, plan.svg, report.json")
    p.add_argument("scene")
    p.add_argument("-o", "--output", default=".", help="output directory")
    p.add_argument("--windows", type=int, default=DEFAULT_WINDOWS, help="windows per space")
    p.add_argument("--cell-px", type=int, default=32)
    _solve_flags(p)

    p = sub.add_parser("export", help="write the model as a CPLEX LP file")
    p.add_argument("scene")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--phase", choices=("direct", "coarse", "fine"), default="direct")
    p.add_argument("--hint", help="solution file of the coarse model (needed for --phase fine)")
    p.add_argument("--coarse-factor-i", type=int, default=2)
    p.add_argument("--coarse-factor-j", type=int, default=2)

    p = sub.add_parser("validate", help="re-check a layout.json")
    p.add_argument("layout")

    p = sub.add_parser("metrics", help="OOR / OOB of a layout.json or box-scene file")
    p.add_argument("file")

    p = sub.add_parser("render", help="layout.json -> SVG")
    p.add_argument("layout")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--cell-px", type=int, default=32)
    p.add_argument("--no-legend", action="store_true")
    p.add_argument("--windows", type=int, default=DEFAULT_WINDOWS)

    p = sub.add_parser("bench", help="wall time of direct vs coarse-to-fine over resolutions")
    p.add_argument("scene")
    p.add_argument("--resolutions", default="1", help="comma-separated upscale factors (default 1)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    _solve_flags(p)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            return cmd_export(args, parser)
        handler = {
            "extract": cmd_extract, "solve": cmd_solve, "validate": cmd_validate,
            "metrics": cmd_metrics, "render": cmd_render, "bench": cmd_bench,
        }[args.command]
        return handler(args)
    except GridplanError as e:
        _log(f"error: {type(e).__name__}: {e}")
        return EXIT_ERROR
    except OSError as e:
        _log(f"error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
