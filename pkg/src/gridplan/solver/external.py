"""Run an LP-reading MILP solver as a child process.

The command is a template with ``{name}`` placeholders.  Square-bracket
segments are optional: they are dropped when a placeholder inside them
has no value (``[--start {start}]`` only appears when a warm start exists).

Two solution formats are understood.  The plain format is::

    =status= OPTIMAL
    =objective= 12.5
    x_1_0_0 1
    # comment

and CBC's native ``solu`` output is detected by its first line.
"""

from __future__ import annotations

import os
import platform
import re
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from importlib import util as importlib_util
from pathlib import Path
from typing import Optional

from ..errors import ParseError, SolverCrashed, SolverNotFound
from ..model import MilpModel
from . import FEASIBLE, INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution, SolveParams
from .lp_format import export_lp, fmt_num

ENV_COMMAND = "GRIDPLAN_SOLVER_CMD"
CBC_TEMPLATE = "{cbc} {lp} sec {time_limit} ratio {gap} randomSeed {seed} threads {threads} [mips {cbc_start}] solve solu {sol}"
HIGHS_TEMPLATE = (
    "{python} -m gridplan.solver.highs_adapter {lp} {sol} --time-limit {time_limit} --gap {gap} --seed {seed} "
    "--threads {threads} [--start {start}]"
)

_PLAIN_STATUS = {"OPTIMAL": OPTIMAL, "FEASIBLE": FEASIBLE, "INFEASIBLE": INFEASIBLE, "TIMELIMIT": TIME_LIMIT}


def find_cbc() -> Optional[str]:
    """A CBC executable from PATH or the copy bundled with PuLP."""
    exe = shutil.which("cbc")
    if exe:
        return exe
    spec = importlib_util.find_spec("pulp")
    if spec is None or not spec.submodule_search_locations:
        return None
    root = Path(list(spec.submodule_search_locations)[0]) / "solverdir" / "cbc"
    plat = {"linux": "linux", "darwin": "osx"}.get(sys.platform)
    arch = {"x86_64": "i64", "amd64": "i64", "aarch64": "arm64", "arm64": "arm64"}.get(platform.machine().lower())
    if plat is None or arch is None:
        return None
    cand = root / plat / arch / "cbc"
    if plat == "osx" and not cand.exists():
        cand = root / plat / "i64" / "cbc"
    return str(cand) if os.access(cand, os.X_OK) else None


def default_command() -> str:
    if os.environ.get(ENV_COMMAND):
        return os.environ[ENV_COMMAND]
    if importlib_util.find_spec("highspy") is not None:
        return HIGHS_TEMPLATE
    if find_cbc():
        return CBC_TEMPLATE
    raise SolverNotFound(f"no external MILP solver found; install CBC or highspy, or set {ENV_COMMAND}")


def render_command(template: str, values: dict) -> list[str]:
    """Fill a command template; drop ``[...]`` segments with unset placeholders."""

    def optional(m):
        seg = m.group(1)
        names = re.findall(r"{(\w+)}", seg)
        return seg if all(values.get(n) is not None for n in names) else ""

    text = re.sub(r"\[([^\]]*)\]", optional, template)
    for n in re.findall(r"{(\w+)}", text):
        if values.get(n) is None:
            raise SolverNotFound(f"command template needs {{{n}}} but no value is available")
    return [tok.format(**{k: ("" if v is None else v) for k, v in values.items()}) for tok in shlex.split(text)]


# -- solution files --------------------------------------------------------


def parse_plain(text: str) -> tuple[str, dict, Optional[float], Optional[float]]:
    status, objective, bound = None, None, None
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "=status=":
            if len(parts) != 2 or parts[1].upper() not in _PLAIN_STATUS:
                raise ParseError(f"line {n}: bad status line {raw!r}")
            status = _PLAIN_STATUS[parts[1].upper()]
            continue
        if len(parts) != 2:
            raise ParseError(f"line {n}: expected 'name value', got {raw!r}")
        try:
            val = float(parts[1])
        except ValueError as e:
            raise ParseError(f"line {n}: bad number {parts[1]!r}") from e
        if parts[0] == "=objective=":
            objective = val
        elif parts[0] == "=bound=":
            bound = val
        else:
            values[parts[0]] = val
    if status is None:
        raise ParseError("solution file has no status line")
    return status, values, objective, bound


def parse_cbc(text: str) -> tuple[str, dict, Optional[float], Optional[float]]:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty CBC solution file")
    head = lines[0].strip()
    low = head.lower()
    if "infeasible" in low:
        return INFEASIBLE, {}, None, None
    if low.startswith("optimal"):
        status = OPTIMAL
    elif low.startswith("stopped") or "time" in low:
        status = TIME_LIMIT
    else:
        raise ParseError(f"unrecognised CBC status line {head!r}")
    m = re.search(r"objective value\s+(\S+)", head)
    objective = float(m.group(1)) if m else None
    values = {}
    for raw in lines[1:]:
        parts = raw.replace("**", " ").split()
        if not parts:
            continue
        if len(parts) < 3:
            raise ParseError(f"bad CBC solution line {raw!r}")
        try:
            values[parts[1]] = float(parts[2])
        except ValueError as e:
            raise ParseError(f"bad CBC solution line {raw!r}") from e
    return status, values, objective, None


def parse_solution(text: str):
    first = next((ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")), "")
    if first.strip().startswith("=status="):
        return parse_plain(text)
    return parse_cbc(text)


def write_cbc_start(model: MilpModel, warm_start: dict) -> str:
    """CBC ``mips`` file; variables without a value are left out so CBC completes them."""
    lines = ["Stopped on iterations - objective value 0"]
    for v in model.variables:
        if v.name in warm_start:
            lines.append(f"{v.index} {v.name} {fmt_num(warm_start[v.name])} 0")
    return "\n".join(lines) + "\n"


def write_plain_start(model: MilpModel, warm_start: dict) -> str:
    lines = ["=status= FEASIBLE"]
    for v in model.variables:
        if v.name in warm_start:
            lines.append(f"{v.name} {fmt_num(warm_start[v.name])}")
    return "\n".join(lines) + "\n"


# -- driver ----------------------------------------------------------------


def solve_external(model: MilpModel, params: Optional[SolveParams] = None, command: Optional[str] = None,
                   warm_start: Optional[dict] = None) -> Solution:
    """Export, run, parse.  The objective is re-evaluated from the values."""
    params = params or SolveParams()
    template = command or default_command()
    gap = params.gap_for("external")
    with tempfile.TemporaryDirectory(prefix="gridplan-") as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        lp.write_text(export_lp(model))
        start = cbc_start = None
        if warm_start and "{start}" in template:
            start = Path(tmp) / "start.txt"
            start.write_text(write_plain_start(model, warm_start))
        if warm_start and "{cbc_start}" in template:
            cbc_start = Path(tmp) / "start.sol"
            cbc_start.write_text(write_cbc_start(model, warm_start))
        cbc = find_cbc() if "{cbc}" in template else None
        values = {
            "cbc": cbc, "python": sys.executable, "lp": str(lp), "sol": str(sol),
            "time_limit": f"{params.time_limit_s:g}", "gap": f"{gap:g}", "seed": str(params.seed),
            "threads": str(params.threads), "start": str(start) if start else None,
            "cbc_start": str(cbc_start) if cbc_start else None,
        }
        if "{cbc}" in template and cbc is None:
            raise SolverNotFound("CBC executable not found")
        argv = render_command(template, values)
        t0 = time.monotonic()
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=params.time_limit_s * 2 + 60)
        except FileNotFoundError as e:
            raise SolverNotFound(f"cannot execute {argv[0]!r}") from e
        except subprocess.TimeoutExpired as e:
            raise SolverCrashed(f"solver did not stop within {params.time_limit_s * 2 + 60:g}s") from e
        wall = time.monotonic() - t0
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout)[-2000:]
            raise SolverCrashed(f"solver exited with status {proc.returncode}: {tail}")
        if not sol.exists():
            raise SolverCrashed(f"solver wrote no solution file: {proc.stdout[-2000:]}")
        status, vals, _, bound = parse_solution(sol.read_text())
    if status == INFEASIBLE or not vals:
        return Solution(status, {}, None, bound, wall, message=proc.stdout[-500:])
    full = model.polish({v.name: vals.get(v.name, 0.0) for v in model.variables})
    objective = model.evaluate(full)
    if status == TIME_LIMIT and model.violations(full, 1e-6):
        return Solution(TIME_LIMIT, {}, None, bound, wall, message="no feasible incumbent")
    return Solution(status, full, objective, bound, wall)
