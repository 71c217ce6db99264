"""Solver backends for :class:`gridplan.model.MilpModel`.

``builtin`` is an exact 0-1 branch-and-bound meant for desk-scale models
and used as the test oracle; ``external`` writes an LP file and runs any
LP-reading MILP solver through a command template.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

OPTIMAL = "Optimal"
FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
TIME_LIMIT = "TimeLimit"
STATUSES = (OPTIMAL, FEASIBLE, INFEASIBLE, TIME_LIMIT)


@dataclass(frozen=True)
class SolveParams:
    time_limit_s: float = 60.0
    gap_tolerance: Optional[float] = None  # None -> backend default
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.time_limit_s > 0:
            raise ValueError("time_limit_s must be > 0")
        if self.gap_tolerance is not None and not (0 <= self.gap_tolerance < 1):
            raise ValueError("gap_tolerance must lie in [0, 1)")

    def gap_for(self, backend: str) -> float:
        if self.gap_tolerance is not None:
            return self.gap_tolerance
        return 0.0 if backend == "builtin" else 0.01


@dataclass
class Solution:
    status: str
    values: dict = field(default_factory=dict)
    objective: Optional[float] = None
    bound: Optional[float] = None
    wall_time_s: float = 0.0
    message: str = ""
    nodes: int = 0

    @property
    def has_solution(self) -> bool:
        return self.status != INFEASIBLE and bool(self.values)


def solve(model, params: Optional[SolveParams] = None, backend: str = "builtin",
          solver_command: Optional[str] = None, warm_start: Optional[dict] = None) -> Solution:
    params = params or SolveParams()
    if warm_start is None:
        warm_start = model.warm_start or None
    if backend == "builtin":
        from .builtin import solve_builtin

        return solve_builtin(model, params, warm_start=warm_start)
    if backend == "external":
        from .external import solve_external

        return solve_external(model, params, solver_command, warm_start=warm_start)
    raise ValueError(f"unknown backend {backend!r}")
