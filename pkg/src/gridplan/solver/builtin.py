"""Exact depth-first branch-and-bound for small 0-1 models.

Search branches on binary variables first (most-constrained first, ties by
name), then on the remaining integer variables value by value.  Every node
runs activity-based bound propagation over all rows except the flow rows.
Flow variables are never branched: a relaxed reachability test prunes
nodes early, and at integer leaves feasibility of the flow system is
certified by breadth-first search from the single source.  Continuous
variables outside the flow block must be epigraph variables (nonnegative
objective coefficient, only bounded from below by rows), so at a leaf
their optimal value is the propagated lower bound.
"""

from __future__ import annotations

import math
import sys
import time
from collections import deque
from typing import Optional

from ..errors import BudgetExceeded, SolverError
from ..model import BINARY, CONTINUOUS, EQ, GE, INF, LE, MilpModel
from . import INFEASIBLE, OPTIMAL, TIME_LIMIT, Solution, SolveParams

DEFAULT_BUDGET = 4000
EPS = 1e-9
FEAS_TOL = 1e-6


class _Infeasible(Exception):
    pass


class _FlowNetwork:
    """Arcs, node balances and capacities recovered from the flow rows."""

    def __init__(self, model: MilpModel, flow_vars: set, flow_rows: list):
        self.arcs = {}  # flow var -> [tail node, head node]
        self.node_rows = []  # (const rhs, [(var, coef)] non-flow terms) per balance node
        self.caps = {}  # flow var -> list of (rhs, [(var, coef)])
        for c in flow_rows:
            fl = [(v, a) for v, a in c.terms.items() if v in flow_vars]
            other = [(v, a) for v, a in c.terms.items() if v not in flow_vars]
            if c.sense == EQ:
                node = len(self.node_rows)
                self.node_rows.append((c.rhs, other))
                for v, a in fl:
                    ends = self.arcs.setdefault(v, [None, None])
                    if a == 1:
                        ends[0] = node
                    elif a == -1:
                        ends[1] = node
                    else:
                        raise SolverError(f"flow row {c.name}: unsupported coefficient {a}")
            elif c.sense == LE and len(fl) == 1 and fl[0][1] == 1:
                self.caps.setdefault(fl[0][0], []).append((c.rhs, other))
            else:
                raise SolverError(f"flow row {c.name} has an unsupported shape")
        for v, ends in self.arcs.items():
            if None in ends:
                raise SolverError("flow variable without both endpoints")
        self.out_arcs = [[] for _ in self.node_rows]
        for v, (t, h) in self.arcs.items():
            self.out_arcs[t].append((v, h))

    @staticmethod
    def _range(rhs, terms, lo, hi):
        # value range of rhs - sum(terms)
        mn = mx = rhs
        for v, a in terms:
            if a > 0:
                mn -= a * hi[v]
                mx -= a * lo[v]
            else:
                mn -= a * lo[v]
                mx -= a * hi[v]
        return mn, mx

    def check(self, lo, hi, exact: bool) -> bool:
        """Relaxed reachability test; exact at integer leaves."""
        n = len(self.node_rows)
        supply = [self._range(r, t, lo, hi) for r, t in self.node_rows]
        open_arc = {}
        for v in self.arcs:
            cap_hi = min((self._range(r, t, lo, hi)[1] for r, t in self.caps.get(v, ())), default=INF)
            open_arc[v] = cap_hi > EPS
        sources = [i for i in range(n) if supply[i][1] > EPS]
        if exact:
            if len(sources) > 1:
                raise SolverError("flow network with several sources is not supported")
            total = sum(s[0] for s in supply)
            if abs(total) > FEAS_TOL:
                return False
            if sources:
                need = supply[sources[0]][0]
                for v in self.arcs:
                    if open_arc[v]:
                        cap = min((self._range(r, t, lo, hi)[0] for r, t in self.caps.get(v, ())), default=INF)
                        if cap < need - FEAS_TOL:
                            raise SolverError("flow capacity below total supply; BFS certificate not valid")
        seen = [False] * n
        todo = deque(sources)
        for s in sources:
            seen[s] = True
        while todo:
            u = todo.popleft()
            for v, h in self.out_arcs[u]:
                if open_arc[v] and not seen[h]:
                    seen[h] = True
                    todo.append(h)
        for i in range(n):
            if supply[i][1] < -EPS and not seen[i]:
                return False
        return True

    def route(self, values) -> dict:
        """A feasible flow for fixed integer values (BFS tree routing)."""
        lo = hi = values
        n = len(self.node_rows)
        supply = [self._range(r, t, lo, hi)[0] for r, t in self.node_rows]
        flows = {v: 0.0 for v in self.arcs}
        sources = [i for i in range(n) if supply[i] > EPS]
        if not sources:
            return flows
        src = sources[0]
        parent = {src: None}
        order = [src]
        todo = deque([src])
        while todo:
            u = todo.popleft()
            for v, h in self.out_arcs[u]:
                cap = min((self._range(r, t, lo, hi)[0] for r, t in self.caps.get(v, ())), default=INF)
                if cap > EPS and h not in parent:
                    parent[h] = (u, v)
                    order.append(h)
                    todo.append(h)
        demand = {u: -supply[u] if supply[u] < 0 else 0.0 for u in order}
        for u in reversed(order):
            p = parent[u]
            if p is None:
                continue
            pu, v = p
            flows[v] = demand[u]
            demand[pu] += demand[u]
        return flows


class _Search:
    def __init__(self, model: MilpModel, params: SolveParams, warm_start: Optional[dict], budget: int):
        self.model = model
        self.params = params
        self.gap = params.gap_for("builtin")
        n = len(model.variables)
        self.lo = [float(v.lo) for v in model.variables]
        self.hi = [float(v.hi) for v in model.variables]
        self.is_int = [v.kind != CONTINUOUS for v in model.variables]
        n_bin = sum(1 for v in model.variables if v.kind == BINARY)
        if n_bin > budget:
            raise BudgetExceeded(f"{n_bin} binary variables exceed the builtin budget of {budget}")

        flow_fams = set(model.metadata.get("flow_families", ()))
        flow_rows = [c for c in model.constraints if c.family in flow_fams]
        flow_vars = {k for c in flow_rows for k in c.terms if model.variables[k].kind == CONTINUOUS}
        self.flow_vars = flow_vars
        self.net = _FlowNetwork(model, flow_vars, flow_rows) if flow_rows else None

        self.rows = []
        self.var_rows = [[] for _ in range(n)]
        for c in model.constraints:
            if c.family in flow_fams:
                continue
            if any(k in flow_vars for k in c.terms):
                raise SolverError(f"flow variable used outside the flow rows ({c.name})")
            idx = tuple(c.terms)
            coef = tuple(c.terms[k] for k in idx)
            L = c.rhs if c.sense in (GE, EQ) else -INF
            U = c.rhs if c.sense in (LE, EQ) else INF
            r = len(self.rows)
            self.rows.append((idx, coef, L, U))
            for k in idx:
                self.var_rows[k].append(r)

        coefs, self.obj_const = model.merged_objective()
        self.obj = sorted(coefs.items())
        for k, a in self.obj:
            if not self.is_int[k] and (a < 0 or k in flow_vars):
                raise SolverError(f"continuous variable {model.variables[k].name} has an unsupported objective sign")
        self.cont = [k for k in range(n) if not self.is_int[k] and k not in flow_vars]

        def rank(v):
            return (-len(self.var_rows[v.index]), v.name)

        bins = sorted((v for v in model.variables if v.kind == BINARY), key=rank)
        ints = sorted((v for v in model.variables if v.kind not in (BINARY, CONTINUOUS)), key=rank)
        self.order = [v.index for v in bins + ints]
        self.hint = {}
        for name, val in (warm_start or {}).items():
            if model.has_var(name):
                self.hint[model.var(name).index] = float(val)

        self.trail = []
        self.best_obj = INF
        self.best = None
        self.nodes = 0
        self.deadline = time.monotonic() + params.time_limit_s
        self.timed_out = False
        self.root_bound = None

    # -- propagation -------------------------------------------------------
    def _set(self, v, lo, hi):
        self.trail.append((v, self.lo[v], self.hi[v]))
        self.lo[v] = lo
        self.hi[v] = hi

    def undo(self, mark):
        trail, lo, hi = self.trail, self.lo, self.hi
        while len(trail) > mark:
            v, l, h = trail.pop()
            lo[v] = l
            hi[v] = h

    def propagate(self, rows) -> None:
        lo, hi, is_int = self.lo, self.hi, self.is_int
        queue = deque(rows)
        queued = set(rows)
        while queue:
            r = queue.popleft()
            queued.discard(r)
            idx, coef, L, U = self.rows[r]
            mn = mx = 0.0
            mn_inf = mx_inf = 0
            for v, a in zip(idx, coef):
                if a > 0:
                    l, h = lo[v], hi[v]
                    if l == -INF:
                        mn_inf += 1
                    else:
                        mn += a * l
                    if h == INF:
                        mx_inf += 1
                    else:
                        mx += a * h
                else:
                    l, h = hi[v], lo[v]
                    if l == INF:
                        mn_inf += 1
                    else:
                        mn += a * l
                    if h == -INF:
                        mx_inf += 1
                    else:
                        mx += a * h
            if (mn_inf == 0 and mn > U + FEAS_TOL) or (mx_inf == 0 and mx < L - FEAS_TOL):
                raise _Infeasible
            for v, a in zip(idx, coef):
                l, h = lo[v], hi[v]
                if l == h:
                    continue
                nl, nh = l, h
                # contribution of v itself to the activity bounds
                if a > 0:
                    own_mn, own_mx = a * l, a * h
                else:
                    own_mn, own_mx = a * h, a * l
                if U < INF:
                    if mn_inf == 0:
                        rest = mn - own_mn
                    elif mn_inf == 1 and own_mn in (INF, -INF):
                        rest = mn
                    else:
                        rest = None
                    if rest is not None:
                        bound = (U - rest) / a
                        if a > 0:
                            nh = min(nh, bound)
                        else:
                            nl = max(nl, bound)
                if L > -INF:
                    if mx_inf == 0:
                        rest = mx - own_mx
                    elif mx_inf == 1 and own_mx in (INF, -INF):
                        rest = mx
                    else:
                        rest = None
                    if rest is not None:
                        bound = (L - rest) / a
                        if a > 0:
                            nl = max(nl, bound)
                        else:
                            nh = min(nh, bound)
                if is_int[v]:
                    nl = math.ceil(nl - FEAS_TOL) if nl > -INF else nl
                    nh = math.floor(nh + FEAS_TOL) if nh < INF else nh
                    changed = nl > l or nh < h
                else:
                    changed = nl > l + 1e-9 or nh < h - 1e-9
                if not changed:
                    continue
                if nl > nh + FEAS_TOL:
                    raise _Infeasible
                if not is_int[v] and nl > nh:
                    nl = nh
                self._set(v, max(nl, l), min(nh, h))
                for r2 in self.var_rows[v]:
                    if r2 != r and r2 not in queued:
                        queued.add(r2)
                        queue.append(r2)
                # row activity is stale now; requeue this row as well
                if r not in queued:
                    queued.add(r)
                    queue.append(r)
                break

    def bound(self) -> float:
        lo, hi = self.lo, self.hi
        s = self.obj_const
        for k, a in self.obj:
            s += a * (lo[k] if a > 0 else hi[k])
        return s

    # -- search ------------------------------------------------------------
    def run(self) -> Solution:
        t0 = time.monotonic()
        try:
            self.propagate(range(len(self.rows)))
            self.root_bound = self.bound()
            self._dfs(0)
        except _Infeasible:
            pass
        wall = time.monotonic() - t0
        if self.best is None:
            status = TIME_LIMIT if self.timed_out else INFEASIBLE
            return Solution(status, {}, None, self.root_bound, wall, nodes=self.nodes)
        status = TIME_LIMIT if self.timed_out else OPTIMAL
        bound = self.best_obj if status == OPTIMAL else self.root_bound
        return Solution(status, self.best, self.best_obj, bound, wall, nodes=self.nodes)

    def _cutoff(self) -> float:
        if self.best_obj == INF:
            return INF
        return self.best_obj - max(EPS, self.gap * max(1.0, abs(self.best_obj)))

    def _dfs(self, pos: int) -> None:
        self.nodes += 1
        if self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            self.timed_out = True
            raise _Infeasible
        if self.bound() >= self._cutoff() - EPS and self.best_obj < INF:
            return
        if self.net is not None and not self.net.check(self.lo, self.hi, exact=False):
            return
        order, lo, hi = self.order, self.lo, self.hi
        while pos < len(order) and lo[order[pos]] == hi[order[pos]]:
            pos += 1
        if pos == len(order):
            self._leaf()
            return
        v = order[pos]
        l, h = int(lo[v]), int(hi[v])
        vals = list(range(l, h + 1))
        hv = self.hint.get(v)
        if hv is not None and l <= hv <= h:
            vals.remove(int(hv))
            vals.insert(0, int(hv))
        for val in vals:
            mark = len(self.trail)
            try:
                self._set(v, float(val), float(val))
                self.propagate(self.var_rows[v])
                self._dfs(pos + 1)
            except _Infeasible:
                if self.timed_out:
                    self.undo(mark)
                    raise
            self.undo(mark)

    def _leaf(self) -> None:
        lo, hi = self.lo, self.hi
        vals = list(lo)
        for k in self.cont:
            if lo[k] == -INF:
                raise SolverError(f"continuous variable {self.model.variables[k].name} is unbounded below")
        for idx, coef, L, U in self.rows:
            act = sum(a * vals[k] for k, a in zip(idx, coef))
            if act < L - FEAS_TOL or act > U + FEAS_TOL:
                raise SolverError("leaf assignment violates a row; model outside the supported class")
        if self.net is not None and not self.net.check(lo, hi, exact=True):
            return
        obj = self.obj_const + sum(a * vals[k] for k, a in self.obj)
        if obj < self._cutoff() or self.best is None:
            if self.best is not None and obj >= self.best_obj:
                return
            names = [v.name for v in self.model.variables]
            if self.net is not None:
                for k, f in self.net.route(vals).items():
                    vals[k] = f
            self.best_obj = obj
            self.best = {names[k]: _clean(vals[k]) for k in range(len(vals))}


def _clean(x: float) -> float:
    r = round(x)
    return float(r) if abs(x - r) < 1e-9 else x


def solve_builtin(model: MilpModel, params: Optional[SolveParams] = None, warm_start: Optional[dict] = None,
                  budget: int = DEFAULT_BUDGET) -> Solution:
    """Solve ``model`` exactly; see the module docstring for the supported class."""
    params = params or SolveParams()
    old = sys.getrecursionlimit()
    search = _Search(model, params, warm_start, budget)
    sys.setrecursionlimit(max(old, 4 * len(search.order) + 1000))
    try:
        return search.run()
    finally:
        sys.setrecursionlimit(old)
