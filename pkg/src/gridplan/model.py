"""Solver-agnostic MILP container: variables, linear rows, weighted objective terms."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .errors import BuildError

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
LE, EQ, GE = "<=", "=", ">="
INF = float("inf")

_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class VarRef:
    index: int
    name: str
    kind: str
    lo: float
    hi: float

    # arithmetic sugar so encoders read like the maths
    def _e(self) -> "LinExpr":
        return LinExpr({self.index: 1.0})

    def __add__(self, o):
        return self._e() + o

    __radd__ = __add__

    def __sub__(self, o):
        return self._e() - o

    def __rsub__(self, o):
        return (-1) * self._e() + o

    def __mul__(self, c):
        return self._e() * c

    __rmul__ = __mul__

    def __neg__(self):
        return self._e() * -1


Number = Union[int, float]
ExprLike = Union["LinExpr", VarRef, int, float]


class LinExpr:
    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[dict] = None, const: float = 0.0):
        self.terms = dict(terms) if terms else {}
        self.const = const

    @staticmethod
    def of(x: ExprLike) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, VarRef):
            return LinExpr({x.index: 1.0})
        return LinExpr(None, float(x))

    @staticmethod
    def sum(items: Iterable[ExprLike]) -> "LinExpr":
        out = LinExpr()
        for it in items:
            out.iadd(it)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def iadd(self, o: ExprLike, scale: float = 1.0) -> "LinExpr":
        if isinstance(o, VarRef):
            self.terms[o.index] = self.terms.get(o.index, 0.0) + scale
        elif isinstance(o, LinExpr):
            for k, v in o.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + scale * v
            self.const += scale * o.const
        else:
            self.const += scale * o
        return self

    def __add__(self, o):
        return self.copy().iadd(o)

    __radd__ = __add__

    def __sub__(self, o):
        return self.copy().iadd(o, -1.0)

    def __rsub__(self, o):
        return (self * -1).iadd(o)

    def __mul__(self, c: Number):
        return LinExpr({k: v * c for k, v in self.terms.items()}, self.const * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def value(self, x: Mapping[int, float]) -> float:
        return self.const + sum(v * x[k] for k, v in self.terms.items())


@dataclass
class Constraint:
    name: str
    terms: dict  # var index -> coefficient
    sense: str
    rhs: float
    family: str


@dataclass
class ObjectiveTerm:
    weight: float
    expr: LinExpr


@dataclass
class MilpModel:
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)  # term name -> ObjectiveTerm
    big_m: float = 0
    metadata: dict = field(default_factory=dict)
    warm_start: dict = field(default_factory=dict)  # var name -> value
    _by_name: dict = field(default_factory=dict, repr=False)
    _family_count: dict = field(default_factory=dict, repr=False)

    # -- variables ---------------------------------------------------------
    def add_var(self, name: str, kind: str = BINARY, lo: float = 0, hi: float = 1) -> VarRef:
        if not _NAME_RE.match(name):
            raise BuildError(f"illegal variable name {name!r}")
        if name in self._by_name:
            raise BuildError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lo, hi = 0, 1
        if lo > hi:
            raise BuildError(f"variable {name} has empty domain [{lo}, {hi}]")
        v = VarRef(len(self.variables), name, kind, lo, hi)
        self.variables.append(v)
        self._by_name[name] = v
        return v

    def var(self, name: str) -> VarRef:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    # -- constraints -------------------------------------------------------
    def add_constr(self, lhs: ExprLike, sense: str, rhs: ExprLike = 0, family: str = "c",
                   name: Optional[str] = None) -> Constraint:
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        terms = {k: v for k, v in expr.terms.items() if v != 0}
        if sense not in (LE, EQ, GE):
            raise BuildError(f"bad sense {sense!r}")
        if name is None:
            n = self._family_count.get(family, 0)
            self._family_count[family] = n + 1
            name = f"{family}_{n}"
        c = Constraint(name, terms, sense, _clean(-expr.const), family)
        self.constraints.append(c)
        return c

    # -- objective ---------------------------------------------------------
    def set_term(self, name: str, weight: float, expr: ExprLike) -> None:
        self.objective[name] = ObjectiveTerm(float(weight), LinExpr.of(expr))

    def merged_objective(self) -> tuple[dict, float]:
        coefs: dict[int, float] = {}
        const = 0.0
        for t in self.objective.values():
            if t.weight == 0:
                continue
            for k, v in t.expr.terms.items():
                coefs[k] = coefs.get(k, 0.0) + t.weight * v
            const += t.weight * t.expr.const
        return {k: v for k, v in coefs.items() if v != 0}, const

    # -- evaluation --------------------------------------------------------
    def values_by_index(self, values: Mapping[str, float]) -> dict[int, float]:
        return {v.index: float(values.get(v.name, 0.0)) for v in self.variables}

    def evaluate_terms(self, values: Mapping[str, float]) -> dict[str, float]:
        x = self.values_by_index(values)
        return {name: t.expr.value(x) for name, t in self.objective.items()}

    def evaluate(self, values: Mapping[str, float]) -> float:
        x = self.values_by_index(values)
        return sum(t.weight * t.expr.value(x) for t in self.objective.values())

    def violations(self, values: Mapping[str, float], tol: float = 1e-6) -> list[str]:
        """Names of rows and bounds violated by ``values``."""
        x = self.values_by_index(values)
        bad = []
        for v in self.variables:
            val = x[v.index]
            if val < v.lo - tol or val > v.hi + tol:
                bad.append(f"bound:{v.name}")
            elif v.kind != CONTINUOUS and abs(val - round(val)) > tol:
                bad.append(f"integrality:{v.name}")
        for c in self.constraints:
            act = sum(a * x[k] for k, a in c.terms.items())
            if (c.sense == LE and act > c.rhs + tol) or (c.sense == GE and act < c.rhs - tol) \
                    or (c.sense == EQ and abs(act - c.rhs) > tol):
                bad.append(c.name)
        return bad

    def polish(self, values: Mapping[str, float]) -> dict[str, float]:
        """Round integer variables and recompute epigraph variables exactly.

        An epigraph variable is continuous, has a positive objective
        coefficient and is bounded from below only by rows whose other
        variables are all integral; at an optimum it sits on the largest of
        those lower bounds.  Solver output printed with limited precision is
        snapped back onto that value.  Other variables are left as given.
        """
        x = self.values_by_index(values)
        for v in self.variables:
            if v.kind != CONTINUOUS:
                x[v.index] = float(round(x[v.index]))
        coefs, _ = self.merged_objective()
        lower: dict[int, float] = {}
        blocked = set()
        for c in self.constraints:
            cont = [k for k in c.terms if self.variables[k].kind == CONTINUOUS]
            if len(cont) != 1:
                blocked.update(cont)
                continue
            k = cont[0]
            a = c.terms[k]
            if c.sense == EQ or (c.sense == GE) != (a > 0):
                blocked.add(k)
                continue
            rest = sum(b * x[m] for m, b in c.terms.items() if m != k)
            lower[k] = max(lower.get(k, -INF), (c.rhs - rest) / a)
        for k, lo in lower.items():
            if k in blocked or coefs.get(k, 0) <= 0:
                continue
            x[k] = max(lo, self.variables[k].lo)
        return {v.name: x[v.index] for v in self.variables}

    def counts(self) -> dict[str, int]:
        out = {BINARY: 0, INTEGER: 0, CONTINUOUS: 0}
        for v in self.variables:
            out[v.kind] += 1
        out["constraints"] = len(self.constraints)
        return out


def _clean(x: float) -> float:
    r = round(x)
    return float(r) if abs(x - r) < 1e-12 else x
