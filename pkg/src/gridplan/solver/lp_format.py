"""CPLEX LP dialect writer and reader.

Output is deterministic: rows keep model order, terms inside a row and
every declaration section are sorted by variable name, integral numbers
are printed without exponent and other numbers with ``repr`` precision.
"""

from __future__ import annotations

import math
import re

from ..errors import ParseError
from ..model import BINARY, CONTINUOUS, EQ, GE, INF, INTEGER, LE, LinExpr, MilpModel

TERMS_PER_LINE = 8


def fmt_num(x: float) -> str:
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _terms(coefs: dict, names: list, const: float = 0.0) -> list[str]:
    items = sorted(((names[k], v) for k, v in coefs.items() if v != 0), key=lambda t: t[0])
    out = [f"{'-' if v < 0 else '+'} {fmt_num(abs(v))} {n}" for n, v in items]
    if const:
        out.append(f"{'-' if const < 0 else '+'} {fmt_num(abs(const))}")
    return out


def _wrap(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines = []
    for s in range(0, max(len(parts), 1), TERMS_PER_LINE):
        chunk = " ".join(parts[s:s + TERMS_PER_LINE])
        lines.append((f" {head} " if s == 0 else "   ") + chunk)
    if tail:
        lines[-1] += " " + tail
    return lines


def export_lp(model: MilpModel) -> str:
    names = [v.name for v in model.variables]
    out = ["\\ gridplan model"]
    for key in ("phase", "scene_digest", "W", "L"):
        if key in model.metadata:
            out.append(f"\\ {key}: {model.metadata[key]}")
    out.append("Minimize")
    # empty rows need a placeholder term; pick a name independent of variable order
    filler = f"+ 0 {min(names)}" if names else "+ 0"
    coefs, const = model.merged_objective()
    parts = _terms(coefs, names, const) or [filler]
    out.extend(_wrap("obj:", parts))
    out.append("Subject To")
    for c in model.constraints:
        parts = _terms(c.terms, names) or [filler]
        out.extend(_wrap(f"{c.name}:", parts, f"{c.sense} {fmt_num(c.rhs)}"))
    out.append("Bounds")
    by_name = sorted(model.variables, key=lambda v: v.name)
    for v in by_name:
        if v.kind == BINARY:
            continue
        if v.lo == 0 and v.hi == INF:
            out.append(f" {v.name} >= 0")
        elif v.lo == -INF and v.hi == INF:
            out.append(f" {v.name} free")
        else:
            out.append(f" {fmt_num(v.lo)} <= {v.name} <= {fmt_num(v.hi)}")
    gens = [v.name for v in by_name if v.kind == INTEGER]
    bins = [v.name for v in by_name if v.kind == BINARY]
    if gens:
        out.append("Generals")
        out.extend(" " + n for n in gens)
    if bins:
        out.append("Binaries")
        out.extend(" " + n for n in bins)
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# reader

_SECTION = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "integers": "gen", "integer": "gen",
    "binaries": "bin", "binary": "bin",
    "end": "end",
}
_SENSES = {"<=": LE, "=<": LE, "<": LE, ">=": GE, "=>": GE, ">": GE, "=": EQ}
_NUM_RE = re.compile(r"^[+-]?((\d+(\.\d*)?)|(\.\d+))([eE][+-]?\d+)?$|^[+-]?inf(inity)?$", re.I)


def _num(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return INF
    if t in ("-inf", "-infinity"):
        return -INF
    return float(tok)


def _parse_expr(tokens: list[str]):
    """Parse ``[+|-] [coef] name ...`` into (dict name->coef, constant)."""
    terms: dict[str, float] = {}
    const = 0.0
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in ("+", "-"):
            sign = sign * (-1.0 if tok == "-" else 1.0)
            continue
        if _NUM_RE.match(tok):
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = _num(tok)
            continue
        c = sign * (1.0 if coef is None else coef)
        terms[tok] = terms.get(tok, 0.0) + c
        sign, coef = 1.0, None
    if coef is not None:
        const += sign * coef
    return terms, const


def _tokenize(line: str) -> list[str]:
    line = re.sub(r"(<=|>=|=<|=>|[<>=:+\-])", r" \1 ", line)
    toks = line.split()
    # re-join exponents split by the sign rule ("1e", "-", "5")
    out: list[str] = []
    for t in toks:
        if out and len(out) >= 2 and out[-1] in "+-" and re.match(r"^\d", t) and re.match(r"^\d+(\.\d*)?[eE]$", out[-2]):
            sgn = out.pop()
            out[-1] = out[-1] + sgn + t
            continue
        out.append(t)
    return out


def _merge_signs(toks: list[str]) -> list[str]:
    out: list[str] = []
    for t in toks:
        if out and out[-1] in ("+", "-") and (len(out) == 1 or out[-2] in _SENSES) and _NUM_RE.match(t):
            out[-1] = out[-1] + t
        else:
            out.append(t)
    return out


def import_lp(text: str) -> MilpModel:
    """Read an LP document written by :func:`export_lp` (or a compatible subset)."""
    section = None
    obj_tokens: list[str] = []
    rows: list[list[str]] = []
    cur: list[str] = []
    bounds: list[str] = []
    gens: list[str] = []
    bins: list[str] = []
    meta = {}
    for raw in text.splitlines():
        if raw.startswith("\\"):
            m = re.match(r"\\\s*(\w+):\s*(.*)$", raw)
            if m:
                meta[m.group(1)] = m.group(2)
            continue
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTION:
            section = _SECTION[key]
            continue
        if section == "obj":
            obj_tokens.extend(_tokenize(line))
        elif section == "st":
            toks = _tokenize(line)
            cur.extend(toks)
            if any(t in _SENSES for t in cur) and _NUM_RE.match(cur[-1]):
                rows.append(cur)
                cur = []
        elif section == "bounds":
            bounds.append(line)
        elif section == "gen":
            gens.extend(line.split())
        elif section == "bin":
            bins.extend(line.split())
        elif section == "end":
            break
        else:
            raise ParseError(f"content outside any section: {raw!r}")
    if cur:
        raise ParseError(f"unterminated constraint: {' '.join(cur)}")

    model = MilpModel()
    for k, v in meta.items():
        model.metadata[k] = int(v) if v.lstrip("-").isdigit() else v
    kinds: dict[str, str] = {}
    domain: dict[str, list[float]] = {}
    order: list[str] = []

    def see(name):
        if name not in kinds:
            kinds[name] = CONTINUOUS
            domain[name] = [0.0, INF]
            order.append(name)

    if obj_tokens and obj_tokens[1:2] == [":"]:
        obj_tokens = obj_tokens[2:]
    obj_terms, obj_const = _parse_expr(obj_tokens)
    for n in obj_terms:
        see(n)
    parsed_rows = []
    for toks in rows:
        name = None
        if len(toks) > 1 and toks[1] == ":":
            name, toks = toks[0], toks[2:]
        toks = _merge_signs(toks)
        si = next(i for i, t in enumerate(toks) if t in _SENSES)
        terms, const = _parse_expr(toks[:si])
        rhs = _num(toks[si + 1])
        for n in terms:
            see(n)
        parsed_rows.append((name, terms, _SENSES[toks[si]], rhs - const))
    for line in bounds:
        toks = _merge_signs(_tokenize(line))
        if len(toks) == 2 and toks[1].lower() == "free":
            see(toks[0])
            domain[toks[0]] = [-INF, INF]
        elif len(toks) == 5:
            see(toks[2])
            domain[toks[2]] = [_num(toks[0]), _num(toks[4])]
        elif len(toks) == 3:
            nm, op, val = toks
            see(nm)
            if _SENSES.get(op) == GE:
                domain[nm][0] = _num(val)
            elif _SENSES.get(op) == LE:
                domain[nm][1] = _num(val)
            else:
                domain[nm] = [_num(val), _num(val)]
        else:
            raise ParseError(f"cannot parse bound {line!r}")
    for n in gens:
        see(n)
        kinds[n] = INTEGER
    for n in bins:
        see(n)
        kinds[n] = BINARY
    refs = {}
    for n in order:
        lo, hi = domain[n]
        refs[n] = model.add_var(n, kinds[n], lo, hi)
    model.set_term("objective", 1.0, LinExpr({refs[n].index: c for n, c in obj_terms.items()}, obj_const))
    for name, terms, sense, rhs in parsed_rows:
        family = name.rsplit("_", 1)[0] if name and "_" in name else "c"
        expr = LinExpr({refs[n].index: c for n, c in terms.items()})
        model.add_constr(expr, sense, rhs, family, name)
    return model


def models_equal(a: MilpModel, b: MilpModel, tol: float = 0.0) -> bool:
    """Structural equality of variables, rows and merged objective (by name)."""
    va = sorted((v.name, v.kind, v.lo, v.hi) for v in a.variables)
    vb = sorted((v.name, v.kind, v.lo, v.hi) for v in b.variables)
    if va != vb:
        return False

    def named(m, coefs):
        names = [v.name for v in m.variables]
        return {names[k]: c for k, c in coefs.items() if c != 0}

    def close(x, y):
        return math.isclose(x, y, rel_tol=tol, abs_tol=tol) if tol else x == y

    oa, ca = a.merged_objective()
    ob, cb = b.merged_objective()
    da, db = named(a, oa), named(b, ob)
    if da.keys() != db.keys() or not all(close(da[k], db[k]) for k in da) or not close(ca, cb):
        return False
    if len(a.constraints) != len(b.constraints):
        return False
    for r, s in zip(a.constraints, b.constraints):
        ta, tb = named(a, r.terms), named(b, s.terms)
        if r.name != s.name or r.sense != s.sense or not close(r.rhs, s.rhs):
            return False
        if ta.keys() != tb.keys() or not all(close(ta[k], tb[k]) for k in ta):
            return False
    return True
