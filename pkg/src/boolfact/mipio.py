"""
MPS / LP writers and readers for :class:`~boolfact.model.MipModel`, and the
plain ``<name> <value>`` solution format used to bring results back from an
external solver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .boolmat import BooleanMatrix, Factorization
from .model import EQ, GE, LE, MipModel

SOLUTION_TOL = 1e-6

_MPS_SENSE = {LE: "L", GE: "G", EQ: "E"}
_MPS_SENSE_INV = {"L": LE, "G": GE, "E": EQ}


class SolutionError(ValueError):
    pass


def _num(v: float) -> str:
    return repr(float(v))


def _columns(model: MipModel) -> dict:
    cols = {v.name: [] for v in model.variables}
    for con in model.constraints:
        for v, coef in con.terms:
            cols[v.name].append((con.name, coef))
    return cols


def write_mps(model: MipModel) -> str:
    """Free-format MPS.  Binary variables are wrapped in INTORG/INTEND markers and bounded ``BV``."""
    out = [f"NAME {model.name}", "ROWS", " N  obj"]
    out.extend(f" {_MPS_SENSE[c.sense]}  {c.name}" for c in model.constraints)
    out.append("COLUMNS")
    cols = _columns(model)
    in_block = False
    marker = 0
    for v in model.variables:
        if v.binary and not in_block:
            out.append(f"    MARKER{marker:04d}  'MARKER'  'INTORG'")
            in_block = True
        elif not v.binary and in_block:
            out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")
            in_block = False
            marker += 1
        coef = model.objective.get(v.name, 0.0)
        if coef:
            out.append(f"    {v.name}  obj  {_num(coef)}")
        for row, a in cols[v.name]:
            out.append(f"    {v.name}  {row}  {_num(a)}")
    if in_block:
        out.append(f"    MARKER{marker:04d}  'MARKER'  'INTEND'")
    out.append("RHS")
    out.extend(f"    RHS  {c.name}  {_num(c.rhs)}" for c in model.constraints if c.rhs != 0)
    out.append("BOUNDS")
    for v in model.variables:
        if v.binary:
            out.append(f" BV BND  {v.name}")
        else:
            out.append(f" UP BND  {v.name}  {_num(1.0)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def _lp_expr(terms, per_line: int = 8) -> str:
    toks = []
    for pos, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        if pos == 0 and sign == "+":
            toks.append(f"{_num(abs(coef))} {name}")
        else:
            toks.append(f"{sign} {_num(abs(coef))} {name}")
    if not toks:
        return "0.0"
    lines = [" ".join(toks[i : i + per_line]) for i in range(0, len(toks), per_line)]
    return "\n   ".join(lines)


def write_lp(model: MipModel) -> str:
    """CPLEX-style LP text with the same names as :func:`write_mps`."""
    out = [f"\\ Problem: {model.name}", "Minimize"]
    obj_terms = [(v.name, model.objective[v.name]) for v in model.variables if model.objective.get(v.name)]
    out.append(" obj: " + _lp_expr(obj_terms))
    out.append("Subject To")
    for c in model.constraints:
        expr = _lp_expr([(v.name, a) for v, a in c.terms])
        out.append(f" {c.name}: {expr} {c.sense} {_num(c.rhs)}")
    out.append("Bounds")
    out.extend(f" 0.0 <= {v.name} <= 1.0" for v in model.variables if not v.binary)
    out.append("Binaries")
    out.extend(f" {v.name}" for v in model.variables if v.binary)
    out.append("End")
    return "\n".join(out) + "\n"


# -- readers ---------------------------------------------------------------------


@dataclass
class ParsedModel:
    """Solver-neutral view of a model file: enough to compare against a MipModel."""

    name: str = ""
    objective: dict = field(default_factory=dict)
    rows: dict = field(default_factory=dict)  # name -> (sense, {var: coef}, rhs)
    variables: list = field(default_factory=list)
    binaries: set = field(default_factory=set)
    bounds: dict = field(default_factory=dict)  # var -> (lo, hi)

    def _touch(self, var: str):
        if var not in self.bounds:
            self.variables.append(var)
            self.bounds[var] = (0.0, np.inf)


def canonical(model: MipModel) -> ParsedModel:
    """The ParsedModel a faithful reader should produce for ``model``."""
    p = ParsedModel(name=model.name)
    for v in model.variables:
        p.variables.append(v.name)
        p.bounds[v.name] = (0.0, 1.0)
        if v.binary:
            p.binaries.add(v.name)
    p.objective = {k: float(v) for k, v in model.objective.items() if v}
    for c in model.constraints:
        p.rows[c.name] = (c.sense, {v.name: float(a) for v, a in c.terms}, float(c.rhs))
    return p


def read_mps(text: str) -> ParsedModel:
    """Parse free-format MPS (sections NAME, ROWS, COLUMNS, RHS, RANGES-free, BOUNDS)."""
    p = ParsedModel()
    section = None
    obj_row = None
    senses: dict = {}
    coefs: dict = {}
    rhs: dict = {}
    integer = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        tokens = raw.split()
        if not raw[0].isspace():
            section = tokens[0].upper()
            if section == "NAME":
                p.name = tokens[1] if len(tokens) > 1 else ""
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                raise ValueError(f"line {lineno}: unsupported MPS section {section}")
            continue
        if section == "ROWS":
            kind, name = tokens[0].upper(), tokens[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = name
            else:
                senses[name] = _MPS_SENSE_INV[kind]
                coefs[name] = {}
                rhs[name] = 0.0
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'") == "MARKER":
                integer = tokens[2].strip("'") == "INTORG"
                continue
            var = tokens[0]
            if var not in p.bounds:
                p._touch(var)
                if integer:
                    p.binaries.add(var)
                    p.bounds[var] = (0.0, 1.0)
            for row, val in zip(tokens[1::2], tokens[2::2]):
                if row == obj_row:
                    p.objective[var] = float(val)
                elif row in coefs:
                    coefs[row][var] = float(val)
                else:
                    raise ValueError(f"line {lineno}: unknown row {row}")
        elif section == "RHS":
            for row, val in zip(tokens[1::2], tokens[2::2]):
                if row in rhs:
                    rhs[row] = float(val)
        elif section == "BOUNDS":
            kind, var = tokens[0].upper(), tokens[2]
            if var not in p.bounds:
                p._touch(var)
            lo, hi = p.bounds[var]
            if kind == "BV":
                p.binaries.add(var)
                lo, hi = 0.0, 1.0
            elif kind == "UP":
                hi = float(tokens[3])
            elif kind == "LO":
                lo = float(tokens[3])
            elif kind == "FX":
                lo = hi = float(tokens[3])
            elif kind == "FR":
                lo, hi = -np.inf, np.inf
            else:
                raise ValueError(f"line {lineno}: unsupported bound type {kind}")
            p.bounds[var] = (lo, hi)
    for row in senses:
        p.rows[row] = (senses[row], coefs[row], rhs[row])
    return p


_LP_TOKEN = re.compile(
    r"\s*(?:(?P<op><=|>=|=<|=>|<|>|=)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|inf(?:inity)?\b)"
    r"|(?P<label>[A-Za-z_][\w.\[\]]*)\s*:"
    r"|(?P<name>[A-Za-z_][\w.\[\]]*)"
    r"|(?P<sign>[+-]))",
    re.IGNORECASE,
)

_LP_SECTIONS = {
    "minimize": "obj",
    "minimise": "obj",
    "min": "obj",
    "subject to": "st",
    "such that": "st",
    "st": "st",
    "s.t.": "st",
    "bounds": "bounds",
    "binaries": "bin",
    "binary": "bin",
    "bin": "bin",
    "end": "end",
}


def _lp_tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        mt = _LP_TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ValueError(f"cannot parse LP text near {text[pos:pos + 30]!r}")
        pos = mt.end()
        kind = mt.lastgroup
        out.append((kind, mt.group(kind)))
    return out


def _parse_linear(tokens, start):
    """Parse ``[sign] [num] name ...`` starting at ``start``; stop at an operator or label."""
    terms: dict = {}
    i = start
    sign, coef = 1.0, None
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "sign":
            sign = -sign if val == "-" else sign
        elif kind == "num":
            coef = float(val)
        elif kind == "name":
            terms[val] = terms.get(val, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        else:
            break
        i += 1
    return terms, i, (sign * coef if coef is not None else None)


def _norm_op(op: str) -> str:
    return {"<": LE, "=<": LE, "<=": LE, ">": GE, "=>": GE, ">=": GE, "=": EQ}[op]


def read_lp(text: str) -> ParsedModel:
    """Parse the CPLEX-style LP subset written by :func:`write_lp`."""
    p = ParsedModel()
    chunks: dict = {"obj": [], "st": [], "bounds": [], "bin": []}
    section = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if raw.startswith("\\ Problem:"):
            p.name = raw.split(":", 1)[1].strip()
        if not line:
            continue
        key = line.lower()
        if key in _LP_SECTIONS:
            section = _LP_SECTIONS[key]
            if section == "end":
                break
            continue
        if section is None:
            raise ValueError(f"text before the objective section: {line!r}")
        chunks[section].append(line)

    toks = _lp_tokens(" ".join(chunks["obj"]))
    if toks and toks[0][0] == "label":
        toks = toks[1:]
    obj, _, _ = _parse_linear(toks, 0)
    p.objective = obj

    toks = _lp_tokens(" ".join(chunks["st"]))
    i = 0
    counter = 0
    while i < len(toks):
        if toks[i][0] == "label":
            name = toks[i][1]
            i += 1
        else:
            counter += 1
            name = f"R{counter}"
        terms, i, _ = _parse_linear(toks, i)
        if i >= len(toks) or toks[i][0] != "op":
            raise ValueError(f"constraint {name} has no relational operator")
        sense = _norm_op(toks[i][1])
        _, i, rhs = _parse_linear(toks, i + 1)
        if rhs is None:
            raise ValueError(f"constraint {name} has no right-hand side")
        p.rows[name] = (sense, terms, rhs)

    seen = list(p.objective)
    for _, terms, _ in p.rows.values():
        seen.extend(terms)
    for var in dict.fromkeys(seen):
        p._touch(var)

    for line in chunks["bounds"]:
        toks = _lp_tokens(line)
        vals = [(k, v) for k, v in toks if k != "sign"]
        signs = [v for k, v in toks if k == "sign"]
        if signs:
            raise ValueError(f"signed bounds are not supported: {line!r}")
        if len(vals) == 5:  # lo <= x <= hi
            lo, var, hi = float(vals[0][1]), vals[2][1], float(vals[4][1])
        elif len(vals) == 3 and vals[0][0] == "name":
            var = vals[0][1]
            lo, hi = p.bounds.get(var, (0.0, np.inf))
            if _norm_op(vals[1][1]) == LE:
                hi = float(vals[2][1])
            else:
                lo = float(vals[2][1])
        else:
            raise ValueError(f"unsupported bound line {line!r}")
        p._touch(var)
        p.bounds[var] = (lo, hi)

    for line in chunks["bin"]:
        for var in line.split():
            p._touch(var)
            p.binaries.add(var)
            p.bounds[var] = (0.0, 1.0)
    return p


def equivalence_report(parsed: ParsedModel, model: MipModel) -> list:
    """Differences between a parsed file and ``model``; empty when structurally equal."""
    ref = canonical(model)
    issues = []
    if set(parsed.variables) != set(ref.variables):
        issues.append(f"variable sets differ: {sorted(set(parsed.variables) ^ set(ref.variables))[:5]}")
    if parsed.binaries != ref.binaries:
        issues.append(f"binary sets differ: {sorted(parsed.binaries ^ ref.binaries)[:5]}")
    for var in ref.variables:
        if parsed.bounds.get(var) != ref.bounds[var]:
            issues.append(f"bounds of {var}: {parsed.bounds.get(var)} != {ref.bounds[var]}")
    if parsed.objective != ref.objective:
        issues.append("objective coefficients differ")
    if parsed.rows.keys() != ref.rows.keys():
        issues.append(f"row sets differ: {sorted(set(parsed.rows) ^ set(ref.rows))[:5]}")
    for name, row in ref.rows.items():
        if name in parsed.rows and parsed.rows[name] != row:
            issues.append(f"row {name}: {parsed.rows[name]} != {row}")
    return issues


# -- solutions -------------------------------------------------------------------


def format_solution(model: MipModel, values: dict, objective: bool = True) -> str:
    lines = [f"{v.name} {_num(values.get(v.name, 0.0))}" for v in model.variables]
    if objective:
        lines.append(f"objective {_num(model.objective_value({v.name: values.get(v.name, 0.0) for v in model.variables}))}")
    return "\n".join(lines) + "\n"


def read_solution(text: str, model: MipModel, tol: float = SOLUTION_TOL):
    """
    Parse ``<varname> <value>`` lines (plus an optional ``objective <value>``).

    :return:    (assignment covering every model variable, recomputed objective)

    Unlisted variables default to 0.  Values within ``tol`` of a bound or of
    an integer (for binaries) are snapped; anything further out raises
    :class:`SolutionError`, as do unknown names and an objective line that
    disagrees with the recomputed value.
    """
    values = {v.name: 0.0 for v in model.variables}
    stated = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionError(f"line {lineno}: expected '<name> <value>', got {line!r}")
        name, sval = parts
        try:
            val = float(sval)
        except ValueError:
            raise SolutionError(f"line {lineno}: bad value {sval!r}") from None
        if name == "objective":
            stated = val
            continue
        if name not in model:
            raise SolutionError(f"line {lineno}: unknown variable {name}")
        if val < -tol or val > 1 + tol:
            raise SolutionError(f"line {lineno}: {name}={val} outside [0, 1]")
        if model.var(name).binary:
            rounded = round(val)
            if abs(val - rounded) > tol:
                raise SolutionError(f"line {lineno}: binary {name}={val} is fractional")
            val = float(rounded)
        else:
            val = min(1.0, max(0.0, val))
            if abs(val - round(val)) <= tol:
                val = float(round(val))
        values[name] = val
    obj = model.objective_value(values)
    if stated is not None and abs(stated - obj) > tol * max(1.0, abs(obj)):
        raise SolutionError(f"stated objective {stated} differs from recomputed {obj}")
    return values, obj


def factorization_from_values(model: MipModel, values: dict) -> Factorization:
    n, m, k = model.n, model.m, model.k
    C = np.zeros((n, k), dtype=np.uint8)
    R = np.zeros((k, m), dtype=np.uint8)
    for i in range(n):
        for l in range(k):
            C[i, l] = round(values[f"c_{i + 1}_{l + 1}"])
    for l in range(k):
        for j in range(m):
            R[l, j] = round(values[f"r_{l + 1}_{j + 1}"])
    return Factorization(BooleanMatrix(C), BooleanMatrix(R))
