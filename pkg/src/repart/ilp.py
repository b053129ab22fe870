"""Solver-neutral ILP models, CPLEX-LP output and ``variable value`` solution files.

Three ways to solve a model are provided: HiGHS through ``scipy.optimize.milp``,
an external command (``{model}``, ``{solution}``, ``{timelimit}`` placeholders)
that reads LP and writes the solution format, and plain enumeration of the
binaries for very small pure-binary models.
"""

from __future__ import annotations

import itertools
import math
import os
import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .model import ReplicationError, exact

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
STATUSES = ("optimal", "feasible", "infeasible", "unknown")
INTEGRALITY_TOL = 1e-6


class UnknownVariable(ReplicationError):
    pass


class NonBinaryValue(ReplicationError):
    pass


class SolverError(ReplicationError):
    pass


@dataclass
class Var:
    name: str
    kind: str = BINARY
    lb: object = 0
    ub: object = None  # None means +inf (1 for binaries)


@dataclass
class Constraint:
    name: str
    terms: list  # (coefficient, variable name)
    sense: str  # "<=", ">=" or "="
    rhs: object


@dataclass
class IlpModel:
    sense: str = "min"
    vars: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    offset: object = 0
    meta: dict = field(default_factory=dict)

    def add_var(self, name: str, kind: str = BINARY, lb=0, ub=None) -> str:
        if name in self.vars:
            raise ValueError(f"duplicate variable {name}")
        if kind not in (BINARY, INTEGER, CONTINUOUS):
            raise ValueError(f"bad variable kind {kind}")
        self.vars[name] = Var(name, kind, exact(lb), None if ub is None else exact(ub))
        return name

    def add_constraint(self, terms: Iterable, sense: str, rhs, name: str | None = None) -> None:
        terms = [(exact(c), v) for c, v in terms]
        for _, v in terms:
            if v not in self.vars:
                raise UnknownVariable(v)
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"bad constraint sense {sense}")
        name = name or f"c{len(self.constraints) + 1}"
        self.constraints.append(Constraint(name, terms, sense, exact(rhs)))

    def set_objective(self, terms: Iterable, offset=0, sense: str = "min") -> None:
        terms = [(exact(c), v) for c, v in terms]
        for _, v in terms:
            if v not in self.vars:
                raise UnknownVariable(v)
        self.objective, self.offset, self.sense = terms, exact(offset), sense

    def count(self, kind: str | None = None) -> int:
        return sum(1 for v in self.vars.values() if kind is None or v.kind == kind)

    def evaluate(self, values: dict):
        return exact(self.offset + sum(c * values.get(v, 0) for c, v in self.objective))

    def violations(self, values: dict) -> list[str]:
        """Names of constraints (and bounds) the assignment breaks, exactly."""
        bad = []
        for var in self.vars.values():
            x = values.get(var.name, 0)
            ub = 1 if var.kind == BINARY else var.ub
            if x < var.lb or (ub is not None and x > ub):
                bad.append(f"bound:{var.name}")
        for c in self.constraints:
            lhs = sum(a * values.get(v, 0) for a, v in c.terms)
            ok = lhs <= c.rhs if c.sense == "<=" else lhs >= c.rhs if c.sense == ">=" else lhs == c.rhs
            if not ok:
                bad.append(c.name)
        return bad


@dataclass
class IlpSolution:
    values: dict
    objective: object = None
    status: str = "unknown"

    def value(self, name: str):
        return self.values.get(name, 0)


# ---------------------------------------------------------------- LP writing


def _num(x) -> str:
    x = exact(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x)) if _terminating(x) else f"{float(x):.17g}"


def _terminating(x: Fraction) -> bool:
    d = x.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


def _expr(terms, width: int = 8) -> list[str]:
    parts = []
    for i, (c, v) in enumerate(terms):
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = v if mag == 1 else f"{_num(mag)} {v}"
        parts.append(f"- {body}" if sign == "-" else (body if not parts else f"+ {body}"))
    lines = [" ".join(parts[i:i + width]) for i in range(0, len(parts), width)]
    return lines


def lp_text(model: IlpModel) -> str:
    out = []
    notes = set()
    for c, _ in model.objective:
        if isinstance(c, Fraction) and not _terminating(c):
            notes.add(c)
    for con in model.constraints:
        for c, _ in con.terms:
            if isinstance(c, Fraction) and not _terminating(c):
                notes.add(c)
        if isinstance(con.rhs, Fraction) and not _terminating(con.rhs):
            notes.add(con.rhs)
    for k, v in sorted(model.meta.items()):
        out.append(f"\\ {k}: {v}")
    for c in sorted(notes):
        out.append(f"\\ exact {c} written as {_num(c)}")

    out.append("Minimize" if model.sense == "min" else "Maximize")
    obj = _expr(model.objective)
    if model.offset:
        const = f"- {_num(-model.offset)}" if model.offset < 0 else f"+ {_num(model.offset)}"
        if obj:
            obj[-1] += " " + const
        else:
            obj = [_num(model.offset)]
    if not obj:
        obj = ["0"]
    out.append(f" obj: {obj[0]}")
    out.extend(f"  {line}" for line in obj[1:])

    out.append("Subject To")
    for con in model.constraints:
        body = _expr(con.terms) or ["0 " + next(iter(model.vars))]
        body[-1] += f" {con.sense} {_num(con.rhs)}"
        out.append(f" {con.name}: {body[0]}")
        out.extend(f"  {line}" for line in body[1:])

    bounds = []
    for var in model.vars.values():
        if var.kind == BINARY:
            continue
        if var.lb == 0 and var.ub is None:
            continue
        lb = "-inf" if var.lb is None else _num(var.lb)
        ub = "+inf" if var.ub is None else _num(var.ub)
        bounds.append(f" {lb} <= {var.name} <= {ub}")
    if bounds:
        out.append("Bounds")
        out.extend(bounds)
    for title, kind in (("Binaries", BINARY), ("General", INTEGER)):
        names = [v.name for v in model.vars.values() if v.kind == kind]
        if names:
            out.append(title)
            out.extend(" " + " ".join(names[i:i + 10]) for i in range(0, len(names), 10))
    out.append("End")
    return "\n".join(out) + "\n"


def emit_lp(model: IlpModel, path) -> Path:
    path = Path(path)
    path.write_text(lp_text(model))
    return path


# ---------------------------------------------------------- solution files


def write_solution(values: dict, path=None, status: str | None = None, objective=None) -> str:
    lines = []
    if status:
        lines.append(f"# status {status}")
    if objective is not None:
        lines.append(f"# objective {objective}")
    for name, x in values.items():
        lines.append(f"{name} {x}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _read(sol) -> str:
    if isinstance(sol, Path) or (isinstance(sol, str) and "\n" not in sol and os.path.exists(sol)):
        return Path(sol).read_text()
    return sol


def parse_solution(sol, model: IlpModel) -> IlpSolution:
    """Read ``variable value`` lines; ``# status ...`` and ``# objective ...`` are optional."""
    status, objective = "unknown", None
    values = {name: 0 for name in model.vars}
    for lineno, raw in enumerate(_read(sol).splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) >= 2 and words[0].lower() == "status":
                s = words[1].lower()
                status = s if s in STATUSES else "unknown"
            elif len(words) >= 2 and words[0].lower() == "objective":
                objective = exact(Fraction(words[1]))
            continue
        try:
            name, val = line.split()
        except ValueError:
            raise ValueError(f"line {lineno}: expected 'variable value', got {raw!r}") from None
        var = model.vars.get(name)
        if var is None:
            raise UnknownVariable(f"line {lineno}: {name}")
        x = Fraction(val)
        if var.kind in (BINARY, INTEGER):
            r = round(x)
            if abs(x - r) > INTEGRALITY_TOL:
                raise NonBinaryValue(f"{name} = {val}")
            if var.kind == BINARY and r not in (0, 1):
                raise NonBinaryValue(f"{name} = {val}")
            x = int(r)
        values[name] = exact(x)
    return IlpSolution(values, objective, status)


# ------------------------------------------------------------------ solvers


def solve_milp(model: IlpModel, time_limit: float | None = None) -> IlpSolution:
    """Solve with HiGHS via scipy; integer variables come back rounded."""
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    names = list(model.vars)
    index = {v: i for i, v in enumerate(names)}
    sign = 1 if model.sense == "min" else -1
    c = np.zeros(len(names))
    for coef, v in model.objective:
        c[index[v]] += sign * float(coef)
    lb = np.array([float(model.vars[v].lb) for v in names])
    ub = np.array([1.0 if model.vars[v].kind == BINARY else
                   (np.inf if model.vars[v].ub is None else float(model.vars[v].ub)) for v in names])
    integrality = np.array([0 if model.vars[v].kind == CONTINUOUS else 1 for v in names])

    rows, cols, data, lo, hi = [], [], [], [], []
    for r, con in enumerate(model.constraints):
        for coef, v in con.terms:
            rows.append(r)
            cols.append(index[v])
            data.append(float(coef))
        rhs = float(con.rhs)
        lo.append(-np.inf if con.sense == "<=" else rhs)
        hi.append(np.inf if con.sense == ">=" else rhs)
    constraints = []
    if model.constraints:
        A = coo_matrix((data, (rows, cols)), shape=(len(model.constraints), len(names))).tocsr()
        constraints.append(LinearConstraint(A, lo, hi))
    options = {} if time_limit is None else {"time_limit": time_limit}
    res = milp(c, constraints=constraints, integrality=integrality, bounds=Bounds(lb, ub), options=options)
    if res.x is None:
        return IlpSolution({v: 0 for v in names}, None, "infeasible" if res.status == 2 else "unknown")
    values = {}
    for v, x in zip(names, res.x):
        if model.vars[v].kind == CONTINUOUS:
            values[v] = exact(Fraction(x).limit_denominator(10 ** 9))
        else:
            values[v] = int(round(x))
    status = "optimal" if res.status == 0 else "feasible"
    return IlpSolution(values, model.evaluate(values), status)


def solve_enumerate(model: IlpModel, max_binaries: int = 22) -> IlpSolution:
    """Exhaustive search over all 0/1 vectors of a pure-binary model."""
    names = list(model.vars)
    if any(v.kind != BINARY for v in model.vars.values()):
        raise SolverError("enumeration handles pure binary models only")
    if len(names) > max_binaries:
        raise SolverError(f"{len(names)} binaries exceed the enumeration limit {max_binaries}")
    best, best_val = None, None
    sign = 1 if model.sense == "min" else -1
    for bits in itertools.product((0, 1), repeat=len(names)):
        values = dict(zip(names, bits))
        if model.violations(values):
            continue
        val = model.evaluate(values)
        if best is None or sign * val < sign * best_val:
            best, best_val = values, val
    if best is None:
        return IlpSolution({v: 0 for v in names}, None, "infeasible")
    return IlpSolution(best, best_val, "optimal")


DEFAULT_COMMAND = f"{shlex.quote(sys.executable)} -m repart.ilp {{model}} {{solution}} --time-limit {{timelimit}}"


def solve_external(model: IlpModel, command: str = DEFAULT_COMMAND, time_limit: float = 3600,
                   workdir=None) -> IlpSolution:
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        lp = emit_lp(model, Path(tmp) / "model.lp")
        sol = Path(tmp) / "model.sol"
        cmd = command.format(model=shlex.quote(str(lp)), solution=shlex.quote(str(sol)),
                             timelimit=time_limit)
        proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
        if proc.returncode != 0 or not sol.exists():
            raise SolverError(f"solver command failed ({proc.returncode}): {proc.stderr.strip()[-500:]}")
        return parse_solution(sol.read_text(), model)


def _highs_main(argv=None) -> int:
    """Solve an LP file with highspy and write the ``variable value`` format."""
    import argparse

    ap = argparse.ArgumentParser(prog="python -m repart.ilp")
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args(argv)
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if args.time_limit is not None and math.isfinite(args.time_limit):
        h.setOptionValue("time_limit", args.time_limit)
    h.readModel(args.model)
    h.run()
    status = h.modelStatusToString(h.getModelStatus()).lower()
    info = h.getInfo()
    lp = h.getLp()
    names = list(lp.col_names_)
    sol = h.getSolution()
    values = {}
    if sol.value_valid:
        for name, x in zip(names, sol.col_value):
            values[name] = int(round(x)) if abs(x - round(x)) <= INTEGRALITY_TOL else x
    tag = "optimal" if status == "optimal" else ("infeasible" if "infeasible" in status
                                                  else ("feasible" if values else "unknown"))
    objective = info.objective_function_value if values else None
    write_solution(values, args.solution, tag, objective)
    return 0


if __name__ == "__main__":
    sys.exit(_highs_main())
