"""Benchmark runs over instance files and parameter grids.

A grid file is an INI file with a ``[grid]`` section whose values are comma
separated lists, for example::

    [grid]
    P = 4, 8
    g = 1, 4, 16
    L = 20
    modes = basic, advanced
    eps = 1/20

Recognised keys: ``P``, ``g``, ``L`` and ``modes`` for DAGs; ``P``, ``eps``,
``modes`` and ``solver`` (``exact`` or ``highs``) for hypergraphs; ``seed``,
``budget`` (hill climbing sweeps) and ``time_limit`` (ILP seconds) for both.
"""

from __future__ import annotations

import configparser
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .baseline import SchedulerConfig, baseline_schedule
from .bsp import BspParams, total_cost
from .ilp import solve_milp
from .ingest import parse_dag_file, parse_hypergraph_file
from .model import Dag, Hypergraph, ReplicationError, exact
from .partition import BalanceSpec, exact_partition_search, partition_cost
from .partition_ilp import build_partition_ilp, decode_partition
from .replicate import PASSES, advanced_heuristic
from .stats import CostReport, CostRow

log = logging.getLogger(__name__)

SCHEDULE_MODES = {
    "none": (),
    "basic": ("basic",),
    "advanced": PASSES,
    "br": ("basic", "batch"),
    "sm": ("basic", "merge"),
    "sr": ("basic", "sstep-repl"),
}
PARTITION_MODES = ("dupl", "repl", "best")
DAG_SUFFIXES = (".dag",)
HYPERGRAPH_SUFFIXES = (".hgr",)


def passes_for(mode: str) -> tuple:
    try:
        return SCHEDULE_MODES[mode]
    except KeyError:
        raise ValueError(f"unknown schedule mode {mode!r}") from None


def schedule_rows(name: str, dag: Dag, params: BspParams, modes, cfg: SchedulerConfig = SchedulerConfig(),
                  timing: bool = False) -> list[CostRow]:
    """One row per mode; all modes start from the same baseline schedule."""
    t0 = time.perf_counter()
    base = baseline_schedule(dag, params, cfg)
    base_ms = (time.perf_counter() - t0) * 1000
    c0 = total_cost(dag, base, params)
    rows = []
    for mode in modes:
        t1 = time.perf_counter()
        passes = passes_for(mode)
        out = advanced_heuristic(dag, base, params, passes)[0] if passes else base
        ms = round(base_ms + (time.perf_counter() - t1) * 1000) if timing else 0
        rows.append(CostRow(name, params.P, params.g, params.L, None, mode, c0,
                            total_cost(dag, out, params), base.S, out.S, ms))
    return rows


def _optimum(h: Hypergraph, P: int, spec: BalanceSpec, mode: str, solver: str, time_limit):
    if solver == "exact":
        cap = {"base": 1, "dupl": 2, "repl": None}[mode]
        return exact_partition_search(h, P, spec, mode != "base", replica_cap=cap).cost
    model = build_partition_ilp(h, P, spec, mode)
    part = decode_partition(solve_milp(model, time_limit), model)
    return partition_cost(h, part)


def partition_rows(name: str, h: Hypergraph, P: int, eps, modes, solver: str = "exact",
                   time_limit=None, timing: bool = False) -> list[CostRow]:
    spec = BalanceSpec(eps)
    t0 = time.perf_counter()
    base = _optimum(h, P, spec, "base", solver, time_limit)
    base_ms = (time.perf_counter() - t0) * 1000
    rows = []
    for mode in modes:
        if mode not in PARTITION_MODES:
            raise ValueError(f"unknown partition mode {mode!r}")
        t1 = time.perf_counter()
        kinds = ("dupl", "repl") if mode == "best" else (mode,)
        final = min(_optimum(h, P, spec, k, solver, time_limit) for k in kinds)
        ms = round(base_ms + (time.perf_counter() - t1) * 1000) if timing else 0
        rows.append(CostRow(name, P, None, None, spec.epsilon, mode, base, final, None, None, ms))
    return rows


@dataclass
class Grid:
    P: list = field(default_factory=lambda: [8])
    g: list = field(default_factory=lambda: [4])
    L: list = field(default_factory=lambda: [20])
    eps: list = field(default_factory=lambda: [Fraction(1, 20)])
    modes: list = field(default_factory=lambda: ["basic", "advanced"])
    part_modes: list = field(default_factory=lambda: ["best"])
    solver: str = "exact"
    seed: int | None = None
    budget: int = 100
    time_limit: float | None = None


def load_grid(path) -> Grid:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    with open(path) as fh:
        cp.read_file(fh)
    if "grid" not in cp:
        raise ValueError(f"{path}: missing [grid] section")
    sec = cp["grid"]
    grid = Grid()

    def items(key):
        return [x.strip() for x in sec[key].split(",") if x.strip()]

    for key in sec:
        if key == "P":
            grid.P = [int(x) for x in items(key)]
        elif key in ("g", "L", "eps"):
            setattr(grid, key, [exact(Fraction(x)) for x in items(key)])
        elif key == "modes":
            modes = items(key)
            grid.modes = [m for m in modes if m in SCHEDULE_MODES]
            grid.part_modes = [m for m in modes if m in PARTITION_MODES]
            unknown = set(modes) - set(grid.modes) - set(grid.part_modes)
            if unknown:
                raise ValueError(f"{path}: unknown modes {sorted(unknown)}")
        elif key == "solver":
            grid.solver = sec[key].strip()
            if grid.solver not in ("exact", "highs"):
                raise ValueError(f"{path}: solver must be exact or highs")
        elif key == "seed":
            grid.seed = int(sec[key])
        elif key == "budget":
            grid.budget = int(sec[key])
        elif key == "time_limit":
            grid.time_limit = float(sec[key])
        else:
            raise ValueError(f"{path}: unknown key {key!r}")
    return grid


def find_instances(root) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    return sorted(p for p in root.rglob("*") if p.suffix in DAG_SUFFIXES + HYPERGRAPH_SUFFIXES)


def _tasks(paths, grid: Grid):
    for path in paths:
        if path.suffix in DAG_SUFFIXES:
            for P in grid.P:
                for g in grid.g:
                    for L in grid.L:
                        yield ("dag", str(path), (P, g, L))
        else:
            for P in grid.P:
                for eps in grid.eps:
                    yield ("hgr", str(path), (P, eps))


def _run(task, grid: Grid, timing: bool):
    kind, path, args = task
    name = Path(path).stem
    try:
        if kind == "dag":
            P, g, L = args
            cfg = SchedulerConfig(hill_climb_budget=grid.budget, rng_seed=grid.seed)
            return schedule_rows(name, parse_dag_file(Path(path)), BspParams(P, g, L), grid.modes, cfg, timing), None
        P, eps = args
        return partition_rows(name, parse_hypergraph_file(Path(path)), P, eps, grid.part_modes,
                              grid.solver, grid.time_limit, timing), None
    except (ReplicationError, ValueError, OSError) as err:
        return [], f"{path} {args}: {err}"


def _run_packed(packed):
    return _run(*packed)


def jobs_from_env(jobs: int | None) -> int:
    if jobs is not None:
        return max(1, jobs)
    return max(1, int(os.environ.get("REPART_JOBS", "1")))


def run_bench(paths, grid: Grid, jobs: int | None = None, timing: bool = False) -> tuple[CostReport, list[str]]:
    """Rows in input order regardless of ``jobs``; failures are returned, not raised."""
    tasks = [(t, grid, timing) for t in _tasks(paths, grid)]
    jobs = jobs_from_env(jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_packed, tasks))
    else:
        results = [_run_packed(t) for t in tasks]
    rows, errors = [], []
    for got, err in results:
        rows.extend(got)
        if err:
            log.error(err)
            errors.append(err)
    return CostReport(rows), errors
