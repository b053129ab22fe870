"""Command line entry point: ``repart partition|schedule|bench|convert``."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import bench
from .baseline import SchedulerConfig, baseline_schedule
from .bsp import BspParams, total_cost, validate_schedule, write_schedule
from .ilp import SolverError, emit_lp, parse_solution, solve_external, solve_milp
from .ingest import (build_finegrained, build_moe_hypergraph, build_rownet, build_sptrsv_dag,
                     gen_bipartite_dag, gen_two_cliques, parse_dag_file, parse_hypergraph_file,
                     parse_matrix_market, parse_tuple_log, synthetic_suite, write_dag_file,
                     write_hypergraph_file)
from .model import ReplicationError
from .partition import BalanceSpec, exact_partition_search, partition_cost, write_partition
from .partition_ilp import build_partition_ilp, decode_partition, score_solution
from .replicate import advanced_heuristic, reports_csv
from .stats import CostReport, CostRow

log = logging.getLogger("repart")

ABLATIONS = {"br": "batch", "sm": "merge", "sr": "sstep-repl"}


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _existing(text: str) -> Path:
    p = Path(text)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return p


def _out(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- partition ------------------------------------------------------------------

def cmd_partition(args) -> int:
    h = parse_hypergraph_file(args.file)
    spec = BalanceSpec(args.eps, weighted=args.weighted)
    kinds = ("dupl", "repl") if args.ilp == "both" else (args.ilp,)
    name = args.file.stem

    if args.mode == "emit-ilp":
        for kind in kinds:
            model = build_partition_ilp(h, args.P, spec, kind)
            if args.solution:
                chk = score_solution(h, parse_solution(args.solution, model), model)
                print(f"{kind}: cost {chk.true_cost}, objective {chk.model_objective}, "
                      f"{'consistent' if chk.consistent else 'INCONSISTENT'}")
                if not chk.consistent:
                    return 1
                continue
            target = Path(args.out or ".") / f"{name}.{kind}.lp" if len(kinds) > 1 or args.out else None
            if target is None:
                from .ilp import lp_text
                sys.stdout.write(lp_text(model))
            else:
                if target.parent != Path("."):
                    target.parent.mkdir(parents=True, exist_ok=True)
                emit_lp(model, target)
                print(f"wrote {target}")
        return 0

    def optimum(kind):
        if args.mode == "exact":
            cap = {"base": 1, "dupl": 2, "repl": None}[kind]
            res = exact_partition_search(h, args.P, spec, kind != "base", replica_cap=cap)
            return res.cost, res.partition
        model = build_partition_ilp(h, args.P, spec, kind)
        if args.solver == "external":
            sol = solve_external(model, args.command, args.time_limit)
        else:
            sol = solve_milp(model, args.time_limit)
        part = decode_partition(sol, model)
        return partition_cost(h, part), part

    base, _ = optimum("base")
    best = None
    for kind in kinds:
        cost, part = optimum(kind)
        if best is None or cost < best[0]:
            best = (cost, part, kind)
    row = CostRow(name, args.P, None, None, spec.epsilon, args.ilp, base, best[0])
    report = CostReport([row])
    sys.stdout.write(report.to_csv())
    if row.ratio == 0:
        print("# zero-cost: replication removes all communication")
    if args.out_partition:
        Path(args.out_partition).write_text(write_partition(best[1], h.n))
    return 0


# -- schedule -------------------------------------------------------------------

def cmd_schedule(args) -> int:
    dag = parse_dag_file(args.file)
    params = BspParams(args.P, args.g, args.L)
    cfg = SchedulerConfig(hill_climb_budget=args.budget, rng_seed=args.seed)
    base = baseline_schedule(dag, params, cfg)
    if args.passes == "none":
        passes = ()
    elif args.passes == "basic" or args.ablate:
        passes = ("basic",) + tuple(ABLATIONS[a] for a in args.ablate)
    else:
        passes = bench.SCHEDULE_MODES["advanced"]
    final, reports = advanced_heuristic(dag, base, params, passes) if passes else (base, [])
    bad = validate_schedule(dag, final, params)
    if bad:
        log.error("internal error, schedule invalid: %s", bad[0])
        return 1
    c0, c1 = total_cost(dag, base, params), total_cost(dag, final, params)
    ratio = Fraction(c1) / Fraction(c0) if c0 else None
    print(f"baseline cost {c0} ({base.S} supersteps)")
    print(f"final cost {c1} ({final.S} supersteps)")
    print("ratio " + ("n/a" if ratio is None else f"{float(ratio):.6f}"))
    if args.out_schedule:
        Path(args.out_schedule).write_text(write_schedule(final))
    if args.ledger:
        Path(args.ledger).write_text(reports_csv(reports))
    return 0


# -- bench ----------------------------------------------------------------------

def cmd_bench(args) -> int:
    grid = bench.load_grid(args.config) if args.config else bench.Grid()
    paths = bench.find_instances(args.instances)
    if not paths:
        log.error("no .dag or .hgr instances under %s", args.instances)
        return 2
    report, errors = bench.run_bench(paths, grid, args.jobs, args.timing)
    _out(args.out, report.to_csv())
    if args.summary:
        _out(args.summary, report.summary_text())
    elif args.out:
        sys.stdout.write(report.summary_text())
    return 1 if errors else 0


# -- convert --------------------------------------------------------------------

def cmd_convert(args) -> int:
    if args.what == "mtx":
        m = parse_matrix_market(args.input)
        if args.model == "sptrsv":
            _out(args.output, write_dag_file(build_sptrsv_dag(m)))
        else:
            builder = build_finegrained if args.model == "finegrained" else build_rownet
            _out(args.output, write_hypergraph_file(builder(m)))
    elif args.what == "tuples":
        h = build_moe_hypergraph(parse_tuple_log(args.input), args.kappa0, (args.lo, args.hi))
        _out(args.output, write_hypergraph_file(h))
    elif args.what == "two-cliques":
        _out(args.output, write_hypergraph_file(gen_two_cliques(args.n, args.eps)))
    elif args.what == "bipartite":
        dag, params = gen_bipartite_dag(args.P, args.c, args.m)
        _out(args.output, write_dag_file(dag))
        print(f"# recommended g={params.g} L={params.L}", file=sys.stderr)
    elif args.what == "suite":
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for name, dag in synthetic_suite(args.count, args.seed):
            (out / f"{name}.dag").write_text(write_dag_file(dag))
        print(f"wrote {args.count} DAGs to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="repart", description="Replication in partitioning and BSP scheduling.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="optimal partitioning with and without replication")
    p.add_argument("file", type=_existing)
    p.add_argument("-P", type=int, default=2)
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 20))
    p.add_argument("--weighted", action="store_true", help="balance node weights instead of counts")
    p.add_argument("--mode", choices=("exact", "ilp", "emit-ilp"), default="exact")
    p.add_argument("--ilp", choices=("base", "dupl", "repl", "both"), default="both")
    p.add_argument("--solver", choices=("highs", "external"), default="highs")
    p.add_argument("--command", default=None, help="external solver command template")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--solution", type=_existing, help="score a solution file against the emitted model")
    p.add_argument("--out", help="directory (or file) for LP output")
    p.add_argument("--out-partition")
    p.set_defaults(func=cmd_partition)

    s = sub.add_parser("schedule", help="baseline BSP schedule plus replication passes")
    s.add_argument("file", type=_existing)
    s.add_argument("-P", type=int, default=8)
    s.add_argument("-g", type=_fraction, default=Fraction(4))
    s.add_argument("-L", type=_fraction, default=Fraction(20))
    s.add_argument("--passes", choices=("none", "basic", "advanced"), default="advanced")
    s.add_argument("--ablate", type=lambda t: [x for x in t.split(",") if x], default=[],
                   help="comma separated subset of br,sm,sr run on top of the basic pass")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--budget", type=int, default=100, help="hill climbing sweeps")
    s.add_argument("--out-schedule")
    s.add_argument("--ledger", help="CSV log of evaluated moves")
    s.set_defaults(func=cmd_schedule)

    b = sub.add_parser("bench", help="run a parameter grid over a directory of instances")
    b.add_argument("instances", type=_existing)
    b.add_argument("--config", type=_existing)
    b.add_argument("--out", help="CSV output (default stdout)")
    b.add_argument("--summary", help="write per-configuration aggregates here")
    b.add_argument("--jobs", type=int, default=None, help="worker processes (default $REPART_JOBS or 1)")
    b.add_argument("--timing", action="store_true", help="record wall time (makes reruns differ)")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("convert", help="build instances from matrices, tuple logs or generators")
    c.add_argument("what", choices=("mtx", "tuples", "two-cliques", "bipartite", "suite"))
    c.add_argument("input", nargs="?", type=_existing)
    c.add_argument("-o", "--output", default="-")
    c.add_argument("--model", choices=("finegrained", "rownet", "sptrsv"), default="finegrained")
    c.add_argument("--kappa0", type=int, default=1000)
    c.add_argument("--lo", type=_fraction, default=Fraction(1))
    c.add_argument("--hi", type=_fraction, default=Fraction(10))
    c.add_argument("-n", type=int, default=8)
    c.add_argument("--eps", type=_fraction, default=Fraction(1, 4))
    c.add_argument("-P", type=int, default=2)
    c.add_argument("-c", type=int, default=2)
    c.add_argument("-m", type=int, default=1)
    c.add_argument("--count", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_convert)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "convert" and args.what in ("mtx", "tuples") and args.input is None:
        ap.error(f"convert {args.what} needs an input file")
    if getattr(args, "ablate", None):
        unknown = set(args.ablate) - set(ABLATIONS)
        if unknown:
            ap.error(f"unknown ablation {sorted(unknown)}; choose from br, sm, sr")
    if getattr(args, "command", None) == "partition" and args.solver == "external" and not args.command:
        from .ilp import DEFAULT_COMMAND
        args.command = DEFAULT_COMMAND
    try:
        return args.func(args)
    except (ReplicationError, SolverError, ValueError, OSError) as err:
        print(f"repart: error: {err}", file=sys.stderr)
        return 2 if isinstance(err, (OSError, ValueError)) else 1


if __name__ == "__main__":
    sys.exit(main())
