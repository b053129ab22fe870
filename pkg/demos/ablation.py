"""Which replication pass matters?  A small ablation over the synthetic suite.

Each pass runs on top of the basic single-node pass; the numbers are geometric
mean cost reductions against the non-replicating baseline.  Pass a count on the
command line for a larger sample (the default keeps the run under a minute).
"""
import sys

from repart.baseline import baseline_schedule
from repart.bsp import BspParams, total_cost
from repart.ingest import synthetic_suite
from repart.replicate import advanced_heuristic
from repart.stats import CostRow, aggregate

count = int(sys.argv[1]) if len(sys.argv) > 1 else 20
suite = synthetic_suite(count, seed=0)
configs = {
    "B": ("basic",),
    "B+BR": ("basic", "batch"),
    "B+SM": ("basic", "merge"),
    "B+SR": ("basic", "sstep-repl"),
    "all": ("basic", "batch", "merge", "sstep-repl"),
}

for g, L in ((1, 20), (4, 20), (16, 20), (4, 400)):
    params = BspParams(8, g, L)
    bases = [baseline_schedule(dag, params) for _, dag in suite]
    line = []
    for label, passes in configs.items():
        rows = []
        for (name, dag), base in zip(suite, bases):
            out, _ = advanced_heuristic(dag, base, params, passes)
            rows.append(CostRow(name, 8, g, L, None, label, total_cost(dag, base, params),
                                total_cost(dag, out, params)))
        line.append(f"{label} {aggregate(rows).reduction_pct:5.1f}%")
    print(f"g={g:2d} L={L:3d}:  " + "  ".join(line))
