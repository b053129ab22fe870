"""From a plain BSP schedule to a replicating one, step by step.

We build a small stencil-like DAG, schedule it on 8 processors without any
recomputation, and then let the replication passes trade extra work for fewer
messages and fewer synchronisation barriers.
"""
import random

from repart.baseline import baseline_schedule, sequential_schedule
from repart.bsp import BspParams, superstep_costs, total_cost, validate_schedule
from repart.ingest import gen_bipartite_dag, random_dag
from repart.replicate import advanced_heuristic, basic_pass
from repart.sched_ilp import exact_tiny_scheduler

dag = random_dag(80, random.Random(7), "stencil")
params = BspParams(8, 4, 20)

seq = sequential_schedule(dag, params)
base = baseline_schedule(dag, params)
print("sequential cost:", total_cost(dag, seq, params))
print(f"baseline cost:   {total_cost(dag, base, params)} over {base.S} supersteps")

br = superstep_costs(dag, base, params)
print("per-superstep work:", br.work)
print("per-superstep h:   ", br.comm)

basic, moves = basic_pass(dag, base, params)
print(f"basic pass:      {total_cost(dag, basic, params)} ({sum(m.accepted for m in moves)} accepted moves)")

adv, moves = advanced_heuristic(dag, base, params)
print(f"advanced:        {total_cost(dag, adv, params)} over {adv.S} supersteps")
print("still valid:", validate_schedule(dag, adv, params) == [])
kinds = {}
for m in moves:
    if m.accepted:
        kinds[m.kind] = kinds.get(m.kind, 0) + 1
print("accepted moves by kind:", kinds)

# On the tiny bipartite construction the exact optimum is known in closed form.
tiny, tp = gen_bipartite_dag(2, 2, 1)
no_r, _ = exact_tiny_scheduler(tiny, tp, allow_replication=False)
yes_r, witness = exact_tiny_scheduler(tiny, tp, allow_replication=True)
print(f"\nbipartite P=2 c=2: optimum {no_r} without replication, {yes_r} with it")
for s in range(witness.S):
    print(f"  superstep {s}: compute {[sorted(x) for x in witness.compute[s]]}, "
          f"sends {[sorted(x) for x in witness.comm[s]]}")
