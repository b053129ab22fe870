"""Two overlapping dense clusters on two processors: how much does replication buy?

Without replication the balance constraint forces part of one clique onto the
other processor and every hyperedge touching the split pays.  With replication
the shared nodes are copied to both sides and the cut disappears.
"""
from fractions import Fraction

from repart.ingest import gen_two_cliques
from repart.partition import BalanceSpec, exact_partition_search, lambda_of_edge
from repart.partition_ilp import build_partition_ilp, decode_partition
from repart.ilp import lp_text, solve_milp

h = gen_two_cliques(8, Fraction(1, 4))
spec = BalanceSpec(Fraction(1, 4))
print(f"{h.n} nodes, {len(h.edges)} hyperedges, eps = {spec.epsilon}")

plain = exact_partition_search(h, 2, spec, allow_replication=False)
repl = exact_partition_search(h, 2, spec, allow_replication=True)
print("best cost without replication:", plain.cost)
print("best cost with replication:   ", repl.cost)

# where the plain partition pays
cut = [e for e in h.edges if lambda_of_edge(e, plain.partition) > 1]
print(f"{len(cut)} hyperedges span both processors in the plain optimum")

for v, mask in enumerate(repl.partition.masks(h.n)):
    if bin(mask).count("1") > 1:
        print(f"  node {v} is copied to both processors")

# the same optimum from the integer program
for mode in ("base", "dupl", "repl"):
    model = build_partition_ilp(h, 2, spec, mode)
    sol = solve_milp(model)
    print(f"ILP {mode:4s}: {len(model.vars):4d} variables, objective {sol.objective}, "
          f"up to {decode_partition(sol, model).max_replicas(h.n)} copies per node")

print()
print("start of the duplication model in LP format:")
lines = [ln for ln in lp_text(build_partition_ilp(h, 2, spec, "dupl")).splitlines() if not ln.startswith("\\")]
print("\n".join(lines[:6]))
