"""ILP encodings of balanced partitioning: plain, duplication (at most two
replicas per node) and unlimited replication.

Variable names: ``x_{v}_{p}`` node on processor, ``y_{e}_{p}`` processor used by
hyperedge, ``zv_{v}`` node duplicated, ``z_{v}_{e}_{p}`` pin covered by processor.
"""

from __future__ import annotations

from itertools import permutations
from typing import NamedTuple

from .ilp import IlpModel, IlpSolution, write_solution
from .model import Hypergraph, ReplicationError
from .partition import (BalanceSpec, ReplicatedPartition, UncoveredNode, masks_by_popcount,
                        partition_cost)

MODES = ("base", "dupl", "repl")


class InvalidMode(ReplicationError):
    pass


class EmptyHypergraph(ReplicationError):
    pass


class InconsistentSolution(ReplicationError):
    pass


def x_name(v, p):
    return f"x_{v}_{p}"


def y_name(e, p):
    return f"y_{e}_{p}"


def zv_name(v):
    return f"zv_{v}"


def z_name(v, e, p):
    return f"z_{v}_{e}_{p}"


def build_partition_ilp(h: Hypergraph, P: int, spec: BalanceSpec, mode: str = "base") -> IlpModel:
    if mode not in MODES:
        raise InvalidMode(mode)
    if h.n == 0:
        raise EmptyHypergraph("hypergraph has no nodes")
    if P < 2:
        raise ValueError("partitioning ILPs need P >= 2")
    m = IlpModel(meta={"mode": mode, "n": h.n, "P": P, "edges": h.num_edges,
                       "epsilon": spec.epsilon, "weighted": spec.weighted})
    procs = range(P)
    for v in range(h.n):
        for p in procs:
            m.add_var(x_name(v, p))
    for e in range(h.num_edges):
        for p in procs:
            m.add_var(y_name(e, p))
    if mode == "dupl":
        for v in range(h.n):
            m.add_var(zv_name(v))
    elif mode == "repl":
        for e, pins in enumerate(h.edges):
            for v in pins:
                for p in procs:
                    m.add_var(z_name(v, e, p))

    if mode == "base":
        for v in range(h.n):
            m.add_constraint([(1, x_name(v, p)) for p in procs], "=", 1, f"assign_{v}")
    elif mode == "dupl":
        for v in range(h.n):
            m.add_constraint([(1, x_name(v, p)) for p in procs] + [(-1, zv_name(v))], "=", 1, f"assign_{v}")
    else:
        covered = {v for e in h.edges for v in e}
        for v in range(h.n):
            if v not in covered:
                m.add_constraint([(1, x_name(v, p)) for p in procs], ">=", 1, f"assign_{v}")

    for e, pins in enumerate(h.edges):
        for v in pins:
            if mode == "base":
                for p in procs:
                    m.add_constraint([(1, y_name(e, p)), (-1, x_name(v, p))], ">=", 0, f"use_{e}_{v}_{p}")
            elif mode == "dupl":
                for p in procs:
                    m.add_constraint([(1, y_name(e, p)), (-1, x_name(v, p)), (1, zv_name(v))], ">=", 0,
                                     f"use_{e}_{v}_{p}")
                # ordered pairs: together with the P single-processor rows this is P^2 rows per pin
                for p1, p2 in permutations(procs, 2):
                    m.add_constraint([(1, y_name(e, p1)), (1, y_name(e, p2)),
                                      (-1, x_name(v, p1)), (-1, x_name(v, p2))], ">=", -1,
                                     f"pair_{e}_{v}_{p1}_{p2}")
            else:
                m.add_constraint([(1, z_name(v, e, p)) for p in procs], "=", 1, f"pin_{e}_{v}")
                for p in procs:
                    m.add_constraint([(1, x_name(v, p)), (-1, z_name(v, e, p))], ">=", 0, f"host_{e}_{v}_{p}")
                    m.add_constraint([(1, y_name(e, p)), (-1, z_name(v, e, p))], ">=", 0, f"use_{e}_{v}_{p}")

    bound = spec.bound(h, P)
    for p in procs:
        m.add_constraint([(spec.load(h, v), x_name(v, p)) for v in range(h.n)], "<=", bound, f"balance_{p}")

    m.set_objective([(h.edge_weight[e], y_name(e, p)) for e in range(h.num_edges) for p in procs],
                    offset=-sum(h.edge_weight))
    return m


def decode_partition(sol: IlpSolution, model: IlpModel) -> ReplicatedPartition:
    n, P, mode = model.meta["n"], model.meta["P"], model.meta["mode"]
    masks = [0] * n
    for v in range(n):
        for p in range(P):
            if sol.value(x_name(v, p)) == 1:
                masks[v] |= 1 << p
        if not masks[v]:
            raise UncoveredNode(v)
        k = bin(masks[v]).count("1")
        if mode == "base" and k != 1:
            raise InconsistentSolution(f"node {v} on {k} processors in a non-replicating model")
        if mode == "dupl" and k > 2:
            raise InconsistentSolution(f"node {v} on {k} processors in the duplication model")
    if mode == "repl":
        for name in model.vars:
            if name.startswith("z_") and sol.value(name) == 1:
                _, v, e, p = name.split("_")
                if not masks[int(v)] >> int(p) & 1:
                    raise InconsistentSolution(f"pin ({v}, {e}) covered by processor {p} not hosting it")
        pins = {}
        for name in model.vars:
            if name.startswith("z_"):
                _, v, e, p = name.split("_")
                pins.setdefault((v, e), 0)
                pins[(v, e)] += sol.value(name)
        for (v, e), k in pins.items():
            if k != 1:
                raise InconsistentSolution(f"pin ({v}, {e}) covered {k} times")
    return ReplicatedPartition.from_masks(masks, P)


def encode_partition(h: Hypergraph, part: ReplicatedPartition, model: IlpModel) -> dict:
    """Variable values realizing ``part`` with the tightest hyperedge variables."""
    P, mode = model.meta["P"], model.meta["mode"]
    masks = part.masks(h.n)
    values = {name: 0 for name in model.vars}
    for v, mk in enumerate(masks):
        if not mk:
            raise UncoveredNode(v)
        k = bin(mk).count("1")
        if (mode == "base" and k != 1) or (mode == "dupl" and k > 2):
            raise InconsistentSolution(f"node {v} has {k} replicas, not allowed in mode {mode}")
        for p in range(P):
            if mk >> p & 1:
                values[x_name(v, p)] = 1
        if mode == "dupl":
            values[zv_name(v)] = k - 1
    for e, pins in enumerate(h.edges):
        cover = next(c for c in masks_by_popcount(P) if all(c & masks[v] for v in pins))
        for p in range(P):
            if cover >> p & 1:
                values[y_name(e, p)] = 1
        if mode == "repl":
            for v in pins:
                p = (cover & masks[v] & -(cover & masks[v])).bit_length() - 1
                values[z_name(v, e, p)] = 1
    return values


def write_warm_start(h: Hypergraph, part: ReplicatedPartition, model: IlpModel, path=None) -> str:
    values = encode_partition(h, part, model)
    return write_solution(values, path, "feasible", model.evaluate(values))


class SolutionCheck(NamedTuple):
    partition: ReplicatedPartition
    true_cost: object
    model_objective: object
    claimed: object
    consistent: bool


def score_solution(h: Hypergraph, sol: IlpSolution, model: IlpModel) -> SolutionCheck:
    """Decode and re-score; ``consistent`` is false when a claimed objective disagrees."""
    part = decode_partition(sol, model)
    cost = partition_cost(h, part)
    obj = model.evaluate(sol.values)
    bad = model.violations(sol.values)
    claimed_ok = sol.objective is None or abs(sol.objective - cost) <= 1e-6
    consistent = not bad and obj == cost and claimed_ok
    return SolutionCheck(part, cost, obj, sol.objective, consistent)
