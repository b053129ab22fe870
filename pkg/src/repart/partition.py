"""Balanced hypergraph partitioning with and without replication.

A node may sit on several processors.  The connectivity of a hyperedge is the
size of the smallest processor set jointly covering its pins, found by scanning
processor masks in order of popcount; with disjoint parts this is the usual
number of parts touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

from .model import Hypergraph, ReplicationError, exact


class UncoveredNode(ReplicationError):
    def __init__(self, node: int):
        super().__init__(f"node {node} is not assigned to any processor")
        self.node = node


class TooLarge(ReplicationError):
    pass


class Infeasible(ReplicationError):
    pass


@dataclass(frozen=True)
class BalanceSpec:
    epsilon: Fraction
    weighted: bool = False
    floor: bool = False  # floor the bound, as in the hardness reductions

    def __post_init__(self):
        eps = exact(self.epsilon)
        if not 0 < eps < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
        object.__setattr__(self, "epsilon", Fraction(eps))

    def bound(self, h: Hypergraph, P: int):
        total = h.total_weight() if self.weighted else h.n
        b = (1 + self.epsilon) / P * total
        return math.floor(b) if self.floor else exact(b)

    def load(self, h: Hypergraph, v: int):
        return h.node_weight[v] if self.weighted else 1


@dataclass(frozen=True)
class ReplicatedPartition:
    """``sets[p]`` holds the nodes assigned to processor ``p``; sets may overlap."""

    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))

    @property
    def P(self) -> int:
        return len(self.sets)

    @classmethod
    def from_masks(cls, masks: Sequence[int], P: int) -> "ReplicatedPartition":
        return cls(tuple(frozenset(v for v, m in enumerate(masks) if m >> p & 1) for p in range(P)))

    @classmethod
    def from_assignment(cls, procs: Sequence[int], P: int) -> "ReplicatedPartition":
        return cls.from_masks([1 << p for p in procs], P)

    def masks(self, n: int) -> list[int]:
        masks = [0] * n
        for p, s in enumerate(self.sets):
            for v in s:
                masks[v] |= 1 << p
        return masks

    def check_cover(self, n: int) -> None:
        for v, m in enumerate(self.masks(n)):
            if not m:
                raise UncoveredNode(v)

    def is_disjoint(self) -> bool:
        return sum(len(s) for s in self.sets) == len(frozenset().union(*self.sets))

    def max_replicas(self, n: int) -> int:
        return max((bin(m).count("1") for m in self.masks(n)), default=0)


class BalanceViolation(NamedTuple):
    proc: int
    load: int | Fraction
    bound: int | Fraction


def check_balance(h: Hypergraph, part: ReplicatedPartition, spec: BalanceSpec) -> list[BalanceViolation]:
    """Every processor whose load strictly exceeds the bound; empty means balanced."""
    part.check_cover(h.n)
    bound = spec.bound(h, part.P)
    out = []
    for p, s in enumerate(part.sets):
        load = sum(spec.load(h, v) for v in s)
        if load > bound:
            out.append(BalanceViolation(p, load, bound))
    return out


@lru_cache(maxsize=None)
def masks_by_popcount(P: int) -> tuple[int, ...]:
    return tuple(sorted(range(1, 1 << P), key=lambda m: (bin(m).count("1"), m)))


@lru_cache(maxsize=1 << 16)
def min_cover(pin_masks: frozenset[int], P: int) -> int:
    """Smallest number of processors hitting every pin mask (0 for no pins)."""
    if not pin_masks:
        return 0
    if 0 in pin_masks:
        raise ValueError("a pin without processors cannot be covered")
    for cand in masks_by_popcount(P):
        if all(cand & m for m in pin_masks):
            return bin(cand).count("1")
    raise AssertionError("full processor mask always covers")


def lambda_of_edge(edge: Iterable[int], part: ReplicatedPartition, P: int | None = None) -> int:
    P = part.P if P is None else P
    pins = []
    for v in edge:
        m = 0
        for p in range(P):
            if v in part.sets[p]:
                m |= 1 << p
        if not m:
            raise UncoveredNode(v)
        pins.append(m)
    return min_cover(frozenset(pins), P)


def partition_cost(h: Hypergraph, part: ReplicatedPartition):
    masks = part.masks(h.n)
    total = 0
    for e, mu in zip(h.edges, h.edge_weight):
        pins = frozenset(masks[v] for v in e)
        if 0 in pins:
            raise UncoveredNode(next(v for v in e if not masks[v]))
        total += mu * (min_cover(pins, part.P) - 1)
    return exact(total)


def _minimal(masks: Iterable[int]) -> frozenset[int]:
    # a pin mask containing another one is hit whenever the smaller one is
    ms = sorted(set(masks), key=lambda m: bin(m).count("1"))
    keep = []
    for m in ms:
        if not any(k & m == k for k in keep):
            keep.append(m)
    return frozenset(keep)


class SearchResult(NamedTuple):
    cost: int | Fraction
    partition: ReplicatedPartition


DEFAULT_SPACE_LIMIT = 3 ** 14


def exact_partition_search(
    h: Hypergraph,
    P: int,
    spec: BalanceSpec,
    allow_replication: bool,
    replica_cap: int | None = None,
    space_limit: int = DEFAULT_SPACE_LIMIT,
) -> SearchResult:
    """Brute-force optimum over balanced (replicated) partitions.

    Nodes are assigned in id order; each node tries processor masks ordered by
    popcount then value, and processors never used so far are only opened in
    index order.  Branches are cut when the connectivity of the already-placed
    pins (a lower bound, since covers only grow) reaches the incumbent.  The
    witness is the first optimum met in this order.
    """
    cap = P if allow_replication else 1
    if replica_cap is not None:
        cap = min(cap, replica_cap)
    if cap < 1:
        raise ValueError("replica cap must be at least 1")
    options = [m for m in masks_by_popcount(P) if bin(m).count("1") <= cap]
    if len(options) ** h.n > space_limit:
        raise TooLarge(f"{len(options)}^{h.n} assignments exceed the limit {space_limit}")

    bound = spec.bound(h, P)
    weight = [spec.load(h, v) for v in range(h.n)]
    if sum(weight) > bound * P or any(w > bound for w in weight):
        raise Infeasible(f"total load {sum(weight)} cannot fit under {bound} per processor")

    inc = h.incident()
    mu = h.edge_weight
    suffix = [0] * (h.n + 1)
    for v in range(h.n - 1, -1, -1):
        suffix[v] = suffix[v + 1] + weight[v]

    load = [0] * P
    edge_pins: list[list[int]] = [[] for _ in h.edges]
    edge_lam = [0] * h.num_edges
    chosen = [0] * h.n
    best_cost = None
    best_masks = None

    def recurse(v: int, used: int, lb) -> None:
        nonlocal best_cost, best_masks
        if v == h.n:
            if best_cost is None or lb < best_cost:
                best_cost, best_masks = lb, list(chosen)
            return
        free = sum(bound - x for x in load)
        if free < suffix[v]:
            return
        for m in options:
            # canonical labelling: processors >= used are interchangeable
            fresh = m >> used
            if fresh & (fresh + 1):
                continue
            if any(m >> p & 1 and load[p] + weight[v] > bound for p in range(P)):
                continue
            delta = 0
            saved = []
            for e in inc[v]:
                pins = edge_pins[e]
                pins.append(m)
                lam = min_cover(_minimal(pins), P)
                old = edge_lam[e]
                saved.append(old)
                delta += mu[e] * (lam - max(old, 1))
                edge_lam[e] = lam
            new_lb = lb + delta
            if best_cost is None or new_lb < best_cost:
                for p in range(P):
                    if m >> p & 1:
                        load[p] += weight[v]
                chosen[v] = m
                recurse(v + 1, max(used, m.bit_length()), new_lb)
                for p in range(P):
                    if m >> p & 1:
                        load[p] -= weight[v]
            for e, old in zip(reversed(inc[v]), reversed(saved)):
                edge_pins[e].pop()
                edge_lam[e] = old

    recurse(0, 0, 0)
    if best_cost is None:
        raise Infeasible("no balanced assignment exists")
    return SearchResult(exact(best_cost), ReplicatedPartition.from_masks(best_masks, P))


def write_partition(part: ReplicatedPartition, n: int) -> str:
    lines = []
    for v, m in enumerate(part.masks(n)):
        procs = [str(p) for p in range(part.P) if m >> p & 1]
        lines.append(" ".join([str(v)] + procs))
    return "\n".join(lines) + "\n"


def read_partition(text: str, P: int | None = None) -> ReplicatedPartition:
    rows = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v, *procs = (int(t) for t in line.split())
        except ValueError:
            raise ValueError(f"line {lineno}: expected integers, got {line!r}") from None
        rows[v] = procs
    if P is None:
        P = 1 + max((p for ps in rows.values() for p in ps), default=0)
    return ReplicatedPartition(tuple(frozenset(v for v, ps in rows.items() if p in ps) for p in range(P)))
