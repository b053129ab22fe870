"""Weighted hypergraphs and DAGs shared by the partitioning and scheduling code.

Weights are kept exact: plain ``int`` when integral, ``Fraction`` otherwise.
Floats are converted through their decimal string so ``0.05`` becomes ``1/20``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple, Sequence


class ReplicationError(Exception):
    """Base class for all errors raised by this package."""


class CycleDetected(ReplicationError):
    def __init__(self, node: int):
        super().__init__(f"directed cycle through node {node}")
        self.node = node


class IndexOutOfRange(ReplicationError):
    pass


class InvalidGraph(ReplicationError):
    pass


def exact(x) -> int | Fraction:
    """Normalize a number to ``int`` or ``Fraction`` without losing precision."""
    if isinstance(x, bool):
        raise TypeError("booleans are not weights")
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        x = Fraction(repr(x))
    elif isinstance(x, str):
        x = Fraction(x.strip())
    elif isinstance(x, Rational):
        x = Fraction(x)
    else:
        raise TypeError(f"cannot use {type(x).__name__} as an exact weight")
    return int(x) if x.denominator == 1 else x


def _weights(values, count: int, what: str) -> tuple:
    if values is None:
        return (1,) * count
    out = tuple(exact(w) for w in values)
    if len(out) != count:
        raise InvalidGraph(f"expected {count} {what} weights, got {len(out)}")
    for i, w in enumerate(out):
        if w <= 0:
            raise InvalidGraph(f"{what} weight of {i} must be positive, got {w}")
    return out


@dataclass(frozen=True)
class Hypergraph:
    """Hypergraph with node weights (compute) and hyperedge weights (data)."""

    n: int
    edges: tuple[tuple[int, ...], ...]
    node_weight: tuple = None
    edge_weight: tuple = None

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        for i, e in enumerate(edges):
            if not e:
                raise InvalidGraph(f"hyperedge {i} is empty")
            if len(set(e)) != len(e):
                raise InvalidGraph(f"hyperedge {i} has duplicate pins")
            for v in e:
                if not 0 <= v < self.n:
                    raise IndexOutOfRange(f"pin {v} of hyperedge {i} outside [0, {self.n})")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "node_weight", _weights(self.node_weight, self.n, "node"))
        object.__setattr__(self, "edge_weight", _weights(self.edge_weight, len(edges), "edge"))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def pins(self) -> int:
        return sum(len(e) for e in self.edges)

    def total_weight(self):
        return sum(self.node_weight)

    def incident(self) -> list[list[int]]:
        """For every node, the ids of hyperedges containing it."""
        inc = [[] for _ in range(self.n)]
        for i, e in enumerate(self.edges):
            for v in e:
                inc[v].append(i)
        return inc


@dataclass(frozen=True)
class Dag:
    """Computational DAG; ``work`` is the compute weight, ``comm`` the output size."""

    n: int
    edges: tuple[tuple[int, int], ...]
    work: tuple = None
    comm: tuple = None
    parents: tuple = field(init=False, repr=False, compare=False)
    children: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        seen = set()
        par = [[] for _ in range(self.n)]
        chi = [[] for _ in range(self.n)]
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise IndexOutOfRange(f"edge ({u}, {v}) outside [0, {self.n})")
            if u == v:
                raise InvalidGraph(f"self-loop on node {u}")
            if (u, v) in seen:
                raise InvalidGraph(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            par[v].append(u)
            chi[u].append(v)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "work", _weights(self.work, self.n, "work"))
        object.__setattr__(self, "comm", _weights(self.comm, self.n, "comm"))
        object.__setattr__(self, "parents", tuple(tuple(sorted(p)) for p in par))
        object.__setattr__(self, "children", tuple(tuple(sorted(c)) for c in chi))

    def total_work(self):
        return sum(self.work)


class HypergraphStats(NamedTuple):
    nodes: int
    edges: int
    pins: int
    node_weight: int | Fraction
    edge_weight: int | Fraction


def hypergraph_stats(h: Hypergraph) -> HypergraphStats:
    return HypergraphStats(h.n, h.num_edges, h.pins, sum(h.node_weight), sum(h.edge_weight))


def validate_dag(dag: Dag) -> list[int]:
    """Topological order by Kahn's algorithm, always taking the smallest ready id.

    Raises ``CycleDetected`` naming a node that lies on a directed cycle.
    """
    indeg = [len(p) for p in dag.parents]
    ready = [v for v in range(dag.n) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in dag.children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) == dag.n:
        return order
    raise CycleDetected(_node_on_cycle(dag, indeg))


def _node_on_cycle(dag: Dag, indeg: Sequence[int]) -> int:
    # walk backwards through unfinished parents; with finite n we must revisit a node
    v = min(i for i, d in enumerate(indeg) if d > 0)
    seen = set()
    while v not in seen:
        seen.add(v)
        v = next(u for u in dag.parents[v] if indeg[u] > 0)
    return v


def bottom_levels(dag: Dag, order: Sequence[int] | None = None) -> list:
    """Work-weighted longest path from each node to a sink, including the node."""
    order = validate_dag(dag) if order is None else order
    level = [0] * dag.n
    for v in reversed(order):
        level[v] = dag.work[v] + max((level[c] for c in dag.children[v]), default=0)
    return level
