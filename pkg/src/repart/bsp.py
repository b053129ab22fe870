"""BSP schedules: representation, validity rules and exact cost.

Supersteps and processors are 0-indexed.  A value is present on ``p`` at
superstep ``s`` when it was computed on ``p`` at some ``s' <= s`` or sent to ``p``
in the communication phase of some ``s' < s``.  A superstep with no sends at
all is charged no synchronization cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

from .model import Dag, ReplicationError, exact

INF = float("inf")


class InvalidSchedule(ReplicationError):
    pass


@dataclass(frozen=True)
class BspParams:
    P: int
    g: object = 1
    L: object = 0

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("need at least one processor")
        object.__setattr__(self, "g", exact(self.g))
        object.__setattr__(self, "L", exact(self.L))
        if self.g < 0 or self.L < 0:
            raise ValueError("g and L must be non-negative")


@dataclass
class BspSchedule:
    """``compute[s][p]`` is a set of nodes, ``comm[s][p]`` a set of ``(node, target)``."""

    P: int
    compute: list
    comm: list

    @classmethod
    def empty(cls, P: int, S: int) -> "BspSchedule":
        return cls(P, [[set() for _ in range(P)] for _ in range(S)],
                   [[set() for _ in range(P)] for _ in range(S)])

    @property
    def S(self) -> int:
        return len(self.compute)

    def copy(self) -> "BspSchedule":
        return BspSchedule(self.P, [[set(x) for x in row] for row in self.compute],
                           [[set(x) for x in row] for row in self.comm])

    def ensure(self, S: int) -> None:
        while self.S < S:
            self.compute.append([set() for _ in range(self.P)])
            self.comm.append([set() for _ in range(self.P)])

    def add_compute(self, v: int, p: int, s: int) -> None:
        self.ensure(s + 1)
        self.compute[s][p].add(v)

    def add_send(self, v: int, p: int, q: int, s: int) -> None:
        self.ensure(s + 1)
        self.comm[s][p].add((v, q))

    def placements(self) -> Iterator[tuple[int, int, int]]:
        """``(node, proc, step)`` in sorted order."""
        for s in range(self.S):
            for p in range(self.P):
                for v in sorted(self.compute[s][p]):
                    yield v, p, s

    def sends(self) -> Iterator[tuple[int, int, int, int]]:
        """``(node, sender, target, step)`` in sorted order."""
        for s in range(self.S):
            for p in range(self.P):
                for v, q in sorted(self.comm[s][p]):
                    yield v, p, q, s

    def num_sends(self) -> int:
        return sum(len(x) for row in self.comm for x in row)

    def is_replicated(self) -> bool:
        seen = set()
        for v, _, _ in self.placements():
            if v in seen:
                return True
            seen.add(v)
        return False

    def drop_empty_supersteps(self) -> None:
        keep = [s for s in range(self.S) if any(self.compute[s]) or any(self.comm[s])]
        self.compute = [self.compute[s] for s in keep]
        self.comm = [self.comm[s] for s in keep]


def presence(dag: Dag, sched: BspSchedule) -> list[list]:
    """Earliest superstep at which each node is present on each processor (``INF`` if never)."""
    pres = [[INF] * sched.P for _ in range(dag.n)]
    for v, p, s in sched.placements():
        if s < pres[v][p]:
            pres[v][p] = s
    for v, _, q, s in sched.sends():
        if s + 1 < pres[v][q]:
            pres[v][q] = s + 1
    return pres


def first_need(dag: Dag, sched: BspSchedule) -> list[list]:
    """Earliest superstep at which each node is used on each processor, by a
    child computed there or by a send from there (``INF`` if never)."""
    need = [[INF] * sched.P for _ in range(dag.n)]
    for c, p, s in sched.placements():
        for u in dag.parents[c]:
            if s < need[u][p]:
                need[u][p] = s
    for v, p, _, s in sched.sends():
        if s < need[v][p]:
            need[v][p] = s
    return need


class Violation(NamedTuple):
    kind: str
    node: int
    proc: int
    step: int
    detail: str = ""


def _structure(dag: Dag, sched: BspSchedule) -> list[Violation]:
    bad = []
    if len(sched.comm) != len(sched.compute):
        bad.append(Violation("shape", -1, -1, -1, "compute and comm disagree on S"))
        return bad
    for s in range(sched.S):
        if len(sched.compute[s]) != sched.P or len(sched.comm[s]) != sched.P:
            bad.append(Violation("shape", -1, -1, s, "wrong processor count"))
            return bad
        for p in range(sched.P):
            for v in sched.compute[s][p]:
                if not 0 <= v < dag.n:
                    bad.append(Violation("index", v, p, s, "node out of range"))
            for v, q in sched.comm[s][p]:
                if not 0 <= v < dag.n or not 0 <= q < sched.P:
                    bad.append(Violation("index", v, p, s, f"send to {q} out of range"))
                elif q == p:
                    bad.append(Violation("self-send", v, p, s))
    return bad


def validate_schedule(dag: Dag, sched: BspSchedule, params: BspParams | None = None,
                      allow_replication: bool = True) -> list[Violation]:
    """All rule violations; an empty list means the schedule is valid."""
    if params is not None and params.P != sched.P:
        return [Violation("shape", -1, -1, -1, f"schedule has {sched.P} processors, params {params.P}")]
    bad = _structure(dag, sched)
    if bad:
        return bad
    pres = presence(dag, sched)
    where = [[] for _ in range(dag.n)]
    for v, p, s in sched.placements():
        where[v].append((p, s))
        for u in dag.parents[v]:
            if pres[u][p] > s:
                bad.append(Violation("missing-parent", v, p, s, f"parent {u}"))
    seen_sends = {}
    for v, p, q, s in sched.sends():
        if pres[v][p] > s:
            bad.append(Violation("send-unavailable", v, p, s, f"to {q}"))
        key = (v, p, q)
        if key in seen_sends:
            bad.append(Violation("duplicate-send", v, p, s, f"also sent to {q} in {seen_sends[key]}"))
        else:
            seen_sends[key] = s
    for v in range(dag.n):
        if not where[v]:
            bad.append(Violation("uncovered", v, -1, -1))
            continue
        procs = [p for p, _ in where[v]]
        for p in sorted(set(procs)):
            if procs.count(p) > 1:
                steps = sorted(s for q, s in where[v] if q == p)
                bad.append(Violation("recomputed", v, p, steps[1]))
        if not allow_replication and len(where[v]) > 1:
            p, s = sorted(where[v])[1]
            bad.append(Violation("replicated", v, p, s))
    return bad


class CostBreakdown(NamedTuple):
    work: list
    h: list
    comm: list
    total: object


def superstep_costs(dag: Dag, sched: BspSchedule, params: BspParams) -> CostBreakdown:
    bad = _structure(dag, sched)
    if bad or params.P != sched.P:
        raise InvalidSchedule(str(bad[0]) if bad else "processor count mismatch")
    work, hs, comm = [], [], []
    for s in range(sched.S):
        work.append(max(sum(dag.work[v] for v in sched.compute[s][p]) for p in range(sched.P)))
        out = [0] * sched.P
        inc = [0] * sched.P
        any_send = False
        for p in range(sched.P):
            for v, q in sched.comm[s][p]:
                out[p] += dag.comm[v]
                inc[q] += dag.comm[v]
                any_send = True
        h = max(max(out), max(inc))
        hs.append(h)
        comm.append(params.L + params.g * h if any_send else 0)
    total = exact(sum(work) + sum(comm))
    return CostBreakdown([exact(w) for w in work], [exact(h) for h in hs], [exact(c) for c in comm], total)


def total_cost(dag: Dag, sched: BspSchedule, params: BspParams):
    return superstep_costs(dag, sched, params).total


def surplus_cost(dag: Dag, sched: BspSchedule, params: BspParams):
    return exact(total_cost(dag, sched, params) - Fraction(dag.total_work()) / params.P)


def write_schedule(sched: BspSchedule) -> str:
    lines = [f"{sched.P} {sched.S}"]
    lines.extend(f"compute {p} {s} {v}" for v, p, s in sorted(sched.placements(), key=lambda t: (t[2], t[1], t[0])))
    lines.extend(f"send {p} {s} {v} {q}" for v, p, q, s in sched.sends())
    return "\n".join(lines) + "\n"


def read_schedule(text: str) -> BspSchedule:
    lines = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or len(lines[0]) != 2:
        raise InvalidSchedule("missing 'P S' header")
    P, S = int(lines[0][0]), int(lines[0][1])
    sched = BspSchedule.empty(P, S)
    for i, tok in enumerate(lines[1:], 2):
        try:
            if tok[0] == "compute" and len(tok) == 4:
                p, s, v = map(int, tok[1:])
                if not (0 <= p < P and 0 <= s < S):
                    raise ValueError
                sched.compute[s][p].add(v)
            elif tok[0] == "send" and len(tok) == 5:
                p, s, v, q = map(int, tok[1:])
                if not (0 <= p < P and 0 <= s < S):
                    raise ValueError
                sched.comm[s][p].add((v, q))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise InvalidSchedule(f"line {i}: cannot parse {' '.join(tok)!r}") from None
    return sched
