"""Non-replicating baseline: greedy BSP list scheduling followed by hill climbing.

Both work on an assignment ``proc[v], step[v]``.  Communication is derived
lazily from it: a value needed on another processor is sent from its owner in
the superstep right before the first consumer there.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .bsp import BspParams, BspSchedule, total_cost
from .model import Dag, bottom_levels, exact, validate_dag


@dataclass(frozen=True)
class SchedulerConfig:
    # a superstep is closed once more than this fraction of processors sits idle
    # while at least as many ready nodes are waiting
    max_parallelism_slack: Fraction = Fraction(1, 2)
    hill_climb_budget: int = 100  # maximum number of sweeps
    rng_seed: int | None = None  # None visits nodes in id order

    def __post_init__(self):
        if self.hill_climb_budget < 0:
            raise ValueError("hill climbing budget must be non-negative")
        object.__setattr__(self, "max_parallelism_slack", Fraction(exact(self.max_parallelism_slack)))


def sequential_schedule(dag: Dag, params: BspParams) -> BspSchedule:
    sched = BspSchedule.empty(params.P, 1)
    sched.compute[0][0].update(range(dag.n))
    return sched


def lazy_sends(dag: Dag, proc, step, u: int) -> dict:
    """Target processor -> superstep in which ``u`` must be sent there."""
    out = {}
    pu = proc[u]
    for c in dag.children[u]:
        p = proc[c]
        if p != pu:
            t = step[c] - 1
            if t < out.get(p, t + 1):
                out[p] = t
    return out


def materialize(dag: Dag, P: int, proc, step) -> BspSchedule:
    S = max(step, default=-1) + 1
    sched = BspSchedule.empty(P, max(S, 1))
    for v in range(dag.n):
        sched.compute[step[v]][proc[v]].add(v)
        for q, t in lazy_sends(dag, proc, step, v).items():
            sched.comm[t][proc[v]].add((v, q))
    return sched


def assignment_of(sched: BspSchedule, n: int) -> tuple[list[int], list[int]]:
    proc, step = [-1] * n, [-1] * n
    for v, p, s in sched.placements():
        if proc[v] != -1:
            raise ValueError(f"node {v} is replicated; baseline moves need a non-replicating schedule")
        proc[v], step[v] = p, s
    return proc, step


def _compact(dag: Dag, proc, step) -> list[int]:
    """Renumber supersteps, fusing every boundary that no value crosses."""
    S = max(step, default=-1) + 1
    used = [False] * S
    sending = [False] * S
    for v in range(dag.n):
        used[step[v]] = True
        for t in lazy_sends(dag, proc, step, v).values():
            sending[t] = True
    new = [0] * S
    cur = -1
    opened = False
    for s in range(S):
        if not used[s] and not sending[s]:
            new[s] = max(cur, 0)
            continue
        if not opened:
            cur, opened = cur + 1, True
        new[s] = cur
        if sending[s]:
            opened = False
    return [new[s] for s in step]


def greedy_schedule(dag: Dag, params: BspParams, cfg: SchedulerConfig = SchedulerConfig()) -> BspSchedule:
    """List scheduling into supersteps.

    The least loaded processor takes the ready node needing the least new data
    (then longest path to a sink, then id).  A node may use a value computed on
    another processor only in a later superstep.  The superstep is closed when
    nothing can be placed, or when too many processors are idle while enough
    ready nodes wait to keep them busy after the barrier.
    """
    order = validate_dag(dag)
    prio = bottom_levels(dag, order)
    P, n = params.P, dag.n
    proc, step = [-1] * n, [-1] * n
    missing = [len(ps) for ps in dag.parents]
    ready = {v for v in range(n) if missing[v] == 0}
    here = [set() for _ in range(P)]  # values available on each processor
    s, placed_now, left = 0, 0, n
    loads = [0] * P
    while left:
        idle = 0
        choice = None
        for p in sorted(range(P), key=lambda q: (loads[q], q)):
            best = None
            for v in ready:
                vol = 0
                for u in dag.parents[v]:
                    if u in here[p]:
                        continue
                    if step[u] < s:
                        vol += dag.comm[u]
                    else:
                        break
                else:
                    key = (vol, -prio[v], v)
                    if best is None or key < best:
                        best = key
            if best is not None:
                choice = (p, best[2])
                break
            idle += 1
        # closing early only pays when enough ready work could feed the idle processors
        crowded = idle > cfg.max_parallelism_slack * P and len(ready) >= cfg.max_parallelism_slack * P
        if choice is None or (placed_now and crowded):
            s, placed_now, loads = s + 1, 0, [0] * P
            continue
        p, v = choice
        proc[v], step[v] = p, s
        loads[p] += dag.work[v]
        here[p].add(v)
        here[p].update(dag.parents[v])
        ready.discard(v)
        placed_now += 1
        left -= 1
        for c in dag.children[v]:
            missing[c] -= 1
            if missing[c] == 0:
                ready.add(c)
    step = _compact(dag, proc, step)
    return materialize(dag, P, proc, step)


class _Climber:
    """Assignment plus per-superstep loads, so a move is priced by touching
    only the supersteps it changes."""

    def __init__(self, dag: Dag, params: BspParams, proc, step):
        self.dag, self.params, self.P = dag, params, params.P
        self.proc, self.step = list(proc), list(step)
        self.S = max(step, default=-1) + 1
        self.work = [[0] * self.P for _ in range(self.S)]
        self.snd = [[0] * self.P for _ in range(self.S)]
        self.rcv = [[0] * self.P for _ in range(self.S)]
        self.nsend = [0] * self.S
        self.sends = [{} for _ in range(dag.n)]
        for v in range(dag.n):
            self.work[self.step[v]][self.proc[v]] += dag.work[v]
        for v in range(dag.n):
            self._add_sends(v, lazy_sends(dag, self.proc, self.step, v))

    def _add_sends(self, u, sends, sign=1):
        mu, pu = self.dag.comm[u], self.proc[u]
        for q, t in sends.items():
            self.snd[t][pu] += sign * mu
            self.rcv[t][q] += sign * mu
            self.nsend[t] += sign
        self.sends[u] = sends if sign > 0 else {}

    def term(self, s):
        c = max(self.work[s])
        if self.nsend[s]:
            c += self.params.L + self.params.g * max(max(self.snd[s]), max(self.rcv[s]))
        return c

    def _valid(self, v) -> bool:
        p, s = self.proc[v], self.step[v]
        for u in self.dag.parents[v]:
            if self.step[u] > (s if self.proc[u] == p else s - 1):
                return False
        for c in self.dag.children[v]:
            if s > (self.step[c] if self.proc[c] == p else self.step[c] - 1):
                return False
        return True

    def _apply(self, changes: dict, affected) -> None:
        for u in affected:
            self._add_sends(u, self.sends[u], -1)
        for v, (p, s) in changes.items():
            self.work[self.step[v]][self.proc[v]] -= self.dag.work[v]
            self.proc[v], self.step[v] = p, s
            self.work[s][p] += self.dag.work[v]
        for u in affected:
            self._add_sends(u, lazy_sends(self.dag, self.proc, self.step, u))

    def attempt(self, changes: dict) -> bool:
        """Apply ``changes`` if valid and strictly cheaper; report whether kept."""
        old = {v: (self.proc[v], self.step[v]) for v in changes}
        for v, (p, s) in changes.items():
            self.proc[v], self.step[v] = p, s
        ok = all(self._valid(v) for v in changes)
        for v, (p, s) in old.items():
            self.proc[v], self.step[v] = p, s
        if not ok:
            return False
        affected = set(changes)
        for v in changes:
            affected.update(self.dag.parents[v])
        touched = {s for _, s in old.values()} | {s for _, s in changes.values()}
        for u in affected:
            touched.update(self.sends[u].values())
        before = sum(self.term(s) for s in touched)
        self._apply(changes, affected)
        for u in affected:
            touched.update(self.sends[u].values())
        after = sum(self.term(s) for s in touched)
        if after < before:
            return True
        self._apply(old, affected)
        return False


def hill_climb(dag: Dag, sched: BspSchedule, params: BspParams,
               cfg: SchedulerConfig = SchedulerConfig()) -> BspSchedule:
    """First-improvement local search over single-node moves to a neighbouring
    superstep and swaps inside a superstep.  Never returns anything costlier
    than ``sched``."""
    proc, step = assignment_of(sched, dag.n)
    if dag.n == 0:
        return sched.copy()
    cl = _Climber(dag, params, proc, step)
    order = list(range(dag.n))
    rng = random.Random(cfg.rng_seed) if cfg.rng_seed is not None else None
    for _ in range(cfg.hill_climb_budget):
        if rng:
            rng.shuffle(order)
        improved = False
        for v in order:
            p0, s0 = cl.proc[v], cl.step[v]
            done = False
            for s in (s0 - 1, s0, s0 + 1):
                if not 0 <= s < cl.S:
                    continue
                for p in range(cl.P):
                    if (p, s) != (p0, s0) and cl.attempt({v: (p, s)}):
                        improved = done = True
                        break
                if done:
                    break
        if not improved:
            for s in range(cl.S):
                members = sorted(v for v in range(dag.n) if cl.step[v] == s)
                for i, v in enumerate(members):
                    for w in members[i + 1:]:
                        pv, pw = cl.proc[v], cl.proc[w]
                        if cl.step[v] == s == cl.step[w] and pv != pw:
                            improved |= cl.attempt({v: (pw, s), w: (pv, s)})
        if not improved:
            break
    out = materialize(dag, params.P, cl.proc, _compact(dag, cl.proc, cl.step))
    out.drop_empty_supersteps()
    if total_cost(dag, out, params) > total_cost(dag, sched, params):
        return sched.copy()
    return out


def baseline_schedule(dag: Dag, params: BspParams, cfg: SchedulerConfig = SchedulerConfig()) -> BspSchedule:
    """Non-replicating starting point: greedy list schedule, then hill climbing.

    No fallback to the sequential schedule: a single-processor schedule has no
    communication left for replication to remove.
    """
    return hill_climb(dag, greedy_schedule(dag, params, cfg), params, cfg)
