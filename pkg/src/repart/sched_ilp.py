"""Exact BSP scheduling: an ILP over a fixed superstep horizon, and an
exhaustive branch-and-bound scheduler for tiny DAGs used to check it.

ILP variables: ``x_{v}_{p}_{s}`` computes, ``pres_{v}_{p}_{s}`` presence,
``send_{v}_{p}_{q}_{s}`` communication, continuous ``W_{s}`` and ``H_{s}`` for the
work and h-relation maxima, and ``f_{s}`` flagging supersteps that communicate.
"""

from __future__ import annotations

from itertools import product

from .bsp import BspParams, BspSchedule, total_cost, validate_schedule
from .ilp import CONTINUOUS, IlpModel, IlpSolution
from .model import Dag, ReplicationError, validate_dag
from .partition import TooLarge
from .replicate import cleanup


def x_name(v, p, s):
    return f"x_{v}_{p}_{s}"


def pres_name(v, p, s):
    return f"pres_{v}_{p}_{s}"


def send_name(v, p, q, s):
    return f"send_{v}_{p}_{q}_{s}"


def build_sched_ilp(dag: Dag, params: BspParams, S: int, allow_replication: bool) -> IlpModel:
    validate_dag(dag)
    if S < 1:
        raise ValueError("horizon must be at least one superstep")
    P = params.P
    m = IlpModel(meta={"kind": "schedule", "n": dag.n, "P": P, "S": S, "g": params.g, "L": params.L,
                       "replication": allow_replication})
    V, PR, ST = range(dag.n), range(P), range(S)
    for v, p, s in product(V, PR, ST):
        m.add_var(x_name(v, p, s))
        m.add_var(pres_name(v, p, s))
        for q in PR:
            if q != p:
                m.add_var(send_name(v, p, q, s))
    for s in ST:
        m.add_var(f"W_{s}", CONTINUOUS)
        m.add_var(f"H_{s}", CONTINUOUS)
        m.add_var(f"f_{s}")

    for v in V:
        m.add_constraint([(1, x_name(v, p, s)) for p in PR for s in ST],
                         ">=" if allow_replication else "=", 1, f"cover_{v}")
        if allow_replication:
            for p in PR:
                m.add_constraint([(1, x_name(v, p, s)) for s in ST], "<=", 1, f"once_{v}_{p}")
    for v, p, s in product(V, PR, ST):
        # present only if computed here by now or received in an earlier superstep
        src = [(-1, x_name(v, p, t)) for t in range(s + 1)]
        src += [(-1, send_name(v, r, p, t)) for t in range(s) for r in PR if r != p]
        m.add_constraint([(1, pres_name(v, p, s))] + src, "<=", 0, f"pres_{v}_{p}_{s}")
        for u in dag.parents[v]:
            m.add_constraint([(1, x_name(v, p, s)), (-1, pres_name(u, p, s))], "<=", 0, f"dep_{u}_{v}_{p}_{s}")
        for q in PR:
            if q != p:
                sn = send_name(v, p, q, s)
                m.add_constraint([(1, sn), (-1, pres_name(v, p, s))], "<=", 0, f"avail_{v}_{p}_{q}_{s}")
                m.add_constraint([(1, sn), (-1, f"f_{s}")], "<=", 0, f"flag_{v}_{p}_{q}_{s}")
    for s, p in product(ST, PR):
        m.add_constraint([(1, f"W_{s}")] + [(-dag.work[v], x_name(v, p, s)) for v in V], ">=", 0, f"work_{s}_{p}")
        others = [q for q in PR if q != p]
        m.add_constraint([(1, f"H_{s}")] + [(-dag.comm[v], send_name(v, p, q, s)) for v in V for q in others],
                         ">=", 0, f"out_{s}_{p}")
        m.add_constraint([(1, f"H_{s}")] + [(-dag.comm[v], send_name(v, q, p, s)) for v in V for q in others],
                         ">=", 0, f"in_{s}_{p}")
    obj = []
    for s in ST:
        obj += [(1, f"W_{s}"), (params.g, f"H_{s}")]
        if params.L:
            obj.append((params.L, f"f_{s}"))
    m.set_objective(obj)
    return m


def decode_schedule(sol: IlpSolution, model: IlpModel, dag: Dag) -> BspSchedule:
    """Schedule read off the compute and send variables, with sends that do
    not matter removed (this never raises the cost)."""
    P, S = model.meta["P"], model.meta["S"]
    sched = BspSchedule.empty(P, S)
    for v, p, s in product(range(dag.n), range(P), range(S)):
        if sol.value(x_name(v, p, s)) == 1:
            sched.compute[s][p].add(v)
        for q in range(P):
            if q != p and sol.value(send_name(v, p, q, s)) == 1:
                sched.comm[s][p].add((v, q))
    # the model allows a value to be computed again after it arrived; keep the first copy
    for v, p in product(range(dag.n), range(P)):
        steps = [s for s in range(S) if v in sched.compute[s][p]]
        for s in steps[1:]:
            sched.compute[s][p].discard(v)
    return cleanup(dag, sched)


# -- exhaustive search ----------------------------------------------------------

DEFAULT_MAX_NODES = 8
DEFAULT_MAX_STEPS = 3
DEFAULT_MAX_PROCS = 3


class _Search:
    """Branch and bound over nodes in reverse topological order.

    When a node is reached all its consumers are placed, so the processors
    needing it and their deadlines are known.  A plan for the node fixes where
    it is computed and how every other needing processor gets it (arrival
    superstep and sender, possibly via a processor that merely forwards it).
    All cost terms only grow as plans are added, so the partial cost bounds the
    final one from below.
    """

    def __init__(self, dag, params, S, repl, order):
        self.dag, self.params, self.S, self.repl = dag, params, S, repl
        self.P = params.P
        self.order = order[::-1]
        self.need = [dict() for _ in range(dag.n)]
        self.W = [[0] * self.P for _ in range(S)]
        self.SND = [[0] * self.P for _ in range(S)]
        self.RCV = [[0] * self.P for _ in range(S)]
        self.NS = [0] * S
        self.rest = [0] * (dag.n + 1)
        for i in range(dag.n - 1, -1, -1):
            self.rest[i] = self.rest[i + 1] + dag.work[self.order[i]]
        self.sites = [None] * dag.n
        self.deliv = [None] * dag.n
        self.best = None
        self.best_plan = None

    def partial(self):
        work = sum(max(row) for row in self.W)
        total = sum(sum(row) for row in self.W)
        comm = 0
        for s in range(self.S):
            if self.NS[s]:
                comm += self.params.L + self.params.g * max(max(self.SND[s]), max(self.RCV[s]))
        return work, total, comm

    def bound(self, i):
        work, total, comm = self.partial()
        return max(work, (total + self.rest[i]) / self.P) + comm

    def plans(self, v, used):
        needs = self.need[v]
        P, S = self.P, self.S
        site_opts = []
        for p in range(P):
            hi = needs[p] if p in needs else S - 1
            site_opts.append([None] + list(range(hi + 1)))
        for combo in product(*site_opts):
            sites = {p: t for p, t in enumerate(combo) if t is not None}
            if not sites or (not self.repl and len(sites) > 1):
                continue
            if not needs and len(sites) > 1:
                continue
            targets = [q for q in sorted(needs) if q not in sites]
            spare = [q for q in range(P) if q not in sites and q not in needs] if self.repl or targets else []
            for deliv in self._deliveries(sites, targets, spare, needs):
                touched = set(sites) | set(deliv)
                fresh = sorted(p for p in touched if p >= used)
                if fresh != list(range(used, used + len(fresh))):
                    continue
                sources = {r for _, r in deliv.values()}
                if any(p not in needs and p not in sources for p in sites) and needs:
                    continue
                if any(q not in needs and q not in sources for q in deliv):
                    continue
                yield sites, deliv, max(used, max(touched) + 1)

    def _deliveries(self, sites, targets, spare, needs):
        S, P = self.S, self.P
        opts = []
        for q in targets:
            opts.append([(a, r) for a in range(1, needs[q] + 1) for r in range(P) if r != q])
        for q in spare:
            opts.append([None] + [(a, r) for a in range(1, S) for r in range(P) if r != q])
        keys = targets + spare
        for combo in product(*opts):
            deliv = {q: o for q, o in zip(keys, combo) if o is not None}
            ok = True
            for q, (a, r) in deliv.items():
                if r in sites:
                    ok = sites[r] <= a - 1
                elif r in deliv:
                    ok = deliv[r][0] <= a - 1
                else:
                    ok = False
                if not ok:
                    break
            if ok:
                yield deliv

    def apply(self, v, sites, deliv, sign):
        w, mu = self.dag.work[v], self.dag.comm[v]
        for p, t in sites.items():
            self.W[t][p] += sign * w
        for q, (a, r) in deliv.items():
            self.SND[a - 1][r] += sign * mu
            self.RCV[a - 1][q] += sign * mu
            self.NS[a - 1] += sign

    def run(self, i=0, used=0):
        if i == len(self.order):
            work, _, comm = self.partial()
            cost = work + comm
            if self.best is None or cost < self.best:
                self.best = cost
                self.best_plan = (list(self.sites), list(self.deliv))
            return
        v = self.order[i]
        for sites, deliv, used2 in self.plans(v, used):
            self.apply(v, sites, deliv, 1)
            saved = []
            for p, t in sites.items():
                for u in self.dag.parents[v]:
                    saved.append((u, p, self.need[u].get(p)))
                    if t < self.need[u].get(p, t + 1):
                        self.need[u][p] = t
            if self.best is None or self.bound(i + 1) < self.best:
                self.sites[v], self.deliv[v] = sites, deliv
                self.run(i + 1, used2)
            for u, p, old in reversed(saved):
                if old is None:
                    self.need[u].pop(p, None)
                else:
                    self.need[u][p] = old
            self.apply(v, sites, deliv, -1)

    def schedule(self):
        sched = BspSchedule.empty(self.P, self.S)
        sites, deliv = self.best_plan
        for v in range(self.dag.n):
            for p, t in sites[v].items():
                sched.compute[t][p].add(v)
            for q, (a, r) in deliv[v].items():
                sched.comm[a - 1][r].add((v, q))
        sched.drop_empty_supersteps()
        return sched


def exact_tiny_scheduler(dag: Dag, params: BspParams, S_max: int = DEFAULT_MAX_STEPS,
                         allow_replication: bool = True, max_nodes: int = DEFAULT_MAX_NODES,
                         max_steps: int = DEFAULT_MAX_STEPS, max_procs: int = DEFAULT_MAX_PROCS):
    """Optimal cost over all valid schedules with at most ``S_max`` supersteps,
    with a witness.  Raises ``TooLarge`` beyond the configured limits."""
    if dag.n > max_nodes or S_max > max_steps or params.P > max_procs:
        raise TooLarge(f"n={dag.n}, S={S_max}, P={params.P} exceed limits "
                       f"({max_nodes}, {max_steps}, {max_procs})")
    if S_max < 1:
        raise ValueError("need at least one superstep")
    order = validate_dag(dag)
    if dag.n == 0:
        return 0, BspSchedule.empty(params.P, 0)
    search = _Search(dag, params, S_max, allow_replication, order)
    search.run()
    sched = search.schedule()
    bad = validate_schedule(dag, sched, params, allow_replication)
    if bad:
        raise ReplicationError(f"search produced an invalid witness: {bad[0]}")
    cost = total_cost(dag, sched, params)
    assert cost == search.best
    return cost, sched
