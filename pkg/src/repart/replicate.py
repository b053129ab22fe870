"""Local search that trades communication for recomputation.

Every pass takes a valid schedule and returns a new one together with a log
of the moves it evaluated.  A move is kept only when the exact total cost
strictly drops, so each pass is monotone and terminates.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .bsp import INF, BspParams, BspSchedule, first_need, presence, total_cost, validate_schedule
from .model import Dag, validate_dag

PASSES = ("basic", "batch", "merge", "sstep-repl")


class ReplicaWindow(NamedTuple):
    node: int
    target: int
    first: int
    last: int
    best: int
    compute_delta: object


@dataclass(frozen=True)
class MoveReport:
    kind: str
    superstep: int | None
    cost_before: object
    cost_after: object
    accepted: bool

    def __post_init__(self):
        if self.accepted and not self.cost_after < self.cost_before:
            raise ValueError("an accepted move must strictly lower the cost")


def reports_csv(reports: Iterable[MoveReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "superstep", "cost_before", "cost_after", "accepted"])
    for r in reports:
        w.writerow([r.kind, "" if r.superstep is None else r.superstep,
                    r.cost_before, r.cost_after, int(r.accepted)])
    return buf.getvalue()


class _State:
    """A schedule with per-superstep loads and an undo log."""

    def __init__(self, dag: Dag, sched: BspSchedule, params: BspParams):
        self.dag, self.params, self.sched = dag, params, sched
        P, S = sched.P, sched.S
        self.work = [[0] * P for _ in range(S)]
        self.snd = [[0] * P for _ in range(S)]
        self.rcv = [[0] * P for _ in range(S)]
        self.nsend = [0] * S
        self.log = []
        for v, p, s in sched.placements():
            self.work[s][p] += dag.work[v]
        for v, p, q, s in sched.sends():
            self._count_send(v, p, q, s, 1)
        self.refresh()

    def refresh(self):
        self.pres = presence(self.dag, self.sched)
        self.need = first_need(self.dag, self.sched)

    def _count_send(self, v, p, q, s, sign):
        mu = self.dag.comm[v]
        self.snd[s][p] += sign * mu
        self.rcv[s][q] += sign * mu
        self.nsend[s] += sign

    def compute(self, v, p, s, add=True, logged=True):
        (self.sched.compute[s][p].add if add else self.sched.compute[s][p].remove)(v)
        self.work[s][p] += self.dag.work[v] if add else -self.dag.work[v]
        if logged:
            self.log.append(("c", v, p, s, add))

    def send(self, v, p, q, s, add=True, logged=True):
        (self.sched.comm[s][p].add if add else self.sched.comm[s][p].remove)((v, q))
        self._count_send(v, p, q, s, 1 if add else -1)
        if logged:
            self.log.append(("m", v, p, q, s, add))

    def undo_to(self, mark):
        while len(self.log) > mark:
            op = self.log.pop()
            if op[0] == "c":
                self.compute(*op[1:4], add=not op[4], logged=False)
            else:
                self.send(*op[1:5], add=not op[5], logged=False)

    def term(self, s):
        c = max(self.work[s])
        if self.nsend[s]:
            c += self.params.L + self.params.g * max(max(self.snd[s]), max(self.rcv[s]))
        return c

    def total(self):
        return sum(self.term(s) for s in range(self.sched.S))

    def window(self, v, p2) -> ReplicaWindow | None:
        first = max((self.pres[u][p2] for u in self.dag.parents[v]), default=0)
        last = self.need[v][p2]
        if last == INF or first > last:
            return None
        best = None
        for t in range(first, last + 1):
            top = max(self.work[t])
            delta = max(top, self.work[t][p2] + self.dag.work[v]) - top
            if best is None or delta < best[1]:
                best = (t, delta)
        return ReplicaWindow(v, p2, first, last, best[0], best[1])

    def redundant(self, v, p, q, s) -> bool:
        """The send (v, p -> q, s) is not what makes v available on q in time."""
        nd = self.need[v][q]
        if nd == INF:
            return True
        if any(v in self.sched.compute[t][q] for t in range(min(nd + 1, self.sched.S))):
            return True
        return any(t < s or (t == s and r < p)
                   for t in range(min(nd, self.sched.S))
                   for r in range(self.sched.P) if (v, q) in self.sched.comm[t][r])

    def replace_send(self, v, p1, p2, s, t):
        self.send(v, p1, p2, s, add=False)
        self.compute(v, p2, t)


def replica_window(dag: Dag, sched: BspSchedule, v: int, p2: int) -> ReplicaWindow | None:
    """Supersteps in which computing ``v`` on ``p2`` would make ``v`` arrive in
    time, and the one raising the work term least (earliest on ties)."""
    if any(v in sched.compute[s][p2] for s in range(sched.S)):
        return None
    return _State(dag, sched.copy(), BspParams(sched.P)).window(v, p2)


def _cleanup_once(dag: Dag, sched: BspSchedule) -> bool:
    changed = False
    need = first_need(dag, sched)
    where = {}
    for v, p, s in sched.placements():
        where.setdefault(v, []).append((p, s))
    # replicas whose value nobody on their processor uses
    for v in range(dag.n):
        spots = where.get(v, [])
        for p, s in sorted(spots, reverse=True):
            if len(spots) > 1 and need[v][p] == INF:
                sched.compute[s][p].discard(v)
                spots.remove((p, s))
                changed = True
    incoming = {}
    for v, p, q, s in sched.sends():
        incoming.setdefault((v, q), []).append((s, p))
    for (v, q), arr in incoming.items():
        nd = need[v][q]
        own = min((s for p, s in where.get(v, []) if p == q), default=INF)
        arr.sort()
        drop = arr if nd == INF or own <= nd else arr[1:]
        for s, p in drop:
            sched.comm[s][p].discard((v, q))
            changed = True
    return changed


def cleanup(dag: Dag, sched: BspSchedule) -> BspSchedule:
    """Drop sends that do not deliver a value in time for its first use, replicas
    nobody uses, and supersteps left empty.  Idempotent; never raises the cost."""
    out = sched.copy()
    while _cleanup_once(dag, out):
        pass
    out.drop_empty_supersteps()
    return out


def basic_pass(dag: Dag, sched: BspSchedule, params: BspParams) -> tuple[BspSchedule, list[MoveReport]]:
    """Replace single sends by computing the value on the receiver, until no
    such replacement lowers the cost."""
    st = _State(dag, sched.copy(), params)
    reports = []
    progress = True
    while progress:
        progress = False
        for v, p1, p2, s in list(st.sched.sends()):
            if (v, p2) not in st.sched.comm[s][p1] or st.redundant(v, p1, p2, s):
                continue
            if any(v in st.sched.compute[t][p2] for t in range(st.sched.S)):
                continue
            win = st.window(v, p2)
            if win is None:
                continue
            touched = {s, win.best}
            before = sum(st.term(t) for t in touched)
            full = st.total()
            mark = len(st.log)
            st.replace_send(v, p1, p2, s, win.best)
            after = sum(st.term(t) for t in touched)
            ok = after < before
            reports.append(MoveReport("basic", s, full, full - before + after, ok))
            if ok:
                st.refresh()
                progress = True
            else:
                st.undo_to(mark)
    return cleanup(dag, st.sched), reports


def batch_replication(dag: Dag, sched: BspSchedule, params: BspParams) -> tuple[BspSchedule, list[MoveReport]]:
    """Per superstep, remove at once one send from every processor whose send
    or receive volume equals the h-relation, keeping the bundle if it pays off."""
    st = _State(dag, sched.copy(), params)
    reports = []
    for s in range(st.sched.S):
        while True:
            h = max(max(st.snd[s]), max(st.rcv[s]))
            if not st.nsend[s] or h == 0:
                break
            senders = [p for p in range(st.sched.P) if st.snd[s][p] == h]
            receivers = [q for q in range(st.sched.P) if st.rcv[s][q] == h]
            before = st.total()
            mark = len(st.log)
            picked = 0
            for side, procs in ((0, senders), (1, receivers)):
                for p in procs:
                    best = None
                    for p1 in range(st.sched.P):
                        for v, p2 in sorted(st.sched.comm[s][p1]):
                            if (p1 if side == 0 else p2) != p:
                                continue
                            if st.redundant(v, p1, p2, s):
                                continue
                            if any(v in st.sched.compute[t][p2] for t in range(st.sched.S)):
                                continue
                            win = st.window(v, p2)
                            if win is None:
                                continue
                            key = (win.compute_delta, v, p1, p2)
                            if best is None or key < best[0]:
                                best = (key, win)
                    if best is not None:
                        (_, v, p1, p2), win = best
                        st.replace_send(v, p1, p2, s, win.best)
                        st.refresh()
                        picked += 1
            if not picked:
                break
            after = st.total()
            ok = after < before
            reports.append(MoveReport("batch", s, before, after, ok))
            if not ok:
                st.undo_to(mark)
                st.refresh()
                break
    return cleanup(dag, st.sched), reports


def _needed_next(dag: Dag, sched: BspSchedule, v: int, q: int, s: int) -> bool:
    if any(v in dag.parents[c] for c in sched.compute[s][q]):
        return True
    return any(u == v for u, _ in sched.comm[s][q])


def _merge_candidate(dag: Dag, sched: BspSchedule, s: int) -> BspSchedule:
    """Supersteps ``s`` and ``s + 1`` fused into one; sends of ``s`` whose value
    is used right away are moved one superstep earlier or replaced by
    recomputation (recursively for missing parents)."""
    pres = presence(dag, sched)
    cand = sched.copy()
    nxt = s + 1
    avail_extra = set()  # (node, proc) made available at the merged superstep

    def avail(u, p):
        if (u, p) in avail_extra:
            return True
        if any(u in sched.compute[t][p] for t in range(nxt + 1)):
            return True
        return any((u, p) in sched.comm[t][r] for t in range(s) for r in range(sched.P))

    def earliest_holder(u):
        best = None
        for r in range(sched.P):
            if pres[u][r] <= s - 1 and (best is None or pres[u][r] < pres[u][best]):
                best = r
        return best

    def replicate(u, p):
        for w in dag.parents[u]:
            if avail(w, p):
                continue
            r = earliest_holder(w)
            if r is not None:
                cand.comm[s - 1][r].add((w, p))
                avail_extra.add((w, p))
            else:
                replicate(w, p)
        cand.compute[s][p].add(u)
        avail_extra.add((u, p))

    moved = set()
    for p1 in range(sched.P):
        for v, p2 in sorted(sched.comm[s][p1]):
            cand.comm[s][p1].discard((v, p2))
            if not _needed_next(dag, sched, v, p2, nxt):
                moved.add((p1, v, p2))
            elif pres[v][p1] <= s - 1:
                cand.comm[s - 1][p1].add((v, p2))
            elif not avail(v, p2):
                replicate(v, p2)
    for p1, v, p2 in moved:
        cand.comm[nxt][p1].add((v, p2))
    for p in range(sched.P):
        cand.compute[s][p] |= cand.compute[nxt][p]
        cand.comm[s][p] = cand.comm[nxt][p]
    del cand.compute[nxt]
    del cand.comm[nxt]
    for v, p in avail_extra:
        for t in range(s + 1, cand.S):
            if v in cand.compute[t][p] and v in cand.compute[s][p]:
                cand.compute[t][p].discard(v)
    return cand


def superstep_merge(dag: Dag, sched: BspSchedule, params: BspParams) -> tuple[BspSchedule, list[MoveReport]]:
    cur = cleanup(dag, sched)
    cost = total_cost(dag, cur, params)
    reports = []
    s = 0
    while s + 1 < cur.S:
        cand = cleanup(dag, _merge_candidate(dag, cur, s))
        if validate_schedule(dag, cand):
            s += 1
            continue
        new = total_cost(dag, cand, params)
        ok = new < cost
        reports.append(MoveReport("merge", s, cost, new, ok))
        if ok:
            cur, cost, s = cand, new, 0
        else:
            s += 1
    return cur, reports


def _sstep_candidate(dag: Dag, sched: BspSchedule, s: int, p1: int, p2: int, order) -> BspSchedule | None:
    pres = presence(dag, sched)
    need = first_need(dag, sched)
    nodes = [v for v in sched.compute[s][p1] if pres[v][p2] > s]
    if not nodes:
        return None
    pos = {v: i for i, v in enumerate(order)}
    nodes.sort(key=pos.__getitem__)
    chosen = set()
    for v in reversed(nodes):
        if need[v][p2] != INF or any(c in chosen for c in dag.children[v]):
            chosen.add(v)
    if not chosen:
        return None
    cand = sched.copy()
    for v in sorted(chosen, key=pos.__getitem__):
        for u in dag.parents[v]:
            if u in chosen or pres[u][p2] <= s:
                continue
            holders = [r for r in range(sched.P) if pres[u][r] <= s - 1]
            if not holders:
                return None
            r = min(holders, key=lambda r: (pres[u][r], r))
            cand.comm[s - 1][r].add((u, p2))
        cand.compute[s][p2].add(v)
        for t in range(s + 1, cand.S):
            cand.compute[t][p2].discard(v)
    return cand


def superstep_replicate(dag: Dag, sched: BspSchedule, params: BspParams) -> tuple[BspSchedule, list[MoveReport]]:
    """Try copying the whole compute phase of one processor onto another, for
    every superstep and ordered processor pair."""
    order = validate_dag(dag)
    cur = cleanup(dag, sched)
    cost = total_cost(dag, cur, params)
    reports = []
    s = 0
    while s < cur.S:
        for p1 in range(cur.P):
            for p2 in range(cur.P):
                if p1 == p2 or s >= cur.S:
                    continue
                cand = _sstep_candidate(dag, cur, s, p1, p2, order)
                if cand is None:
                    continue
                cand = cleanup(dag, cand)
                if validate_schedule(dag, cand):
                    continue
                new = total_cost(dag, cand, params)
                ok = new < cost
                reports.append(MoveReport("sstep-repl", s, cost, new, ok))
                if ok:
                    cur, cost = cand, new
        s += 1
    return cur, reports


_PASS_FUNCS = {"basic": basic_pass, "batch": batch_replication,
               "merge": superstep_merge, "sstep-repl": superstep_replicate}


def advanced_heuristic(dag: Dag, sched: BspSchedule, params: BspParams,
                       passes: Iterable[str] = PASSES) -> tuple[BspSchedule, list[MoveReport]]:
    """Cycle through the enabled passes, each followed by cleanup, until a full
    round changes nothing."""
    passes = [p for p in PASSES if p in set(passes)]
    reports = []
    cost = total_cost(dag, sched, params)
    cur = cleanup(dag, sched)
    new = total_cost(dag, cur, params)
    if new < cost:
        reports.append(MoveReport("cleanup", None, cost, new, True))
    cost = new
    while True:
        improved = False
        for name in passes:
            cur, rep = _PASS_FUNCS[name](dag, cur, params)
            reports.extend(rep)
            new = total_cost(dag, cur, params)
            if new < cost:
                improved = True
            cost = new
        if not improved:
            return cur, reports
