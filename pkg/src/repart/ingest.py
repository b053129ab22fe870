"""Readers, writers and builders for benchmark inputs.

Text formats (all ids 1-indexed on disk, 0-indexed in memory):

hypergraph
    header ``|E| |V| [fmt]``; one line per hyperedge listing its pins, preceded
    by the edge weight when ``fmt`` is 1 or 11; then, when ``fmt`` is 10 or 11,
    one node weight per line.  ``%`` starts a comment.
dag
    header ``n m [fmt]``; ``m`` lines ``parent child``; when ``fmt`` is 1, ``n``
    more lines ``work comm``.
tuple log
    CSV rows ``n1,...,nk,count``.
"""

from __future__ import annotations

import csv
import io
import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from .bsp import BspParams
from .model import Dag, Hypergraph, ReplicationError, exact


class MalformedHeader(ReplicationError):
    pass


class MalformedLine(ReplicationError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class IndexOutOfBounds(ReplicationError):
    pass


class DuplicateEntry(ReplicationError):
    pass


class EmptyMatrix(ReplicationError):
    pass


class NotSquare(ReplicationError):
    pass


class MissingDiagonal(ReplicationError):
    pass


class EmptyLog(ReplicationError):
    pass


class DegenerateParameters(ReplicationError):
    pass


def _text(src) -> str:
    if isinstance(src, Path) or (isinstance(src, str) and "\n" not in src and Path(src).is_file()):
        return Path(src).read_text()
    if hasattr(src, "read"):
        return src.read()
    return src


# -- sparse matrices ----------------------------------------------------------

@dataclass(frozen=True)
class SparseMatrix:
    rows: int
    cols: int
    entries: tuple  # (row, col, value), 0-indexed

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries)))
        seen = set()
        for i, j, _ in self.entries:
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexOutOfBounds(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
            if (i, j) in seen:
                raise DuplicateEntry(f"entry ({i}, {j}) given twice")
            seen.add((i, j))

    @property
    def nnz(self) -> int:
        return len(self.entries)


def parse_matrix_market(src) -> SparseMatrix:
    lines = _text(src).splitlines()
    if not lines:
        raise MalformedHeader("empty file")
    head = lines[0].lower().split()
    if len(head) != 5 or head[0] != "%%matrixmarket" or head[1] != "matrix" or head[2] != "coordinate":
        raise MalformedHeader(f"unsupported banner {lines[0]!r}")
    field, sym = head[3], head[4]
    if field not in ("real", "integer", "pattern") or sym not in ("general", "symmetric"):
        raise MalformedHeader(f"unsupported field/symmetry {field} {sym}")
    body = [(k, ln) for k, ln in enumerate(lines[1:], 2) if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MalformedHeader("missing size line")
    try:
        rows, cols, nnz = map(int, body[0][1].split())
    except ValueError:
        raise MalformedHeader(f"bad size line {body[0][1]!r}") from None
    entries = {}
    for k, ln in body[1:]:
        tok = ln.split()
        want = 2 if field == "pattern" else 3
        if len(tok) != want:
            raise MalformedLine(k, f"expected {want} fields")
        try:
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
            val = 1 if field == "pattern" else exact(int(tok[2]) if field == "integer" else tok[2])
        except ValueError:
            raise MalformedLine(k, f"cannot parse {ln!r}") from None
        if not (0 <= i < rows and 0 <= j < cols):
            raise IndexOutOfBounds(f"line {k}: entry ({i + 1}, {j + 1}) outside {rows}x{cols}")
        coords = [(i, j)] if sym == "general" or i == j else [(i, j), (j, i)]
        for c in coords:
            if c in entries:
                raise DuplicateEntry(f"line {k}: entry ({c[0] + 1}, {c[1] + 1}) given twice")
            entries[c] = val
    if len(body) - 1 != nnz:
        raise MalformedHeader(f"size line announces {nnz} entries, found {len(body) - 1}")
    return SparseMatrix(rows, cols, tuple((i, j, v) for (i, j), v in entries.items()))


def write_matrix_market(m: SparseMatrix) -> str:
    lines = ["%%MatrixMarket matrix coordinate real general", f"{m.rows} {m.cols} {m.nnz}"]
    lines += [f"{i + 1} {j + 1} {v}" for i, j, v in m.entries]
    return "\n".join(lines) + "\n"


def build_finegrained(m: SparseMatrix) -> Hypergraph:
    """One node per nonzero; one hyperedge per nonempty row and per nonempty column."""
    if not m.nnz:
        raise EmptyMatrix("matrix has no entries")
    by_row, by_col = {}, {}
    for k, (i, j, _) in enumerate(m.entries):
        by_row.setdefault(i, []).append(k)
        by_col.setdefault(j, []).append(k)
    edges = [by_row[i] for i in sorted(by_row)] + [by_col[j] for j in sorted(by_col)]
    return Hypergraph(m.nnz, edges)


def build_rownet(m: SparseMatrix) -> Hypergraph:
    """One node per nonempty column, weighted by its nonzeros; one hyperedge per nonempty row."""
    if not m.nnz:
        raise EmptyMatrix("matrix has no entries")
    cols = sorted({j for _, j, _ in m.entries})
    idx = {j: k for k, j in enumerate(cols)}
    weight = Counter(j for _, j, _ in m.entries)
    rows = {}
    for i, j, _ in m.entries:
        rows.setdefault(i, []).append(idx[j])
    return Hypergraph(len(cols), [rows[i] for i in sorted(rows)], node_weight=[weight[j] for j in cols])


def build_sptrsv_dag(m: SparseMatrix) -> Dag:
    """Row ``i`` depends on row ``j`` for every nonzero ``(i, j)`` with ``j < i``."""
    if m.rows != m.cols:
        raise NotSquare(f"{m.rows}x{m.cols}")
    diag = {i for i, j, _ in m.entries if i == j}
    missing = sorted(set(range(m.rows)) - diag)
    if missing:
        raise MissingDiagonal(f"row {missing[0]} has no diagonal entry")
    return Dag(m.rows, sorted((j, i) for i, j, _ in m.entries if j < i))


# -- mixture-of-experts tuple logs --------------------------------------------

@dataclass(frozen=True)
class TupleLog:
    arity: int
    records: tuple  # (tuple of node ids, count)

    def __post_init__(self):
        for tup, cnt in self.records:
            if len(tup) != self.arity or len(set(tup)) != self.arity:
                raise ValueError(f"tuple {tup} does not have {self.arity} distinct ids")
            if cnt <= 0:
                raise ValueError(f"tuple {tup} has non-positive count {cnt}")


def parse_tuple_log(src, arity: int | None = None) -> TupleLog:
    counts = Counter()
    for k, row in enumerate(csv.reader(io.StringIO(_text(src))), 1):
        if not row or row[0].startswith("#"):
            continue
        try:
            *ids, cnt = (int(x) for x in row)
        except ValueError:
            raise MalformedLine(k, f"expected integers, got {row!r}") from None
        if arity is None:
            arity = len(ids)
        if len(ids) != arity:
            raise MalformedLine(k, f"expected {arity} ids")
        counts[tuple(sorted(ids))] += cnt
    if arity is None:
        raise EmptyLog("no records")
    return TupleLog(arity, tuple(sorted(counts.items())))


def write_tuple_log(log: TupleLog) -> str:
    return "".join(",".join(map(str, (*t, c))) + "\n" for t, c in log.records)


def moe_threshold(log: TupleLog, kappa0: int) -> int:
    """Smallest frequency ``f`` such that at least ``kappa0 / arity`` tuples occur ``f`` or more times."""
    need = math.ceil(Fraction(kappa0, log.arity))
    freqs = sorted((c for _, c in log.records), reverse=True)
    if len(freqs) < need:
        return 1
    return freqs[need - 1]


def build_moe_hypergraph(log: TupleLog, kappa0: int, weight_range=(1, 10)) -> Hypergraph:
    if not log.records:
        raise EmptyLog("no records")
    if kappa0 < log.arity:
        raise ValueError("pin limit must be at least the tuple arity")
    lo, hi = (exact(w) for w in weight_range)
    f = moe_threshold(log, kappa0)
    kept = [(t, c) for t, c in log.records if c >= f]
    top = max(c for _, c in kept)
    nodes = sorted({v for t, _ in kept for v in t})
    idx = {v: k for k, v in enumerate(nodes)}
    weights = [exact(max(lo, Fraction(c * hi) / top)) for _, c in kept]
    return Hypergraph(len(nodes), [[idx[v] for v in t] for t, _ in kept], edge_weight=weights)


# -- adversarial constructions ------------------------------------------------

def gen_two_cliques(n: int, eps) -> Hypergraph:
    """Two cliques of ``floor((1+eps)/2 * n)`` nodes overlapping in ``floor(eps * n)``."""
    eps = Fraction(exact(eps))
    k = math.floor((1 + eps) / 2 * n)
    s = math.floor(eps * n)
    if k < 2 or s < 1 or s >= k:
        raise DegenerateParameters(f"n={n}, eps={eps} gives cliques of {k} sharing {s}")
    a = list(range(k))
    b = list(range(k - s, 2 * k - s))
    edges = set(combinations(a, 2)) | set(combinations(b, 2))
    return Hypergraph(2 * k - s, sorted(edges))


def gen_bipartite_dag(P: int, c: int, m: int) -> tuple[Dag, BspParams]:
    """``m`` sources feeding ``P`` groups of ``m * c`` sinks, with ``g`` just large
    enough that a non-replicating schedule should stay sequential."""
    if P < 2 or c < 1 or m < 1:
        raise DegenerateParameters(f"P={P}, c={c}, m={m}")
    sinks = range(m, m * (P * c + 1))
    dag = Dag(m * (P * c + 1), [(u, w) for u in range(m) for w in sinks])
    return dag, BspParams(P, P * (P * c + 1) + 1, 0)


def random_dag(n: int, rng: random.Random, shape: str = "stencil") -> Dag:
    """Random weighted DAG with some locality, as in numerical kernels.

    ``stencil``  independent streams advancing in time steps, each step reading
                 its own previous value and sometimes a neighbour's;
    ``forkjoin`` a source fanning out to chains that are reduced pairwise;
    ``window``   each node reads a few of the nodes created just before it;
    ``layered``  random edges between consecutive levels (no locality);
    ``spmv``     fine-grained iterated sparse matrix-vector products with a
                 random pattern: one node per vector entry, per nonzero product
                 and per partial row sum, cut to the first ``n`` nodes.
    """
    edges = set()
    if shape == "stencil":
        k = rng.randint(4, 12)
        for v in range(k, n):
            i, t = v % k, v // k
            edges.add((v - k, v))
            for j in (i - 1, i + 1):
                if 0 <= j < k and rng.random() < 0.3:
                    edges.add(((t - 1) * k + j, v))
    elif shape == "forkjoin":
        k = rng.randint(4, 12)
        body = max(1, (n - 1) // k)
        heads = []
        for c in range(k):
            first = 1 + c * body
            last = min(first + body, n)
            if first >= last:
                break
            edges.add((0, first))
            edges.update((v, v + 1) for v in range(first, last - 1))
            heads.append(last - 1)
        v = 1 + len(heads) * body
        while len(heads) > 1 and v < n:
            a, b = heads.pop(0), heads.pop(0)
            edges.update({(a, v), (b, v)})
            heads.append(v)
            v += 1
        for w in range(v, n):
            edges.add((w - 1, w))
    elif shape == "window":
        for w in range(1, n):
            lo = max(0, w - 8)
            for u in rng.sample(range(lo, w), rng.randint(1, min(2, w - lo))):
                edges.add((u, w))
    elif shape == "layered":
        width = max(2, round(math.sqrt(n)))
        layers, v = [], 0
        while v < n:
            size = min(n - v, rng.randint(max(1, width // 2), width * 3 // 2))
            layers.append(list(range(v, v + size)))
            v += size
        for prev, cur in zip(layers, layers[1:]):
            for w in cur:
                for u in rng.sample(prev, rng.randint(1, min(3, len(prev)))):
                    edges.add((u, w))
    elif shape == "spmv":
        edges = _spmv_edges(n, rng)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    work = [rng.randint(1, 8) for _ in range(n)]
    comm = [rng.randint(1, 3) for _ in range(n)]
    return Dag(n, sorted(edges), work, comm)


def _spmv_edges(n: int, rng: random.Random) -> set:
    m = rng.randint(4, 10)
    pattern = [sorted({i} | set(rng.sample(range(m), rng.randint(1, 3)))) for i in range(m)]
    x = list(range(m))
    edges, nxt = set(), m
    while nxt < n:
        y = []
        for row in pattern:
            acc = None
            for j in row:
                prod, nxt = nxt, nxt + 1
                edges.add((x[j], prod))
                if acc is not None:
                    total, nxt = nxt, nxt + 1
                    edges.update({(acc, total), (prod, total)})
                    prod = total
                acc = prod
            y.append(acc)
        x = y
    return {(u, v) for u, v in edges if v < n}


SUITE_SHAPES = ("stencil", "forkjoin", "window", "layered", "spmv")


def synthetic_suite(count: int = 100, seed: int = 0, sizes=(40, 120)) -> list[tuple[str, Dag]]:
    """Deterministic collection of small random DAGs used for benchmarking."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        n = rng.randint(*sizes)
        shape = SUITE_SHAPES[k % len(SUITE_SHAPES)]
        out.append((f"syn{k:03d}_{shape}_{n}", random_dag(n, rng, shape)))
    return out


# -- hypergraph and DAG text files --------------------------------------------

def _data_lines(text: str):
    for k, ln in enumerate(text.splitlines(), 1):
        ln = ln.split("%", 1)[0].strip()
        if ln:
            yield k, ln.split()


def _num(tok, k):
    try:
        return exact(int(tok)) if tok.lstrip("-").isdigit() else exact(tok)
    except (ValueError, ZeroDivisionError):
        raise MalformedLine(k, f"bad number {tok!r}") from None


def parse_hypergraph_file(src) -> Hypergraph:
    lines = list(_data_lines(_text(src)))
    if not lines:
        raise MalformedLine(1, "missing header")
    k0, head = lines[0]
    if len(head) not in (2, 3):
        raise MalformedLine(k0, "header must be '|E| |V| [fmt]'")
    try:
        ne, nv = int(head[0]), int(head[1])
        fmt = int(head[2]) if len(head) == 3 else 0
    except ValueError:
        raise MalformedLine(k0, "header must be integers") from None
    if fmt not in (0, 1, 10, 11):
        raise MalformedLine(k0, f"unknown fmt {fmt}")
    ew, nw = fmt in (1, 11), fmt in (10, 11)
    body = lines[1:]
    if len(body) != ne + (nv if nw else 0):
        raise MalformedLine(k0, f"expected {ne} edge lines{f' and {nv} weight lines' if nw else ''}, got {len(body)}")
    edges, eweights = [], []
    for k, tok in body[:ne]:
        if ew:
            eweights.append(_num(tok[0], k))
            tok = tok[1:]
        try:
            pins = [int(t) - 1 for t in tok]
        except ValueError:
            raise MalformedLine(k, "pins must be integers") from None
        if not pins or any(not 0 <= v < nv for v in pins) or len(set(pins)) != len(pins):
            raise MalformedLine(k, "empty edge, pin out of range or repeated pin")
        edges.append(pins)
    nweights = [_num(tok[0], k) for k, tok in body[ne:]] if nw else None
    return Hypergraph(nv, edges, node_weight=nweights, edge_weight=eweights if ew else None)


def write_hypergraph_file(h: Hypergraph) -> str:
    ew = any(w != 1 for w in h.edge_weight)
    nw = any(w != 1 for w in h.node_weight)
    fmt = (10 if nw else 0) + (1 if ew else 0)
    lines = [f"{h.num_edges} {h.n}" + (f" {fmt}" if fmt else "")]
    for e, pins in enumerate(h.edges):
        lines.append(" ".join(([str(h.edge_weight[e])] if ew else []) + [str(v + 1) for v in pins]))
    if nw:
        lines += [str(w) for w in h.node_weight]
    return "\n".join(lines) + "\n"


def parse_dag_file(src) -> Dag:
    lines = list(_data_lines(_text(src)))
    if not lines:
        raise MalformedLine(1, "missing header")
    k0, head = lines[0]
    try:
        n, m = int(head[0]), int(head[1])
        fmt = int(head[2]) if len(head) == 3 else 0
    except (ValueError, IndexError):
        raise MalformedLine(k0, "header must be 'n m [fmt]'") from None
    if len(head) > 3 or fmt not in (0, 1):
        raise MalformedLine(k0, "header must be 'n m [fmt]' with fmt 0 or 1")
    body = lines[1:]
    if len(body) != m + (n if fmt else 0):
        raise MalformedLine(k0, f"expected {m} edge lines{f' and {n} weight lines' if fmt else ''}, got {len(body)}")
    edges = []
    for k, tok in body[:m]:
        try:
            u, v = (int(t) - 1 for t in tok)
        except ValueError:
            raise MalformedLine(k, "edge lines are 'parent child'") from None
        if not (0 <= u < n and 0 <= v < n):
            raise MalformedLine(k, "edge endpoint out of range")
        edges.append((u, v))
    work = comm = None
    if fmt:
        work, comm = [], []
        for k, tok in body[m:]:
            if len(tok) != 2:
                raise MalformedLine(k, "weight lines are 'work comm'")
            work.append(_num(tok[0], k))
            comm.append(_num(tok[1], k))
    return Dag(n, edges, work, comm)


def write_dag_file(dag: Dag) -> str:
    weighted = any(w != 1 for w in dag.work) or any(c != 1 for c in dag.comm)
    lines = [f"{dag.n} {len(dag.edges)}" + (" 1" if weighted else "")]
    lines += [f"{u + 1} {v + 1}" for u, v in dag.edges]
    if weighted:
        lines += [f"{w} {c}" for w, c in zip(dag.work, dag.comm)]
    return "\n".join(lines) + "\n"
