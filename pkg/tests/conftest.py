import random
import sys
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from repart.model import Dag, Hypergraph  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@st.composite
def hypergraphs(draw, max_n=7, max_edges=6, weighted=False):
    n = draw(st.integers(2, max_n))
    m = draw(st.integers(1, max_edges))
    edges = [tuple(sorted(draw(st.sets(st.integers(0, n - 1), min_size=2, max_size=min(n, 4)))))
             for _ in range(m)]
    ew = [draw(st.integers(1, 4)) for _ in range(m)] if weighted else None
    return Hypergraph(n, edges, edge_weight=ew)


@st.composite
def dags(draw, min_n=1, max_n=12, p_edge=0.3):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_small_dag(n, random.Random(seed), p_edge)


def random_small_dag(n, rng, p_edge=0.3, unit=False):
    edges = [(u, v) for v in range(n) for u in range(v) if rng.random() < p_edge]
    work = None if unit else [rng.randint(1, 4) for _ in range(n)]
    comm = None if unit else [rng.randint(1, 3) for _ in range(n)]
    return Dag(n, edges, work, comm)


def chain_dag(n, rng):
    perm = list(range(n))
    rng.shuffle(perm)
    edges = [(perm[i], perm[i + 1]) for i in range(n - 1)]
    return Dag(n, edges, [rng.randint(1, 4) for _ in range(n)], [rng.randint(1, 3) for _ in range(n)])


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
