import random
from itertools import product

import pytest

import oracles
from conftest import chain_dag, random_small_dag
from repart.bsp import BspParams, BspSchedule, total_cost, validate_schedule
from repart.ilp import solve_milp
from repart.ingest import gen_bipartite_dag
from repart.model import Dag
from repart.partition import TooLarge
from repart.sched_ilp import build_sched_ilp, decode_schedule, exact_tiny_scheduler


def brute_force_optimum(dag, params, S, allow_replication):
    """Try every placement (one processor subset and superstep per node), each
    value sent once right before its first use elsewhere; a handful of nodes only."""
    P = params.P
    subsets = [m for m in range(1, 1 << P) if allow_replication or m & (m - 1) == 0]
    best = None
    for masks in product(subsets, repeat=dag.n):
        for steps in product(range(S), repeat=dag.n):
            sched = BspSchedule.empty(P, S)
            for v in range(dag.n):
                for p in range(P):
                    if masks[v] >> p & 1:
                        sched.compute[steps[v]][p].add(v)
            ok = True
            for v in range(dag.n):
                src = next(r for r in range(P) if masks[v] >> r & 1)
                for p in range(P):
                    uses = [steps[c] for c in dag.children[v] if masks[c] >> p & 1]
                    if not uses or masks[v] >> p & 1 and steps[v] <= min(uses):
                        continue
                    if steps[v] >= min(uses):
                        ok = False
                        break
                    sched.comm[min(uses) - 1][src].add((v, p))
                if not ok:
                    break
            if not ok or validate_schedule(dag, sched):
                continue
            cost = oracles.bsp_cost(dag, sched, params.g, params.L)
            best = cost if best is None else min(best, cost)
    return best


@pytest.mark.parametrize("seed", range(6))
def test_exact_scheduler_matches_brute_force_without_replication(seed):
    rng = random.Random(seed)
    dag = random_small_dag(rng.randint(2, 5), rng, 0.5)
    params = BspParams(2, rng.randint(1, 4), rng.randint(0, 5))
    cost, sched = exact_tiny_scheduler(dag, params, S_max=2, allow_replication=False)
    assert cost == brute_force_optimum(dag, params, 2, False)
    assert validate_schedule(dag, sched, params, allow_replication=False) == []


@pytest.mark.parametrize("seed", range(20))
def test_exact_scheduler_agrees_with_the_ilp(seed):
    rng = random.Random(100 + seed)
    dag = random_small_dag(rng.randint(2, 6), rng, 0.4)
    P, S = rng.choice([2, 3]), rng.choice([2, 3])
    params = BspParams(P, rng.randint(1, 5), rng.randint(0, 8))
    for repl in (False, True):
        cost, sched = exact_tiny_scheduler(dag, params, S_max=S, allow_replication=repl)
        assert total_cost(dag, sched, params) == cost
        model = build_sched_ilp(dag, params, S, repl)
        sol = solve_milp(model)
        assert sol.status == "optimal"
        assert abs(float(sol.objective) - float(cost)) < 1e-6
        decoded = decode_schedule(sol, model, dag)
        assert validate_schedule(dag, decoded, params, allow_replication=repl) == []
        assert total_cost(dag, decoded, params) <= cost


def test_replication_never_hurts_the_optimum():
    rng = random.Random(9)
    for _ in range(10):
        dag = random_small_dag(rng.randint(3, 7), rng, 0.35)
        params = BspParams(2, rng.randint(1, 6), rng.randint(0, 10))
        with_r, _ = exact_tiny_scheduler(dag, params, allow_replication=True)
        without, _ = exact_tiny_scheduler(dag, params, allow_replication=False)
        assert with_r <= without


@pytest.mark.parametrize("seed", range(10))
def test_chains_gain_nothing_from_replication(seed):
    rng = random.Random(seed)
    dag = chain_dag(rng.randint(2, 7), rng)
    params = BspParams(rng.choice([2, 3]), rng.randint(1, 6), rng.randint(0, 10))
    a, _ = exact_tiny_scheduler(dag, params, allow_replication=True)
    b, _ = exact_tiny_scheduler(dag, params, allow_replication=False)
    assert a == b


def test_bipartite_gadget_frozen_optima():
    dag, params = gen_bipartite_dag(2, 2, 1)
    assert (dag.n, len(dag.edges), params.g, params.L) == (5, 4, 11, 0)
    assert exact_tiny_scheduler(dag, params, allow_replication=False)[0] == 5
    assert exact_tiny_scheduler(dag, params, allow_replication=True)[0] == 3


def test_limits_are_enforced():
    dag = Dag(9, [])
    with pytest.raises(TooLarge):
        exact_tiny_scheduler(dag, BspParams(2))
    with pytest.raises(TooLarge):
        exact_tiny_scheduler(Dag(3, []), BspParams(4))
    with pytest.raises(ValueError):
        build_sched_ilp(Dag(2, []), BspParams(2), 0, True)


def test_ilp_size():
    dag = Dag(3, [(0, 1), (1, 2)])
    model = build_sched_ilp(dag, BspParams(2, 1, 1), 2, True)
    n, P, S = 3, 2, 2
    assert model.count() == n * P * S * (2 + P - 1) + 3 * S
