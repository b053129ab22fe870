import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import dags
from repart.baseline import (SchedulerConfig, assignment_of, baseline_schedule, greedy_schedule, hill_climb,
                             lazy_sends, materialize, sequential_schedule)
from repart.bsp import BspParams, total_cost, validate_schedule
from repart.ingest import random_dag
from repart.model import Dag

params_st = st.builds(BspParams, st.integers(1, 4), st.integers(0, 8), st.integers(0, 40))


@given(dags(max_n=25), params_st)
def test_greedy_is_valid_and_not_replicated(dag, params):
    s = greedy_schedule(dag, params)
    assert validate_schedule(dag, s, params, allow_replication=False) == []
    assert oracles.schedule_is_valid(dag, s)


@given(dags(max_n=25), params_st, st.integers(0, 5))
def test_hill_climb_never_worsens(dag, params, budget):
    cfg = SchedulerConfig(hill_climb_budget=budget)
    start = greedy_schedule(dag, params, cfg)
    out = hill_climb(dag, start, params, cfg)
    assert validate_schedule(dag, out, params, allow_replication=False) == []
    assert total_cost(dag, out, params) <= total_cost(dag, start, params)


@given(dags(max_n=20), params_st)
def test_hill_climb_from_sequential(dag, params):
    seq = sequential_schedule(dag, params)
    out = hill_climb(dag, seq, params)
    assert total_cost(dag, out, params) <= total_cost(dag, seq, params)
    assert validate_schedule(dag, out, params) == []


def test_zero_budget_keeps_the_greedy_cost():
    dag = random_dag(60, random.Random(3), "layered")
    params = BspParams(4, 4, 20)
    g = greedy_schedule(dag, params)
    out = hill_climb(dag, g, params, SchedulerConfig(hill_climb_budget=0))
    assert total_cost(dag, out, params) <= total_cost(dag, g, params)


def test_deterministic_with_and_without_seed():
    dag = random_dag(80, random.Random(7), "stencil")
    params = BspParams(8, 4, 20)
    a = baseline_schedule(dag, params)
    b = baseline_schedule(dag, params)
    assert a.compute == b.compute and a.comm == b.comm
    cfg = SchedulerConfig(rng_seed=11)
    c = baseline_schedule(dag, params, cfg)
    d = baseline_schedule(dag, params, cfg)
    assert c.compute == d.compute and c.comm == d.comm


def test_independent_nodes_spread_over_processors():
    dag = Dag(8, [], work=[1] * 8)
    params = BspParams(4, 1, 5)
    s = baseline_schedule(dag, params)
    assert total_cost(dag, s, params) == 2
    assert s.S == 1


def test_lazy_sends_go_one_superstep_before_first_use():
    dag = Dag(4, [(0, 1), (0, 2), (0, 3)])
    proc, step = [0, 1, 1, 2], [0, 3, 1, 2]
    assert lazy_sends(dag, proc, step, 0) == {1: 0, 2: 1}
    s = materialize(dag, 3, proc, step)
    assert validate_schedule(dag, s) == []
    assert s.num_sends() == 2


def test_assignment_refuses_replicated_input():
    dag = Dag(2, [(0, 1)])
    s = materialize(dag, 2, [0, 0], [0, 0])
    s.compute[0][1].add(0)
    with pytest.raises(ValueError):
        assignment_of(s, 2)


def test_config_checks():
    with pytest.raises(ValueError):
        SchedulerConfig(hill_climb_budget=-1)
    assert SchedulerConfig(max_parallelism_slack=0.25).max_parallelism_slack == Fraction(1, 4)
