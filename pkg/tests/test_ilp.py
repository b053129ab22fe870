from fractions import Fraction

import pytest

from repart.ilp import (CONTINUOUS, INTEGER, IlpModel, NonBinaryValue, SolverError, UnknownVariable, emit_lp,
                        lp_text, parse_solution, solve_enumerate, solve_external, solve_milp, write_solution)
from repart.model import Hypergraph
from repart.partition import BalanceSpec
from repart.partition_ilp import build_partition_ilp

highspy = pytest.importorskip("highspy")


def knapsack():
    m = IlpModel()
    for i in range(4):
        m.add_var(f"x{i}")
    m.add_constraint([(3, "x0"), (4, "x1"), (2, "x2"), (Fraction(5, 2), "x3")], "<=", 6, "cap")
    m.set_objective([(5, "x0"), (6, "x1"), (3, "x2"), (4, "x3")], sense="max")
    return m


def test_model_rejects_unknown_and_duplicate_names():
    m = IlpModel()
    m.add_var("a")
    with pytest.raises(ValueError):
        m.add_var("a")
    with pytest.raises(UnknownVariable):
        m.add_constraint([(1, "b")], "<=", 1)
    with pytest.raises(ValueError):
        m.add_constraint([(1, "a")], "<", 1)


def test_enumeration_and_highs_agree_on_a_knapsack():
    m = knapsack()
    a = solve_enumerate(m)
    b = solve_milp(m)
    # 5 + 3 + 4 at weight 3 + 2 + 2.5 > 6, so the best pair is x0 + x3 or x1 + x2
    assert a.objective == b.objective == 9
    assert m.violations(b.values) == []


def test_enumeration_refuses_big_or_mixed_models():
    m = IlpModel()
    for i in range(5):
        m.add_var(f"v{i}")
    with pytest.raises(SolverError):
        solve_enumerate(m, max_binaries=4)
    m.add_var("w", CONTINUOUS, ub=3)
    with pytest.raises(SolverError):
        solve_enumerate(m)


def test_infeasible_model_reports_status():
    m = IlpModel()
    m.add_var("a")
    m.add_constraint([(1, "a")], ">=", 2)
    m.set_objective([(1, "a")])
    assert solve_enumerate(m).status == "infeasible"
    assert solve_milp(m).status == "infeasible"


def test_lp_text_matches_golden_file(data_dir):
    h = Hypergraph(3, [(0, 1), (1, 2)], edge_weight=[1, 2])
    model = build_partition_ilp(h, 2, BalanceSpec(Fraction(1, 2)), "dupl")
    assert lp_text(model) == (data_dir / "path3_dupl.lp").read_text()


def test_lp_text_sections_for_mixed_models():
    m = IlpModel()
    m.add_var("b")
    m.add_var("k", INTEGER, ub=7)
    m.add_var("c", CONTINUOUS, lb=-2)
    m.add_constraint([(1, "b"), (Fraction(1, 3), "c")], ">=", 1, "r")
    m.set_objective([(2, "k"), (1, "c")])
    text = lp_text(m)
    for section in ("Minimize", "Subject To", "Bounds", "General", "Binaries", "End"):
        assert section in text
    assert "-2 <= c" in text


def test_solution_parsing_rules():
    m = knapsack()
    sol = parse_solution("# status optimal\n# objective 9\nx0 1\nx3 1.0000000001\n", m)
    assert sol.status == "optimal" and sol.objective == 9
    assert sol.values == {"x0": 1, "x1": 0, "x2": 0, "x3": 1}
    with pytest.raises(UnknownVariable):
        parse_solution("zz 1\n", m)
    with pytest.raises(NonBinaryValue):
        parse_solution("x0 0.5\n", m)
    with pytest.raises(NonBinaryValue):
        parse_solution("x0 2\n", m)
    with pytest.raises(ValueError):
        parse_solution("x0\n", m)
    text = write_solution({"x0": 1}, status="feasible", objective=5)
    assert parse_solution(text, m).status == "feasible"


def test_external_highspy_round_trip(tmp_path):
    h = Hypergraph(4, [(0, 1, 2), (1, 2, 3), (0, 3)])
    model = build_partition_ilp(h, 2, BalanceSpec(Fraction(1, 2)), "repl")
    via_file = solve_external(model, time_limit=60, workdir=tmp_path)
    direct = solve_milp(model)
    assert via_file.status == "optimal"
    assert model.evaluate(via_file.values) == direct.objective
    assert model.violations(via_file.values) == []
    emitted = emit_lp(model, tmp_path / "m.lp")
    assert emitted.read_text() == lp_text(model)


def test_external_solver_failure_is_reported(tmp_path):
    with pytest.raises(SolverError):
        solve_external(knapsack(), command="false {model} {solution}", workdir=tmp_path)
