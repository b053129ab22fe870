import subprocess
import sys

import pytest

from repart.bsp import read_schedule, validate_schedule
from repart.cli import main
from repart.ingest import parse_dag_file, parse_hypergraph_file
from repart.stats import read_report


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_convert_and_partition(tmp_path, capsys):
    hgr = tmp_path / "tc.hgr"
    assert run(["convert", "two-cliques", "-n", "8", "--eps", "1/4", "-o", str(hgr)], capsys)[0] == 0
    assert parse_hypergraph_file(hgr).n == 8
    code, out, _ = run(["partition", str(hgr), "-P", "2", "--eps", "1/4"], capsys)
    assert code == 0
    rep = read_report(out.split("#")[0])
    assert (rep.rows[0].baseline_cost, rep.rows[0].final_cost) == (6, 0)
    assert "zero-cost" in out
    code, out, _ = run(["partition", str(hgr), "-P", "2", "--eps", "1/4", "--mode", "ilp", "--ilp", "dupl"], capsys)
    assert code == 0 and read_report(out.split("#")[0]).rows[0].final_cost == 0


def test_emit_and_score_ilp(tmp_path, capsys):
    hgr = tmp_path / "small.hgr"
    hgr.write_text("2 4\n1 2 3\n3 4\n")
    code, out, _ = run(["partition", str(hgr), "--mode", "emit-ilp", "--ilp", "both", "--out", str(tmp_path)], capsys)
    assert code == 0
    lp = tmp_path / "small.repl.lp"
    assert lp.exists() and (tmp_path / "small.dupl.lp").exists()
    sol = tmp_path / "small.sol"
    subprocess.run([sys.executable, "-m", "repart.ilp", str(lp), str(sol)], check=True)
    code, out, _ = run(["partition", str(hgr), "--mode", "emit-ilp", "--ilp", "repl", "--solution", str(sol)], capsys)
    assert code == 0 and "consistent" in out
    # a solution claiming the wrong objective is flagged
    lines = [ln for ln in sol.read_text().splitlines() if not ln.startswith("# objective")]
    sol.write_text("\n".join(["# objective 7"] + lines) + "\n")
    code, out, _ = run(["partition", str(hgr), "--mode", "emit-ilp", "--ilp", "repl", "--solution", str(sol)], capsys)
    assert code == 1 and "INCONSISTENT" in out


def test_schedule_outputs(tmp_path, capsys):
    dag_file = tmp_path / "b.dag"
    run(["convert", "suite", "--count", "2", "-o", str(tmp_path / "suite")], capsys)
    first = sorted((tmp_path / "suite").glob("*.dag"))[0]
    dag_file.write_text(first.read_text())
    out_s, ledger = tmp_path / "s.txt", tmp_path / "moves.csv"
    code, out, _ = run(["schedule", str(dag_file), "-P", "4", "-g", "4", "-L", "20", "--out-schedule", str(out_s),
                        "--ledger", str(ledger)], capsys)
    assert code == 0
    lines = dict(ln.split(" ", 1) for ln in out.splitlines())
    assert float(lines["ratio"]) <= 1
    dag = parse_dag_file(dag_file)
    assert validate_schedule(dag, read_schedule(out_s.read_text())) == []
    assert ledger.read_text().startswith("kind,superstep,cost_before,cost_after,accepted")
    code, out, _ = run(["schedule", str(dag_file), "-P", "4", "--passes", "none"], capsys)
    assert code == 0 and "ratio 1.000000" in out
    assert run(["schedule", str(dag_file), "--ablate", "br,sr"], capsys)[0] == 0


def test_bench_command(tmp_path, capsys):
    run(["convert", "suite", "--count", "3", "-o", str(tmp_path / "suite")], capsys)
    cfg = tmp_path / "grid.ini"
    cfg.write_text("[grid]\nP = 2\ng = 4\nL = 20\nmodes = basic\n")
    out_csv = tmp_path / "r.csv"
    code, out, _ = run(["bench", str(tmp_path / "suite"), "--config", str(cfg), "--out", str(out_csv)], capsys)
    assert code == 0
    assert len(read_report(out_csv.read_text()).rows) == 3
    assert out.startswith("P,g,L,eps,mode")
    first = out_csv.read_text()
    run(["bench", str(tmp_path / "suite"), "--config", str(cfg), "--out", str(out_csv), "--jobs", "2"], capsys)
    assert out_csv.read_text() == first


def test_convert_matrix_and_tuples(tmp_path, capsys):
    mtx = tmp_path / "m.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 1 1\n2 2 1\n")
    code, out, _ = run(["convert", "mtx", str(mtx), "--model", "sptrsv"], capsys)
    assert code == 0 and out == "2 1\n1 2\n"
    code, out, _ = run(["convert", "mtx", str(mtx), "--model", "rownet"], capsys)
    assert code == 0 and out.splitlines()[0] == "2 2 10"
    log = tmp_path / "t.csv"
    log.write_text("1,2,5\n2,3,4\n")
    code, out, _ = run(["convert", "tuples", str(log), "--kappa0", "4"], capsys)
    assert code == 0 and out.splitlines()[0].startswith("2 3")


def test_errors_exit_nonzero(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["partition", str(tmp_path / "missing.hgr")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["schedule", str(tmp_path), "--ablate", "xx"])
    assert exc.value.code == 2
    bad = tmp_path / "bad.dag"
    bad.write_text("2 1\n1 5\n")
    code, _, err = run(["schedule", str(bad)], capsys)
    assert code != 0 and "error" in err
    cyc = tmp_path / "cyc.dag"
    cyc.write_text("2 2\n1 2\n2 1\n")
    assert run(["schedule", str(cyc)], capsys)[0] != 0


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "repart.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("partition", "schedule", "bench", "convert"):
        assert cmd in res.stdout
