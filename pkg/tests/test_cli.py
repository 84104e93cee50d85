import subprocess
import sys

import pytest

from vfogmatch import config_io
from vfogmatch.cli import build_parser, main
from vfogmatch.problem import Assignment

from strategies import hand_instance


def run(*argv):
    try:
        return main(list(argv))
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code


def test_parse_solve():
    args = build_parser().parse_args(["solve", "--instance", "f", "--solver", "exact"])
    assert args.command == "solve" and args.solver == "exact" and str(args.instance) == "f"


def test_parse_sweep_range():
    args = build_parser().parse_args(["sweep", "--k", "0..10", "--seeds", "10", "--out", "r.csv"])
    assert args.k == tuple(range(11)) and args.seeds == 10


def test_bad_solver_is_usage_error(capsys):
    assert run("solve", "--solver", "frobnicate") == 1
    err = capsys.readouterr().err
    assert "exact" in err and "greedy" in err and "brute" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--bogus"],
        [],
        ["sweep", "--k", "5..2"],
        ["sweep", "--seeds", "0"],
        ["generate", "--alpha", "-1"],
        ["generate", "--seed", str(2**64)],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(*argv) == 1
    assert "usage" in capsys.readouterr().err


def test_generate_then_solve_then_evaluate(tmp_path, capsys):
    inst_path, out = tmp_path / "i.toml", tmp_path / "a.csv"
    assert run("generate", "--seed", "2", "--out", str(inst_path)) == 0
    assert run("solve", "--instance", str(inst_path), "--out", str(out)) == 0
    printed = capsys.readouterr().out
    assert "optimal            yes" in printed
    inst = config_io.load_instance(inst_path)
    assert len(Assignment.from_text(out.read_text())) == len(inst.requests)
    assert run("evaluate", "--instance", str(inst_path), "--assignment", str(out)) == 0
    assert "feasible           yes" in capsys.readouterr().out


def test_generate_is_idempotent(tmp_path):
    a, b = tmp_path / "a.toml", tmp_path / "b.toml"
    run("generate", "--seed", "9", "--packages-per-vehicle", "3", "--out", str(a))
    run("generate", "--seed", "9", "--packages-per-vehicle", "3", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_evaluate_flags_infeasible_assignment(tmp_path, capsys):
    inst_path, bad = tmp_path / "i.toml", tmp_path / "bad.csv"
    config_io.save_instance(hand_instance([(120, 1), (150, 0)], [(240, {0})]), inst_path)
    bad.write_text("request_id,target\n0,vehicle:0\n1,cloud\n")
    assert run("evaluate", "--instance", str(inst_path), "--assignment", str(bad)) == 2
    captured = capsys.readouterr()
    assert "software_mismatch" in captured.err
    assert "feasible           no" in captured.out


def test_evaluate_rejects_short_assignment(tmp_path):
    inst_path, short = tmp_path / "i.toml", tmp_path / "short.csv"
    config_io.save_instance(hand_instance([(120, 1), (150, 0)], [(240, {0})]), inst_path)
    short.write_text("0,cloud\n")
    assert run("evaluate", "--instance", str(inst_path), "--assignment", str(short)) == 1


def test_infeasible_alpha_exits_2(capsys):
    # alpha above 100 Mbps / sum(demand) ~ 0.01 overloads the RSU
    assert run("solve", "--alpha", "0.05", "--solver", "greedy") == 2
    assert "infeasible" in capsys.readouterr().err


def test_brute_size_guard_exits_1(capsys):
    assert run("solve", "--solver", "brute") == 1
    assert "enumeration needs" in capsys.readouterr().err


def test_unproven_exits_3():
    assert run("solve", "--seed", "1", "--packages-per-vehicle", "3", "--node-budget", "500") == 3


def test_sweep_writes_both_tables(tmp_path):
    out = tmp_path / "r.csv"
    code = run("sweep", "--k", "0..2", "--seeds", "2", "--requests", "10", "--vehicles", "4", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("k,seed,total_power_w")
    assert len(lines) == 1 + 3 * 2
    summary = (tmp_path / "r.summary.csv").read_text().splitlines()
    assert summary[0].startswith("k,stat,") and len(summary) == 1 + 3 * 3


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[scenario]\nseed = 5\nalpha = "0.006"\n\n[solver]\nname = "greedy"\n')
    assert run("show-config", "--config", str(cfg), "--seed", "8") == 0
    shown = capsys.readouterr().out
    assert "seed = 8" in shown  # flag beats file
    assert 'alpha = "0.006"' in shown  # file beats default
    assert "request_count = 50" in shown  # default
    assert 'name = "greedy"' in shown


def test_config_errors(tmp_path):
    assert run("show-config", "--config", str(tmp_path / "missing.toml")) == 1
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario]\nwheels = 4\n")
    assert run("show-config", "--config", str(bad)) == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "vfogmatch", "solve", "--solver", "nope"], capture_output=True, text=True
    )
    assert proc.returncode == 1 and "usage:" in proc.stderr
