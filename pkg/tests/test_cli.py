from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from matcocycle.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_INVARIANT, EXIT_OK, main
from matcocycle.cocycle import CocycleSpec
from matcocycle.serialize import dump_cocycle_spec, load_cocycle_spec
from matcocycle.symbolic import SubshiftSpec


def write_spec(tmp_path, c, name="spec.json"):
    path = tmp_path / name
    path.write_text(dump_cocycle_spec(c))
    return str(path)


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as e:
        return e.code


@pytest.fixture
def golden(tmp_path):
    c = CocycleSpec(SubshiftSpec([[1, 1], [1, 0]]), {(0,): [[1.0]], (1,): [[1.0]]})
    return write_spec(tmp_path, c, "golden.json")


def test_golden_mean_pressure(tmp_path, golden):
    out = tmp_path / "out.json"
    assert run("pressure", "--spec", golden, "--q", "0", "--out", out) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["command"] == "pressure"
    value = data["results"][0]["point_estimate"]
    assert value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-6)


def test_pressure_csv(tmp_path, scalar23):
    spec = write_spec(tmp_path, scalar23)
    out = tmp_path / "out.csv"
    assert run("pressure", "--spec", spec, "--q", "1", "--q", "2", "--n-max", 6,
               "--format", "csv", "--out", out) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert float(rows[0]["point_estimate"]) == pytest.approx(math.log(5))
    assert float(rows[1]["point_estimate"]) == pytest.approx(math.log(13))


def test_spectrum_csv_matches_binary_entropy(tmp_path, scalar23):
    spec = write_spec(tmp_path, scalar23)
    targets = tmp_path / "targets.json"
    ts = [0.25, 0.5, 0.75]
    alphas = [t * math.log(2) + (1 - t) * math.log(3) for t in ts]
    targets.write_text(json.dumps([[a] for a in alphas]))
    out = tmp_path / "spectrum.csv"
    assert run("spectrum", "--spec", spec, "--targets", targets, "--n", 10, "--out", out) == EXIT_OK
    rows = [r for r in csv.DictReader(out.open()) if r["method"] == "duality"]
    assert len(rows) == 3
    for t, row in zip(ts, rows):
        h = -t * math.log(t) - (1 - t) * math.log(1 - t)
        assert float(row["entropy"]) == pytest.approx(h, abs=0.05)


def test_fail_verdict_exits_zero(tmp_path, rotations):
    spec = write_spec(tmp_path, rotations)
    out = tmp_path / "check.json"
    assert run("check", "--spec", spec, "--kind", "domination", "--out", out) == EXIT_OK
    assert json.loads(out.read_text())["results"]["verdict"] == "fail"


def test_input_errors(tmp_path, scalar23):
    out = tmp_path / "out.json"
    assert run("pressure", "--spec", tmp_path / "missing.json", "--q", "1", "--out", out) == EXIT_INPUT
    spec = write_spec(tmp_path, scalar23)
    assert run("pressure", "--spec", spec, "--out", out) == EXIT_INPUT
    assert run("check", "--spec", spec, "--kind", "twisting", "--out", out) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("pressure", "--spec", bad, "--q", "1", "--out", out) == EXIT_INPUT
    assert not out.exists()


def test_invariant_violation_exit(tmp_path, commuting_pair):
    spec = write_spec(tmp_path, commuting_pair)
    out = tmp_path / "induced.json"
    assert run("induce", "--spec", spec, "--p", "0", "--z", "1", "--n", 3, "--out", out) == EXIT_INVARIANT


def test_budget_exit(tmp_path, scalar23):
    spec = write_spec(tmp_path, scalar23)
    out = tmp_path / "out.json"
    assert run("pressure", "--spec", spec, "--q", "1", "--n-max", 12, "--budget", 100, "--out", out) == EXIT_BUDGET


def test_induce_writes_loadable_spec(tmp_path, typical_pair):
    spec = write_spec(tmp_path, typical_pair)
    out = tmp_path / "induced.json"
    table = tmp_path / "table.json"
    assert run("induce", "--spec", spec, "--p", "0", "--z", "1", "--n", 4, "--q", "1,0",
               "--n-list", "2,3", "--table", table, "--out", out) == EXIT_OK
    ic = load_cocycle_spec(out)
    assert ic.k == 16
    rows = json.loads(table.read_text())["results"]
    assert [r["n"] for r in rows] == [2, 3]


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "matcocycle.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "schema" in res.stdout


@pytest.mark.parametrize("argv", [
    ["pressure", "--q", "1,0", "--q", "0.5,0.5", "--n-max", 6],
    ["spectrum", "--n", 8, "--auto", 3],
    ["oracle", "--alpha", "0.5,-0.2", "--n", 8],
    ["check", "--kind", "qm", "--pairs", 5],
    ["check", "--kind", "twisting", "--p", "0", "--z", "1"],
    ["induce", "--p", "0", "--z", "1", "--n", 4],
    ["measures", "--q", "1,0", "--n", 5, "--restarts", 2],
])
def test_thread_count_does_not_change_output(tmp_path, typical_pair, argv):
    spec = write_spec(tmp_path, typical_pair)
    outputs = []
    for threads in (1, 3):
        out = tmp_path / f"out{threads}"
        assert run(*argv, "--spec", spec, "--threads", threads, "--seed", 5, "--out", out) == EXIT_OK
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
