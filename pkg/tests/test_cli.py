import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from symtensor import io
from symtensor.cli import main
from symtensor.tensor import random_tensor
from symtensor.spaces import parse_space


@pytest.fixture
def runner():
    return CliRunner()


def test_check_passes(runner):
    res = runner.invoke(main, ["check", "--sector", "Fib", "--max-label", "1"])
    assert res.exit_code == 0, res.output
    lines = res.output.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_check_su2_writes_report(runner, tmp_path):
    out = tmp_path / "check.json"
    res = runner.invoke(main, ["check", "--sector", "SU2", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert json.loads(out.read_text())["passed"] is True


def test_bench_json_and_csv(runner, tmp_path):
    out, times = tmp_path / "r.json", tmp_path / "t.csv"
    res = runner.invoke(main, ["bench", "--workload", "two_site", "--sector", "SU2",
                               "--physical", "SU2[1:1]", "--virtual", "@heisenberg_su2#16",
                               "--mpo", "SU2[0:2, 1:1]", "--reps", "2", "--seed", "42",
                               "--out", str(out), "--csv", str(times)])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert {"config", "times_s", "flops_block", "flops_dense", "dim_total", "version"} <= set(doc)
    assert doc["config"]["seed"] == 42 and len(doc["times_s"]) == 2
    rows = list(csv.reader(times.open()))
    assert len(rows) == 3


def test_bench_stdout(runner):
    res = runner.invoke(main, ["bench", "--sector", "Z2", "--physical", "Z2[0:1, 1:1]",
                               "--virtual", "Z2[0:2, 1:2]", "--mpo", "Z2[0:1]", "--reps", "1"])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["workload"] == "single_site"


@pytest.mark.parametrize("args", [
    ["bench", "--sector", "SU2", "--physical", "SU2[1/3:1]", "--virtual", "SU2[0:1]", "--mpo", "SU2[0:1]"],
    ["bench", "--sector", "SU2", "--physical", "SU2[1:1]", "--virtual", "@nowhere", "--mpo", "SU2[0:1]"],
    ["bench", "--sector", "SU2", "--reps", "0", "--physical", "SU2[1:1]", "--virtual", "SU2[0:1]",
     "--mpo", "SU2[0:1]"],
    ["bench", "--workload", "bogus", "--sector", "SU2"],
    ["check", "--sector", "Q7"],
    ["nonsense"],
])
def test_config_errors_exit_2(runner, args):
    assert runner.invoke(main, args).exit_code == 2


def test_convert_round_trip(runner, tmp_path):
    A = random_tensor([parse_space("SU2[0:1, 1/2:2]")] * 2, [parse_space("SU2[1:1]")], seed=3)
    src = tmp_path / "a.json"
    src.write_text(io.to_json(A))
    mid, back = tmp_path / "a.stns", tmp_path / "b.json"
    assert runner.invoke(main, ["convert", str(src), str(mid)]).exit_code == 0
    assert mid.read_bytes()[:4] == b"STNS"
    assert runner.invoke(main, ["convert", str(mid), str(back)]).exit_code == 0
    B = io.load(back)
    for c in A.blocks:
        np.testing.assert_allclose(B.blocks[c], A.blocks[c], atol=1e-15)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert runner.invoke(main, ["convert", str(bad), str(mid)]).exit_code == 2
