import json

import numpy as np
import pytest

from pauli_identity.cli import execute, parse_state
from pauli_identity.collection import build_schedule
from pauli_identity.qit import collection_eps
from pauli_identity.states import NeedleState, ProductState, random_product_state, save_dense


def run(capsys, *argv):
    code = execute(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_state_language(tmp_path, rng):
    assert isinstance(parse_state("mixed", 2), ProductState)
    s = parse_state("product:0,0,1", 3)
    assert s.n == 3
    s = parse_state("product:0,0,1;1,0,0", None)
    assert s.blochs.tolist() == [[0, 0, 1], [1, 0, 0]]
    nd = parse_state("needle:ZZX:0.25", None)
    assert isinstance(nd, NeedleState) and nd.pauli.letters == "ZZX" and nd.eps == 0.25
    path = tmp_path / "rho.json"
    save_dense(path, random_product_state(2, rng).to_dense())
    assert parse_state(f"dense:{path}", None).n == 2
    for bad in ("foo", "product:1,2", "product:1,1,1", "needle:ZQ:0.5", "needle:ZZ:2"):
        with pytest.raises(ValueError):
            parse_state(bad, 2)


def test_schedule_passthrough(capsys):
    code, out, _ = run(capsys, "schedule", "--n", "2", "--eps", "0.5", "--L", "100")
    assert code == 0
    assert out == build_schedule(16, collection_eps(2, 0.5), 100).to_csv()
    code, out, _ = run(capsys, "schedule", "--m", "256", "--eps", "0.1")
    assert out == build_schedule(256, 0.1).to_csv()


def test_identity_equal_product_states(capsys):
    code, out, _ = run(capsys, "identity", "--rho", "product:0,0,1", "--sigma", "product:0,0,1",
                       "--n", "1", "--eps", "0.9", "--seed", "1")
    report = json.loads(out)
    assert code == 0 and report["verdict"] == "Yes"
    assert report["seed"] == 1 and report["config"]["seed"] == 1
    assert report["wall_ms"] is None


def test_identity_needle_many_trials(capsys):
    code, out, _ = run(capsys, "identity", "--n", "3", "--eps", "0.5", "--rho", "needle:ZZZ:0.5",
                       "--sigma", "mixed", "--seed", "7", "--trials", "20")
    doc = json.loads(out)
    assert code == 1
    assert doc["rejections"] >= 14 and len(doc["reports"]) == 20


def test_identity_output_byte_identical(tmp_path):
    args = ["identity", "--n", "2", "--eps", "0.5", "--rho", "needle:XY:0.5", "--sigma", "mixed",
            "--seed", "3", "--trials", "3"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    execute(args + ["-o", str(a)])
    execute(args + ["-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_identity_csv(capsys):
    code, out, _ = run(capsys, "identity", "--n", "1", "--eps", "1", "--rho", "product:0,0,1",
                       "--sigma", "product:0,0,-1", "--seed", "2", "--trials", "3", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "trial,seed,verdict,total_samples,trigger_k,trigger_pauli"
    assert len(lines) == 4


def test_timing_flag(capsys):
    _, out, _ = run(capsys, "identity", "--n", "1", "--eps", "0.9", "--rho", "mixed",
                    "--sigma", "mixed", "--seed", "1", "--timing")
    assert json.loads(out)["wall_ms"] > 0


def test_seed_recorded_when_absent(capsys):
    _, out, _ = run(capsys, "identity", "--n", "1", "--eps", "0.9", "--rho", "mixed", "--sigma", "mixed")
    rep = json.loads(out)
    assert isinstance(rep["seed"], int) and rep["config"]["seed"] == rep["seed"]


@pytest.mark.parametrize("argv", [
    ["identity", "--bogus"],
    ["nosuch"],
    ["identity", "--n", "1", "--eps", "-1", "--rho", "mixed", "--sigma", "mixed"],
    ["identity", "--n", "2", "--eps", "0.5", "--rho", "needle:Z:0.5", "--sigma", "mixed"],
    ["schedule", "--eps", "0.5"],
    ["mixedness", "--n", "2", "--eps", "0.5", "--trials", "10"],
    ["collection", "--spec", "{bad", "--eps", "0.3"],
    ["collection", "--spec", '{"alpha": [0.1]}', "--eps", "0.3"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == "" and err


def test_runtime_error_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "identity", "--eps", "0.5", "--rho", f"dense:{tmp_path}/missing.json",
                       "--sigma", "mixed", "--n", "1")
    assert code == 3 and "runtime error" in err


def test_collection_subcommand(capsys, tmp_path):
    spec = tmp_path / "coll.json"
    spec.write_text(json.dumps({"kind": "spread", "m": 16, "eps": 0.3, "seed": 4}))
    sched = tmp_path / "sched.csv"
    code, out, _ = run(capsys, "collection", "--spec", str(spec), "--eps", "0.3", "--L", "10",
                       "--seed", "1", "--trials", "5", "--emit-schedule", str(sched))
    doc = json.loads(out)
    assert code == 1 and doc["rejections"] == 5
    assert doc["mean_sq_distance"] == pytest.approx(0.09)
    assert sched.read_text() == build_schedule(16, 0.3, 10).to_csv()

    spec.write_text(json.dumps({"alpha": [0.1, 0.2], "beta": [0.1, 0.2]}))
    code, out, _ = run(capsys, "collection", "--spec", str(spec), "--eps", "0.3", "--seed", "1")
    assert code == 0

    inline = json.dumps({"kind": "spread", "m": 16, "eps": 0.3, "seed": 4})
    code, out, _ = run(capsys, "collection", "--spec", inline, "--eps", "0.3", "--L", "10",
                       "--seed", "1", "--trials", "5")
    assert code == 1 and json.loads(out)["rejections"] == 5


def test_mixedness_subcommand(capsys):
    code, out, _ = run(capsys, "mixedness", "--n", "1", "--eps", "0.8", "--budgets", "3,300",
                       "--strategies", "uniform-split,adaptive-greedy", "--trials", "100", "--seed", "2")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 5
    assert lines[0].startswith("n,eps,family,strategy,budget")
    for line in lines[1:]:
        fields = line.split(",")
        assert all(float(f) == float(f) for f in fields[7:10])  # plain numbers, no reprs


def test_calibrate_subcommand(capsys):
    code, out, err = run(capsys, "calibrate", "--m", "16", "--eps", "0.35", "--L-grid", "1,10",
                         "--trials", "30", "--seed", "3")
    assert code == 0
    assert out.splitlines()[0] == "L,case,trials,correct,rate,passes"
    assert "smallest passing L" in err


def test_selftest_subcommand(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and out.count("PASS") == 4
