import csv
import json

import pytest

from gtompc.cli import DEFAULT_CONFIG, GUIDANCE_HEADER, main
from gtompc.sim import CSV_HEADER

GOLDEN = {
    "vehicle": {"f_max_over_m": 19.81, "g": 9.81},
    "task": {
        "initial": {"p": [-2.0, -1.5, -2.5], "v": [-3.0, 1.0, 0.0]},
        "target": {"p": [0.0, 0.0, 0.0], "v": [1.0, 0.0, 2.0]},
    },
}


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_print_default_config(capsys):
    assert main(["--print-default-config"]) == 0
    assert json.loads(capsys.readouterr().out) == DEFAULT_CONFIG


def test_no_command_is_usage_error():
    assert main([]) == 1


def test_decompose_golden(tmp_path, capsys):
    out = tmp_path / "iters.csv"
    assert main(["decompose", write(tmp_path, GOLDEN), "--iters-csv", str(out)]) == 0
    text = capsys.readouterr().out
    assert "converged" in text
    assert header(out) == ["iter", "ax_max", "ay_max", "az_max", "tx", "ty", "tz", "t_min"]
    with open(out) as fh:
        rows = list(csv.reader(fh))[1:]
    assert float(rows[-1][1]) == pytest.approx(9.026, abs=2e-3)


def test_weight_exceeding_thrust_rejected(tmp_path, capsys):
    doc = dict(GOLDEN, vehicle={"f_max_over_m": 9.0, "g": 9.81})
    assert main(["decompose", write(tmp_path, doc)]) == 1
    assert "must exceed weight" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    doc = dict(GOLDEN, extra=1)
    assert main(["decompose", write(tmp_path, doc)]) == 1


def test_missing_file_rejected(tmp_path):
    assert main(["decompose", str(tmp_path / "absent.json")]) == 1


def test_malformed_task_rejected(tmp_path):
    doc = dict(GOLDEN, task={"initial": {"p": [0, 0], "v": [0, 0, 0]}, "target": GOLDEN["task"]["target"]})
    assert main(["decompose", write(tmp_path, doc)]) == 1


def test_benchmark_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["benchmark", "--n", "3", "--seed", "7", "--out", str(a)]) == 0
    assert main(["benchmark", "--n", "3", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()


def test_benchmark_rejects_empty_run(tmp_path):
    assert main(["benchmark", "--n", "0", "--out", str(tmp_path / "x.csv")]) == 1


def test_fly_open_loop(tmp_path, capsys):
    out = tmp_path / "guidance.csv"
    assert main(["fly", write(tmp_path, GOLDEN), "--open-loop", "--mode", "both", "--out", str(out)]) == 0
    for mode in ("gtompc", "dtotp"):
        assert header(tmp_path / f"guidance_{mode}.csv") == list(GUIDANCE_HEADER)


def test_fly_coincident_pair(tmp_path, capsys):
    s = {"p": [1.0, 2.0, 3.0], "v": [0.0, 0.0, 0.0]}
    doc = {"task": {"initial": s, "target": s}}
    out = tmp_path / "traj.csv"
    assert main(["fly", write(tmp_path, doc), "--out", str(out)]) == 0
    assert "arrival 0.000 s" in capsys.readouterr().out
    assert header(out) == list(CSV_HEADER)


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv("GTOMPC_THREADS", "0")
    assert main(["benchmark", "--n", "1", "--out", str(tmp_path / "x.csv")]) == 1
