import json
import subprocess
import sys

import pytest

from skorolab.cadlag import step_function, write_cadlag
from skorolab.cli import SCHEMA, build_parser, main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    text = path.read_text()
    meta_line, *rows = text.split("\n")
    assert meta_line.startswith("# ")
    return json.loads(meta_line[2:]), [r.split(",") for r in rows if r]


def test_rate_bound_toy(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, _ = run(["rate-bound", "--model", "toy", "--n-range", "1..20", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["metadata"]["seed"] == 42 and len(doc["metadata"]["config_hash"]) == 64
    assert doc["metadata"]["version"] == "0.1.0"
    assert len(doc["data"]["reports"]) == 20
    assert all(r["holds"] for r in doc["data"]["reports"]) and doc["data"]["holds_all"]
    assert doc["data"]["reports"][1]["exact"]["lhs"] == "3/16"


def test_rate_bound_model_file(tmp_path, capsys):
    model = {
        "members": {"1": {"0": "3/4", "1": "1/4"}, "2": {"0": "1/2", "1": "1/2"}},
        "limit": {"0": "1/2", "1": "1/2"},
        "index": {"offsets": {"0": "1"}},
        "norm_scale": "1",
        "limit_index": {"1": "1"},
        "c": "1/2",
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model))
    code, out, _ = run(["rate-bound", "--model", str(path), "--n-range", "1..2"], capsys)
    assert code == 0
    reports = json.loads(out)["data"]["reports"]
    assert reports[0]["exact"]["lhs"] == "1/4" and reports[1]["lhs"] == 0.0


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "lemma-check", "ns": "10", "gird": 5}))
    code, _, err = run(["lemma-check", "--config", str(cfg)], capsys)
    assert code == 2 and "gird" in err


def test_config_kind_mismatch(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "sweep"}))
    code, _, _ = run(["lemma-check", "--config", str(cfg)], capsys)
    assert code == 2


def test_bad_field_type(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": "many"}))
    code, _, err = run(["counterexample", "--config", str(cfg)], capsys)
    assert code == 2 and "grid" in err


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ns": "10,100", "seed": 5}))
    code, out, _ = run(["lemma-check", "--config", str(cfg), "--ns", "1000", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["metadata"]["seed"] == 5
    assert [r["n"] for r in doc["data"]["rows"]] == [1000]


def test_missing_input_file(capsys):
    code, _, err = run(["distance", "--f", "/nonexistent/a.json", "--g", "/nonexistent/b.json"], capsys)
    assert code == 2


def test_hypothesis_violation_exit(capsys):
    code, _, err = run(["sample", "--what", "poisson-index", "--a", "-1", "--n", "10"], capsys)
    assert code == 1 and "BAD_PARAM" in err


def test_distance_command(tmp_path, capsys):
    f, g = tmp_path / "f.json", tmp_path / "g.json"
    write_cadlag(step_function([(0.5, 1.0)]), f)
    write_cadlag(step_function([(0.6, 1.0)]), g)
    out = tmp_path / "r.json"
    code, _, _ = run(["distance", "--f", str(f), "--g", str(g), "--oracle", "--out", str(out)], capsys)
    doc = json.loads(out.read_text())["data"]
    assert code == 0
    assert doc["upper"] == pytest.approx(0.22314355, abs=1e-6)
    assert abs(doc["oracle"]["upper"] - doc["upper"]) <= 1e-3
    assert doc["witness"][0] == {"t": 0.0, "y": 0.0}


def test_sample_command(capsys):
    code, out, _ = run(["sample", "--what", "donsker", "--n", "8", "--seed", "3", "--rep", "2"], capsys)
    knots = json.loads(out)["data"]["knots"]
    assert code == 0 and len(knots) == 9 and knots[0] == {"t": 0.0, "v": 0.0, "l": 0.0}
    code, out, _ = run(["sample", "--what", "poisson-index", "--n", "100", "--format", "csv"], capsys)
    assert code == 0 and out.splitlines()[1] == "t,v,l"


def test_sweep_command(tmp_path, capsys):
    model = tmp_path / "m.json"
    model.write_text(json.dumps({"family": "donsker", "index": "uniform"}))
    out = tmp_path / "s.csv"
    code, _, _ = run(
        ["sweep", "--model", str(model), "--ns", "16,64", "--functional", "terminal,sup", "--reps", "100", "--out", str(out)],
        capsys,
    )
    meta, rows = read_csv(out)
    assert code == 0 and meta["kind"] == "sweep"
    assert rows[0] == ["n", "functional", "ks", "stderr", "reps"] and len(rows) == 5
    model.write_text(json.dumps({"family": "donsker", "indx": "uniform"}))
    code, _, err = run(["sweep", "--model", str(model)], capsys)
    assert code == 2 and "indx" in err


def test_counterexample_csv(tmp_path, capsys):
    out = tmp_path / "ce.csv"
    code, _, _ = run(["counterexample", "--n", "1..2", "--variant", "step", "--grid", "200", "--out", str(out)], capsys)
    meta, rows = read_csv(out)
    assert code == 0 and len(rows) == 3
    header = rows[0]
    assert header[:4] == ["n", "variant", "d_A_even", "d_B_even"]
    assert {"obstruction", "eq2_value"} <= set(header)
    assert b"\r" not in out.read_bytes()


def test_byte_identical_runs(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, threads in ((a, "1"), (b, "2")):
        model = tmp_path / "m.json"
        model.write_text(json.dumps({"family": "donsker"}))
        main(["sweep", "--model", str(model), "--ns", "32,128", "--reps", "200", "--threads", threads, "--out", str(path)])
    assert a.read_bytes() == b.read_bytes()


def test_help_lists_defaults(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for kind, params in SCHEMA.items():
        text = " ".join(sub[kind].format_help().split())
        for flag in ("--seed", "--threads", "--out", "--format", "--config"):
            assert flag in text
        for name, default in params.items():
            assert "--" + name.replace("_", "-") in text
            assert f"(default: {default})" in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "skorolab", "lemma-check", "--ns", "10"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[-1] == "10,0.1,0.1"
