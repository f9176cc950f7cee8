import json

import pytest

from scenver.cli import build_parser, main


@pytest.fixture
def example_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SCENVER_OUT", raising=False)
    assert main(["case-gen", "--case", "example", "--out", "."]) == 0
    assert main(["summarize", "--chain", "C=C.tra", "--sequence", "C:1", "--output", "s.json"]) == 0
    return tmp_path


def test_check_holds(example_dir, capsys):
    assert main(["check", "--summary", "s.json", "--pre", "box.json", "--post", "box.json", "--eps", "0.17"]) == 0
    assert "verdict: holds" in capsys.readouterr().out


def test_check_fails_with_counterexample(example_dir, capsys):
    assert main(["check", "--summary", "s.json", "--pre", "box.json", "--post", "box.json", "--eps", "0.15"]) == 1
    assert "counterexample: [0.7, 0.3]" in capsys.readouterr().out


def test_accelerate_zero_error(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "safe.tra").write_text("STATES 3\n0 1 1\n1 0 1\n2 2 1\n")
    assert main(["summarize", "--chain", "Z=safe.tra", "--sequence", "Z:5", "--output", "s.json"]) == 0
    capsys.readouterr()
    assert main(["accelerate", "--summary", "s.json", "--invariant", "auto", "--k", "64"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "eps = 0 " in lines[0]
    bounds = [ln.split()[1] for ln in lines[2:]]
    assert len(bounds) == 64 and set(bounds) == {"0"}


def test_accelerate_f1tenth_certificate(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["case-gen", "--case", "f1tenth", "--reduced", "--out", "."]) == 0
    args = ["summarize", "--chain", "straight=straight.tra", "--sequence", "straight:12", "--output", "s.json"]
    assert main(args) == 0
    capsys.readouterr()
    assert main(["accelerate", "--summary", "s.json", "--invariant", "pre_forward.json", "--eps", "0", "--k", "8", "--out", "rep"]) == 0
    assert (tmp_path / "rep" / "bounds.csv").read_text().splitlines()[1:] == [f"{k},0" for k in range(1, 9)]


def test_forward_backward_interleave_invariant(example_dir, capsys):
    assert main(["forward", "--summary", "s.json", "--pre", "box.json"]) == 0
    assert "worst-case error: 0.17" in capsys.readouterr().out
    assert main(["backward", "--summary", "s.json", "--eps", "0.15"]) == 0
    assert main(["interleave", "--summary", "s.json", "--pre", "box.json", "--k", "3", "--out", "rep"]) == 0
    assert (example_dir / "rep" / "interleave.csv").exists()
    assert main(["invariant", "--summary", "s.json", "--eps-grid", "0:0.14:0.01"]) == 1
    assert main(["invariant", "--summary", "s.json", "--eps-grid", "0:0.2:0.01"]) == 0
    assert "eps = 0.15" in capsys.readouterr().out


def test_simulate_seeded(example_dir, capsys):
    args = ["simulate", "--chain", "C=C.tra", "--sequence", "C:1", "--init", "0.5,0.5", "--n", "20000", "--seed", "3"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first and "±" in first


def test_export(example_dir):
    assert main(["export", "--case", "example", "--out", "exp"]) == 0
    assert (example_dir / "exp" / "C.tra").read_text().splitlines()[-1] == "2 2 1"


def test_output_dir_from_environment(example_dir, monkeypatch):
    monkeypatch.setenv("SCENVER_OUT", str(example_dir / "envout"))
    assert main(["forward", "--summary", "s.json", "--pre", "box.json"]) == 0
    assert (example_dir / "envout" / "forward.csv").exists()


def test_spec(example_dir, capsys):
    spec = {
        "environments": [{"id": "C", "chain": "C.tra"}],
        "sequence": "C:1",
        "preconditions": {"box": "box.json"},
        "queries": [{"kind": "check", "pre": "box", "post": "box", "eps": 0.15}],
    }
    (example_dir / "spec.json").write_text(json.dumps(spec))
    assert main(["--out", "bundle", "--spec", "spec.json"]) == 1
    assert (example_dir / "bundle" / "report.json").exists()


def test_usage_errors(example_dir, capsys):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["check", "--summary", "missing.json", "--eps", "0.1"]) == 2
    assert main(["summarize", "--sequence", "C:1"]) == 2
    assert main(["summarize", "--chain", "C", "--sequence", "C:1"]) == 2
    err = capsys.readouterr().err
    assert "usage" in err and "error" in err


def test_help_documents_formats(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) == {
        "summarize", "forward", "backward", "check", "accelerate",
        "invariant", "interleave", "simulate", "export", "case-gen",
    }
    for name, p in sub.items():
        text = p.format_help()
        assert "explicit chain" in text and "exit codes" in text, name
    assert main(["check", "--help"]) == 0


def test_case_gen_f1tenth_and_taxinet(tmp_path):
    assert main(["case-gen", "--case", "f1tenth", "--reduced", "--noise", "uniform:0.1", "--out", str(tmp_path / "f")]) == 0
    assert (tmp_path / "f" / "left.tra").exists() and (tmp_path / "f" / "pre_nominal.json").exists()
    assert main(["case-gen", "--case", "taxinet", "--env", "bright", "--env", "dark", "--out", str(tmp_path / "t")]) == 0
    assert (tmp_path / "t" / "dark.csv").exists() and (tmp_path / "t" / "dynamics.json").exists()
    assert main([
        "summarize", "--case", "taxinet",
        "--contingency", f"bright={tmp_path / 't' / 'bright.csv'}",
        "--sequence", "bright:20", "--output", str(tmp_path / "t" / "s.json"),
    ]) == 0
