import json

import pytest

from scenver.runner import ERROR, NEGATIVE, OK, ScenarioSpec, load_spec, run_spec

BOX = {"constraints": [{"a": [1, 0], "theta": 0.7}, {"a": [0, 1], "theta": 0.7}]}


def spec(queries, **kw):
    obj = {
        "format_version": 1,
        "environments": [{"id": "C", "case": "example"}],
        "sequence": [{"env": "C", "horizon": 1}],
        "preconditions": {"box": BOX},
        "queries": queries,
    }
    obj.update(kw)
    return ScenarioSpec.from_json(obj)


class TestRunSpec:
    def test_single_forward(self, tmp_path):
        (r,) = run_spec(spec([{"kind": "forward", "pre": "box", "id": "fw"}]), tmp_path)
        assert r.status == OK and r.data["worst_case_error"] == pytest.approx(0.17)
        lines = (tmp_path / "fw.csv").read_text().splitlines()
        assert len(lines) == 2 and lines[1].startswith("fw,0.1699999")

    def test_unknown_environment_is_collected(self, tmp_path):
        results = run_spec(
            spec([{"kind": "forward", "sequence": "Z:1"}, {"kind": "summarize"}]), tmp_path
        )
        assert results[0].status == ERROR and "'Z'" in results[0].data["error"]
        assert results[1].status == OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert [q["status"] for q in report["queries"]] == [ERROR, OK]

    def test_rule_sweep(self, tmp_path):
        (r,) = run_spec(spec([{"kind": "accelerate", "invariant": "auto", "k": 6, "id": "sweep"}]), tmp_path)
        rows = (tmp_path / "sweep.csv").read_text().splitlines()
        assert rows[0] == "k,bound" and len(rows) == 7
        for line in rows[1:]:
            k, bound = line.split(",")
            assert float(bound) == pytest.approx(1 - (1 - 0.15) ** int(k), abs=1e-15)

    def test_check_negative(self):
        (r,) = run_spec(spec([{"kind": "check", "pre": "box", "post": "box", "eps": 0.15}]))
        assert r.status == NEGATIVE and r.data["counterexample"] == pytest.approx([0.7, 0.3])

    def test_all_kinds(self, tmp_path):
        queries = [
            {"kind": "summarize"},
            {"kind": "forward", "pre": "box"},
            {"kind": "backward", "eps": 0.15},
            {"kind": "check", "pre": "box", "post": "box", "eps": 0.17},
            {"kind": "accelerate", "invariant": "trivial", "k": 3, "brute_force": 2},
            {"kind": "invariant", "eps_grid": "0:0.5:0.01"},
            {"kind": "interleave", "pre": "box", "k": 3},
            {"kind": "simulate", "init": {"state": "s1"}, "n": 20000, "seed": 4},
        ]
        results = run_spec(spec(queries), tmp_path)
        assert [r.status for r in results] == [OK] * len(queries)
        assert results[5].data["eps"] == 0.15
        assert results[6].data["worst_case"] == pytest.approx([0.17, 0.301, 0.4067])

    def test_byte_stable(self, tmp_path):
        queries = [{"kind": "simulate", "init": [0.5, 0.5], "n": 5000, "seed": 1}, {"kind": "forward", "pre": "box"}]
        run_spec(spec(queries), tmp_path / "a")
        run_spec(spec(queries), tmp_path / "b")
        for name in ("report.json", "queries.csv", "q1_simulate.csv", "q2_forward.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_f1tenth_builtin_predicate(self):
        s = ScenarioSpec.from_json(
            {
                "environments": [{"id": "straight", "case": "f1tenth", "reduced": True, "noise": "uniform:0.1"}],
                "sequence": "straight:12",
                "queries": [{"kind": "forward", "pre": "nominal"}],
            }
        )
        (r,) = run_spec(s)
        assert r.status == OK and 0.0 < r.data["worst_case_error"] < 0.05

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            spec([{"kind": "nope"}])
        with pytest.raises(ValueError):
            spec([], sequence=[{"env": "C", "horizon": 0}])

    def test_load_spec_relative_paths(self, tmp_path, chain):
        from scenver.io import export_explicit_chain

        export_explicit_chain(chain, tmp_path / "m.tra")
        (tmp_path / "spec.json").write_text(
            json.dumps({"environments": {"C": {"chain": "m.tra"}}, "sequence": "C:2", "queries": [{"kind": "summarize"}]})
        )
        (r,) = run_spec(load_spec(tmp_path / "spec.json"))
        assert r.data["max_error"] == pytest.approx(0.34)


def test_sample_spec_runs(tmp_path):
    from pathlib import Path

    sample = Path(__file__).resolve().parent.parent / "samples" / "example_spec.json"
    results = run_spec(load_spec(sample), tmp_path)
    assert all(r.status == OK for r in results), [(r.id, r.data.get("error")) for r in results]
