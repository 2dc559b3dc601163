from __future__ import annotations

import json

import pytest

from specrepair.agent import HashingEmbedder, load_store
from specrepair.bench import (
    build_report,
    config_from_dict,
    ingest,
    load_annotations,
    load_config,
    overlap,
    override,
    render_report,
    replay_script_for,
)
from specrepair.cli import main
from specrepair.errors import AnnotationError, ConfigError
from specrepair.orchestrator import ReasoningStrategy

from helpers import FIXTURE_ROOT

BASE = {"corpus": "c", "output_dir": "o", "strategy": "none"}


def session(bug_id, result, project="p", time=1.0, cost=0.5):
    return {"bug_id": bug_id, "project_id": project, "result": result, "ledger": {"wall_time": time, "cost": cost}}


# -- config ------------------------------------------------------------------


def test_config_paths_resolve_against_base(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({**BASE, "replay": "r", "budget": {"max_attempts": 2}}))
    config = load_config(path)
    assert config.corpus == tmp_path / "c" and config.replay == tmp_path / "r"
    assert config.budget.max_attempts == 2 and config.budget.max_feedback_rounds == 3
    assert config.strategy is ReasoningStrategy.NONE


@pytest.mark.parametrize(
    "data,match",
    [
        ({"output_dir": "o"}, "corpus"),
        ({**BASE, "colour": 1}, "unknown config keys: colour"),
        ({**BASE, "strategy": "minir"}, "example_store"),
        ({**BASE, "replay": "r", "model": {"endpoint": "http://x"}}, "replay"),
        ({**BASE, "parallelism": 0}, "parallelism"),
        ({**BASE, "budget": {"max_attempts": 0}}, "bad config value"),
        ({**BASE, "strategy": "sometimes"}, "bad config value"),
        ({**BASE, "model": {"temperature": -1}}, "bad config value"),
    ],
)
def test_config_errors(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(data)


def test_load_config_unreadable(tmp_path):
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_override_rechecks_invariants():
    config = config_from_dict(BASE)
    changed = override(config, max_rounds=1, strategy="maxr", no_retrieval=True, parallelism=None)
    assert changed.budget.max_feedback_rounds == 1 and changed.budget.max_attempts == 5
    assert changed.strategy is ReasoningStrategy.MAXR
    with pytest.raises(ConfigError):
        override(config, strategy="maxr")
    with pytest.raises((ConfigError, ValueError)):
        override(config, max_attempts=0)


def test_replay_script_lookup(tmp_path):
    (tmp_path / "b.json").write_text("[]")
    assert replay_script_for(tmp_path, "b", ReasoningStrategy.MAXR) == tmp_path / "b.json"
    (tmp_path / "b.maxr.json").write_text("[]")
    assert replay_script_for(tmp_path, "b", ReasoningStrategy.MAXR) == tmp_path / "b.maxr.json"
    assert replay_script_for(tmp_path / "b.json", "other", ReasoningStrategy.NONE) == tmp_path / "b.json"
    with pytest.raises(ConfigError):
        replay_script_for(tmp_path, "c", ReasoningStrategy.NONE)


# -- reporting ---------------------------------------------------------------


def test_build_report_counts():
    sessions = [session("a", "plausible"), session("b", "exhausted", "q", 3.0, 1.5), session("c", "plausible", "q")]
    scenarios = {"a": ["SF", "SH"], "b": ["MF"], "c": ["SF"]}
    report = build_report(sessions, scenarios, {"a": True, "c": False})
    assert report["projects"] == [
        {"project": "p", "bugs": 1, "plausible": 1, "correct": 1},
        {"project": "q", "bugs": 2, "plausible": 1, "correct": 0},
    ]
    assert report["total"] == {"bugs": 3, "plausible": 2, "correct": 1}
    assert report["scenarios"]["SF"] == {"bugs": 2, "plausible": 2, "correct": 1}
    assert report["scenarios"]["SL"] == {"bugs": 0, "plausible": 0, "correct": 0}
    assert report["avg_time"] == pytest.approx(5 / 3) and report["avg_cost"] == pytest.approx(2.5 / 3)
    text = render_report(report)
    assert "total" in text and "1/2" in text


def test_report_without_annotations_and_empty():
    report = build_report([session("a", "plausible")])
    assert not report["annotated"]
    assert "-/1" in render_report(report)
    empty = build_report([])
    assert empty["total"] == {"bugs": 0, "plausible": 0, "correct": 0}
    assert empty["avg_time"] == empty["avg_cost"] == 0.0 and empty["projects"] == []


def test_annotation_errors(tmp_path):
    with pytest.raises(AnnotationError, match="no plausible patch"):
        build_report([session("a", "exhausted")], annotations={"a": True})
    with pytest.raises(AnnotationError, match="unknown bug"):
        build_report([session("a", "plausible")], annotations={"z": False})
    path = tmp_path / "ann.json"
    path.write_text(json.dumps({"annotations": [{"bug_id": "a", "correct": True}, {"bug_id": "b", "correct": None}]}))
    assert load_annotations(path) == {"a": True, "b": None}
    path.write_text(json.dumps({"a": "yes"}))
    with pytest.raises(AnnotationError):
        load_annotations(path)
    path.write_text("[1]")
    with pytest.raises(AnnotationError):
        load_annotations(path)


def test_overlap():
    out = overlap({"x": ["a", "b"], "y": ["b", "c"], "z": ["b"]})
    assert out["unique"] == {"x": ["a"], "y": ["c"], "z": []}
    assert out["shared_by_all"] == ["b"] and out["union"] == ["a", "b", "c"]
    assert overlap({})["union"] == []


# -- ingest ------------------------------------------------------------------


def test_ingest_two_triples_and_empty(tmp_path):
    triples = tmp_path / "t.jsonl"
    triples.write_text(
        '{"buggy_code": "a", "fix_code": "b", "root_cause": "c"}\n{"buggy_code": "d", "fix_code": "e", "root_cause": "f"}\n'
    )
    store = ingest(triples, HashingEmbedder(), tmp_path / "s.jsonl")
    assert len(store) == 2 and len(load_store(tmp_path / "s.jsonl")) == 2
    empty = tmp_path / "e.json"
    empty.write_text("[]")
    ingest(empty, HashingEmbedder(), tmp_path / "e.jsonl")
    lines = (tmp_path / "e.jsonl").read_text().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["kind"] == "header"
    bad = tmp_path / "bad.json"
    bad.write_text('[{"buggy_code": "a"}]')
    with pytest.raises(ConfigError, match="fix_code, root_cause"):
        ingest(bad, HashingEmbedder(), tmp_path / "x.jsonl")


# -- command line ------------------------------------------------------------


def test_cli_tool_list_and_run(capsys):
    assert main(["tool", "list"]) == 0
    assert "track_variable_dataflow" in capsys.readouterr().out
    assert main(["tool", "run", "find_class_loc", "class_name=Empty", "--workspace", str(FIXTURE_ROOT)]) == 0
    assert json.loads(capsys.readouterr().out) == [{"end_line": 14, "file": "src/demo/model/Shape.java", "start_line": 13}]
    assert main(["tool", "run", "nope", "--workspace", str(FIXTURE_ROOT)]) == 2
    assert main(["tool", "run", "get_imports", "file", "--workspace", str(FIXTURE_ROOT)]) == 2


@pytest.mark.parametrize(
    "bug,strategy,code",
    [("counter-1", "none", 0), ("stats-1", "none", 1), ("stats-1", "minir", 0), ("cli-1", "maxr", 0)],
)
def test_cli_repair_exit_codes(tmp_path, capsys, bug, strategy, code):
    assert main(["repair", "--demo", "--bug", bug, "--strategy", strategy, "--output", str(tmp_path)]) == code
    saved = json.loads((tmp_path / "sessions" / f"{bug}.json").read_text())
    assert saved["strategy"] == strategy
    assert (tmp_path / "patches" / f"{bug}.diff").exists() == (code == 0)


def test_cli_aborted_run_exits_3(tmp_path):
    (tmp_path / "counter-1.json").write_text('["not a specification", "still not"]')
    args = ["repair", "--demo", "--bug", "counter-1", "--replay", str(tmp_path), "--output", str(tmp_path / "o")]
    assert main(args) == 3


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["repair", "--bug", "x"]) == 2
    assert "--config FILE or --demo" in capsys.readouterr().err
    assert main(["repair", "--demo", "--bug", "missing", "--output", str(tmp_path)]) == 2
    assert main(["repair", "--demo", "--bug", "counter-1", "--max-attempts", "0", "--output", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["repair", "--demo"])


def test_cli_transform(capsys):
    assert main(["transform", "--demo", "--bug", "counter-1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["specifications"][0]["function_name"] == "countInRange"


def test_cli_evaluate_and_report(tmp_path, capsys, demo):
    a, b = tmp_path / "none", tmp_path / "maxr"
    assert main(["evaluate", "--demo", "--strategy", "none", "--output", str(a)]) == 0
    assert main(["evaluate", "--demo", "--strategy", "maxr", "--output", str(b)]) == 0
    report = json.loads((b / "report.json").read_text())
    assert report["total"] == {"bugs": 3, "plausible": 3, "correct": 0}
    assert report["scenarios"]["MF"]["bugs"] == 1 and report["scenarios"]["SF"]["bugs"] == 2
    forms = json.loads((b / "review" / "annotations.json").read_text())["annotations"]
    assert [f["bug_id"] for f in forms] == ["cli-1", "counter-1", "stats-1"]
    capsys.readouterr()
    assert main(["report", str(b), str(a), "--corpus", str(demo / "corpus"), "--out", str(tmp_path / "cmp")]) == 0
    merged = json.loads((tmp_path / "cmp" / "report.json").read_text())
    assert merged["overlap"]["unique"] == {"maxr": ["stats-1"], "none": []}
    assert "unique to maxr: 1 stats-1" in capsys.readouterr().out


def test_cli_ingest(tmp_path, capsys):
    triples = tmp_path / "t.json"
    triples.write_text('[{"buggy_code": "a", "fix_code": "b", "root_cause": "c"}]')
    assert main(["ingest", str(triples), "--out", str(tmp_path / "s.jsonl"), "--dimension", "64"]) == 0
    assert "wrote 1 example(s) of dimension 64" in capsys.readouterr().out
