import asyncio
import json
from pathlib import Path

import pytest

from core.dataset import load_queries
from core.types import TaskKind
from interfaces.cli_interface import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, dispatch

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN_REWARDS = (FIXTURES / "golden_rewards.jsonl").read_text(encoding="utf-8")


def test_usage_errors(settings):
    assert dispatch([], settings) == EXIT_USAGE
    assert dispatch(["frobnicate"], settings) == EXIT_USAGE
    assert dispatch(["score", "--in", "x.jsonl"], settings) == EXIT_USAGE
    assert dispatch(["--help"], settings) == EXIT_OK


# ── score ──

def test_score_golden_corpus(settings, tmp_path):
    out = tmp_path / "rewards.jsonl"
    code = dispatch(["score", "--in", str(FIXTURES / "golden_requests.jsonl"), "--out", str(out)], settings)
    assert code == EXIT_OK
    assert out.read_text(encoding="utf-8") == GOLDEN_REWARDS


async def test_score_against_running_service(settings, running_server, tmp_path):
    out = tmp_path / "rewards.jsonl"
    argv = ["score", "--in", str(FIXTURES / "golden_requests.jsonl"), "--out", str(out), "--endpoint", running_server.url]
    code = await asyncio.to_thread(dispatch, argv, settings)
    assert code == EXIT_OK
    assert out.read_text(encoding="utf-8") == GOLDEN_REWARDS


def test_score_keeps_bad_lines_in_place(settings, tmp_path):
    src = tmp_path / "reqs.jsonl"
    src.write_text(
        '{"v": 1, "query_id": "c1", "kind": "visual_counting", "response_text": "6 muffins", "gold": {"count": 6}}\n'
        "{not json\n"
        "\n"
        '{"v": 1, "query_id": "c2", "kind": "juggling", "response_text": "x", "gold": {"count": 6}}\n',
        encoding="utf-8",
    )
    out = tmp_path / "out.jsonl"
    assert dispatch(["score", "--in", str(src), "--out", str(out)], settings) == EXIT_OK
    lines = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert len(lines) == 3
    assert lines[0] == {"query_id": "c1", "reward": 1.0, "scorer": "counting"}
    assert lines[1]["query_id"] is None and lines[1]["error"]["kind"] == "malformed_json"
    assert "error" in lines[2]


def test_score_unreachable_endpoint(settings, tmp_path, capsys):
    out = tmp_path / "out.jsonl"
    argv = ["score", "--in", str(FIXTURES / "golden_requests.jsonl"), "--out", str(out), "--endpoint", "http://127.0.0.1:1"]
    assert dispatch(argv, settings) == EXIT_FAILURE
    assert capsys.readouterr().err.startswith("error: transport: ")
    assert not out.exists()


def test_missing_input_file(settings, tmp_path, capsys):
    argv = ["score", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "out.jsonl")]
    assert dispatch(argv, settings) == EXIT_FAILURE
    assert capsys.readouterr().err.startswith("error: io: ")


# ── validate-gui ──

def test_validate_gui_clean(settings, tmp_path, capsys):
    src = tmp_path / "traj.jsonl"
    src.write_text('{"action":"wait"}\n', encoding="utf-8")
    assert dispatch(["validate-gui", "--in", str(src), "--screen", "1886x1544"], settings) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"counts": {}, "violations": []}


def test_validate_gui_reports_violations(settings, tmp_path, capsys):
    src = tmp_path / "traj.jsonl"
    src.write_text(
        '{"action":"finished","status":"done"}\n{"action":"click","start_point":[2000,5]}\n',
        encoding="utf-8",
    )
    assert dispatch(["validate-gui", "--in", str(src), "--screen", "1886x1544"], settings) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["counts"] == {"finished-not-last": 1, "out-of-bounds": 1}


@pytest.mark.parametrize("screen", ["0x10", "1886", "axb", "-5x5"])
def test_validate_gui_bad_screen(settings, tmp_path, screen):
    src = tmp_path / "traj.jsonl"
    src.write_text('{"action":"wait"}\n', encoding="utf-8")
    assert dispatch(["validate-gui", "--in", str(src), "--screen", screen], settings) == EXIT_USAGE


# ── gen-tasks ──

def test_gen_tasks_writes_a_loadable_file(settings, tmp_path):
    out = tmp_path / "tasks.jsonl"
    argv = ["gen-tasks", "--kind", "temporal_grounding", "--n", "5", "--seed", "3", "--out", str(out)]
    assert dispatch(argv, settings) == EXIT_OK
    queries = load_queries(out)
    assert len(queries) == 5
    assert {q.kind for q in queries} == {TaskKind.TEMPORAL_GROUNDING}
    first = out.read_text(encoding="utf-8")
    assert dispatch(argv, settings) == EXIT_OK
    assert out.read_text(encoding="utf-8") == first


@pytest.mark.parametrize("extra", [["--kind", "juggling", "--n", "5"], ["--kind", "visual_counting", "--n", "0"]])
def test_gen_tasks_rejects_bad_arguments(settings, tmp_path, extra):
    argv = ["gen-tasks", *extra, "--seed", "0", "--out", str(tmp_path / "t.jsonl")]
    assert dispatch(argv, settings) == EXIT_USAGE


# ── elo ──

def test_elo_writes_json_and_text(settings, tmp_path):
    src = tmp_path / "cmp.jsonl"
    src.write_text(
        '{"a": "m1", "b": "m2", "winner": "a"}\n' * 9 + '{"a": "m1", "b": "m2", "winner": "b"}\n',
        encoding="utf-8",
    )
    out = tmp_path / "ratings.json"
    assert dispatch(["elo", "--in", str(src), "--out", str(out)], settings) == EXIT_OK
    table = json.loads(out.read_text(encoding="utf-8"))
    assert table["units"] == "elo"
    ratings = {row["model"]: row["rating"] for row in table["ratings"]}
    assert ratings["m1"] - ratings["m2"] == pytest.approx(381.7, abs=1.0)
    assert out.with_suffix(".txt").read_text(encoding="utf-8").startswith("rank")


def test_elo_style_control(settings, tmp_path):
    src = tmp_path / "cmp.jsonl"
    src.write_text(
        '{"a": "m1", "b": "m2", "winner": "a", "cov": {"length": 2.0}}\n'
        '{"a": "m2", "b": "m1", "winner": "a", "cov": {"length": 1.0}}\n'
        '{"a": "m1", "b": "m2", "winner": "b", "cov": {"length": -1.0}}\n'
        '{"a": "m1", "b": "m2", "winner": "a", "cov": {"length": -2.0}}\n',
        encoding="utf-8",
    )
    out = tmp_path / "ratings.json"
    assert dispatch(["elo", "--in", str(src), "--out", str(out), "--style-control"], settings) == EXIT_OK
    assert "length" in json.loads(out.read_text(encoding="utf-8"))["coefficients"]


def test_elo_bad_record(settings, tmp_path, capsys):
    src = tmp_path / "cmp.jsonl"
    src.write_text('{"a": "m1", "b": "m2", "winner": "a"}\n{"a": "m1", "b": "m2", "winner": "draw"}\n', encoding="utf-8")
    assert dispatch(["elo", "--in", str(src), "--out", str(tmp_path / "r.json")], settings) == EXIT_FAILURE
    assert capsys.readouterr().err.startswith("error: dataset: line 2: ")


# ── train-toy and compare ──

TOY_CONFIG = {
    "mixture": {"visual_counting": 1.0, "gui_grounding": 1.0},
    "tasks_per_kind": 4,
    "batch_queries": 4,
    "group_size": 4,
    "steps": 10,
    "eval_every": 2,
    "eval_samples": 8,
    "curation_rollouts": 4,
}


def test_train_toy_writes_log_and_summary(settings, tmp_path):
    config = tmp_path / "toy.json"
    config.write_text(json.dumps(TOY_CONFIG), encoding="utf-8")
    log = tmp_path / "train.jsonl"
    argv = ["train-toy", "--config", str(config), "--log", str(log), "--steps", "3", "--seed", "4"]
    assert dispatch(argv, settings) == EXIT_OK
    records = [json.loads(line) for line in log.read_text(encoding="utf-8").splitlines()]
    assert [r["step"] for r in records] == [1, 2, 3]
    assert "wall_clock_s" not in records[0]
    summary = json.loads((tmp_path / "train.summary.json").read_text(encoding="utf-8"))
    assert summary["steps_run"] == 3
    assert summary["config"]["seed"] == 4


def test_train_toy_rejects_bad_config(settings, tmp_path, capsys):
    config = tmp_path / "bad.conf"
    config.write_text("group_size = 1\n", encoding="utf-8")
    argv = ["train-toy", "--config", str(config), "--log", str(tmp_path / "t.jsonl")]
    assert dispatch(argv, settings) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error: config: ")


def test_compare_needs_five_seeds(settings, tmp_path):
    config = tmp_path / "toy.json"
    config.write_text(json.dumps(TOY_CONFIG), encoding="utf-8")
    argv = ["compare", "--config", str(config), "--seeds", "3", "--report", str(tmp_path / "r.json")]
    assert dispatch(argv, settings) == EXIT_USAGE


def test_compare_writes_a_report(settings, tmp_path):
    config = tmp_path / "toy.json"
    config.write_text(json.dumps(TOY_CONFIG), encoding="utf-8")
    report_path = tmp_path / "report.json"
    argv = ["compare", "--config", str(config), "--seeds", "5", "--seed", "10", "--steps", "4", "--report", str(report_path)]
    assert dispatch(argv, settings) == EXIT_OK
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["seeds"] == [10, 11, 12, 13, 14]
    assert report["eval_steps"] == [0, 2, 4]
    assert set(report["arms"]) == {"on_policy", "vanilla"}
    assert set(report["criteria"]) == {"on_policy_final_ge_vanilla", "vanilla_plateau_seeds", "reproduced"}
