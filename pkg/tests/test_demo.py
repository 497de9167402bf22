"""The scripted demo: every pipeline feature on six tiny instances."""

from __future__ import annotations

import json

import pytest
import yaml

from meeseeks.demo import (
    DEMO_MAX_TURNS,
    EXPECTED_OUTCOMES,
    ScriptedGateway,
    bundled_demo_dir,
    check_outcomes,
    demo_dataset,
    demo_endpoints,
    demo_run_config,
    run_demo,
)
from meeseeks.extraction import ExtractionStrategy
from meeseeks.gateway import ReplayGateway, ReplayMode, ReplayStore
from meeseeks.judging import JudgmentSource
from meeseeks.orchestrator import SessionStatus


@pytest.fixture(scope="module")
def scripted_result():
    return run_demo(ScriptedGateway())


def test_expected_outcomes_hold(scripted_result):
    check_outcomes(scripted_result)  # raises on drift
    target, _, _ = demo_endpoints()
    by_id = scripted_result.for_endpoint(target.name)
    assert set(by_id) == set(EXPECTED_OUTCOMES)
    for iid, (status, passed_turn) in EXPECTED_OUTCOMES.items():
        assert by_id[iid].status is status, iid
        assert by_id[iid].passed_turn == passed_turn, iid


def test_statuses_cover_three_terminal_kinds(scripted_result):
    statuses = {t.status for t in scripted_result.transcripts.values()}
    assert statuses == {
        SessionStatus.PASSED,
        SessionStatus.EXHAUSTED,
        SessionStatus.CONTEXT_OVERFLOW,
    }


def test_overflow_happens_before_turn_three(scripted_result):
    target, _, _ = demo_endpoints()
    t = scripted_result.transcripts[(target.name, "demo-zh-overflow")]
    assert len(t.turns) == DEMO_MAX_TURNS - 1
    assert "context budget before turn 3" in t.error


def test_demo_exercises_both_extraction_strategies(scripted_result):
    strategies = {
        extraction.strategy
        for t in scripted_result.transcripts.values()
        for record in t.turns
        for extraction in record.extractions.values()
    }
    assert ExtractionStrategy.CODING in strategies
    assert ExtractionStrategy.REGENERATE in strategies


def test_demo_exercises_all_judgment_sources(scripted_result):
    sources = {
        j.source
        for t in scripted_result.transcripts.values()
        for record in t.turns
        for j in record.judgments.values()
    }
    assert sources == {JudgmentSource.RULE, JudgmentSource.LLM, JudgmentSource.DEPENDENCY}


def test_dependency_propagation_visible_in_the_deps_item(scripted_result):
    target, _, _ = demo_endpoints()
    t = scripted_result.transcripts[(target.name, "demo-zh-deps")]
    first = t.turns[0].judgments
    assert not first[0].passed and first[0].source is JudgmentSource.LLM
    assert first[1].source is JudgmentSource.DEPENDENCY
    assert first[2].source is JudgmentSource.DEPENDENCY
    final = t.turns[-1].judgments
    assert all(j.passed for j in final.values())


def test_chinese_feedback_speaks_chinese(scripted_result):
    target, _, _ = demo_endpoints()
    t = scripted_result.transcripts[(target.name, "demo-zh-comments")]
    feedback = t.turns[0].feedback
    assert feedback is not None
    assert "你上一轮的回复没有满足全部要求" in feedback
    assert "第1条长度为19字，要求在8到12字之间" in feedback


def test_bundled_replay_reproduces_the_run(tmp_path):
    replay_dir = bundled_demo_dir() / "replay"
    assert replay_dir.is_dir()
    gateway = ReplayGateway(ReplayStore(replay_dir), ReplayMode.REPLAY_STRICT)
    result = run_demo(gateway, output_dir=tmp_path)
    check_outcomes(result)
    assert (tmp_path / "transcripts.jsonl").exists()


def test_bundled_config_points_at_bundled_files():
    root = bundled_demo_dir()
    config = yaml.safe_load((root / "config.yaml").read_text(encoding="utf-8"))
    assert config["replay"]["mode"] == "replay_strict"
    assert (root / config["dataset"]).exists()
    assert (root / config["replay"]["dir"]).is_dir()
    assert config["run"]["max_turns"] == DEMO_MAX_TURNS


def test_bundled_dataset_parses_to_the_demo_items():
    root = bundled_demo_dir()
    raw = json.loads((root / "dataset.json").read_text(encoding="utf-8"))
    assert [obj["id"] for obj in raw] == [inst.id for inst in demo_dataset()]


def test_scripted_and_replayed_transcripts_agree(tmp_path):
    scripted = run_demo(ScriptedGateway(), output_dir=tmp_path / "a")
    replayed = run_demo(
        ReplayGateway(ReplayStore(bundled_demo_dir() / "replay"), ReplayMode.REPLAY_STRICT),
        output_dir=tmp_path / "b",
    )
    a = (tmp_path / "a" / "transcripts.jsonl").read_text(encoding="utf-8")
    b = (tmp_path / "b" / "transcripts.jsonl").read_text(encoding="utf-8")
    # Latency and token numbers are scripted, so even the bytes agree.
    assert a == b


def test_demo_run_config_defaults():
    config = demo_run_config()
    assert config.max_turns == DEMO_MAX_TURNS
    assert config.concurrency == 1  # deterministic transcript ordering
    assert config.output_dir is None
