"""Scores, capability roll-ups, cross-model analytics, report schema."""

from __future__ import annotations

import json
import math

import jsonschema
import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from meeseeks.judging import Judgment, JudgmentSource
from meeseeks.orchestrator import SessionStatus, Transcript, TurnRecord
from meeseeks.reporting import (
    DEFAULT_WINDOWS,
    UNTAGGED,
    CapabilityNode,
    build_reports,
    build_round_report,
    cross_model_analysis,
    load_utility_reference,
    parse_report,
    pearson_correlation,
    render_report_json,
    spearman_correlation,
    utility_rate_series,
    validate_report,
    window_average_series,
    write_report,
)
from meeseeks.taxonomy import DIMENSIONS

from conftest import make_instance


def _judgments(outcomes: dict[int, bool]) -> dict[int, Judgment]:
    return {
        pid: Judgment(pid, ok, JudgmentSource.RULE, "", "" if ok else "fb")
        for pid, ok in outcomes.items()
    }


def _turn(index: int, outcomes: dict[int, bool]) -> TurnRecord:
    usable = all(outcomes.values())
    return TurnRecord(
        turn_index=index,
        response=f"response {index}",
        extractions={},
        judgments=_judgments(outcomes),
        usable=usable,
        feedback=None if usable else "try again",
        latency_ms=1.0,
        target_tokens=10,
        evaluator_tokens=5,
    )


def _fixture_world():
    """Four instances + three transcripts with every branch exercised.

    Hand-computed expectations (round 1):
      a: tags Theme[T], Intent[T], AccurateWords[F]  -> 2/3
      b: untagged only, all passed                   -> 1.0
      c: JSON[T,T], ElementNumber[F]                 -> 0.5
      d: no transcript, everything fails             -> 0.0
    macro = (2/3 + 1 + 1/2 + 0)/4 = 13/24
    micro = (1+1+0 + 1 + 1+0 + 0)/7 = 4/7
    utility: b passes at turn 1, c at turn 2 -> 1/4 then 2/4
    """
    a = make_instance(
        [
            {"question": "a0?", "rule": None, "能力项": "主题约束、任务意图理解"},
            {"question": "a1?", "rule": None, "能力项": "精确"},
            {"question": "a2?", "rule": None},
        ],
        instance_id="r-a",
    )
    b = make_instance([{"question": "b0?", "rule": None}], instance_id="r-b")
    c = make_instance(
        [
            {"question": "c0?", "rule": None, "能力项": "JSON格式"},
            {"question": "c1?", "rule": None, "能力项": "JSON格式"},
            {"question": "c2?", "rule": None, "能力项": "单元数量合规"},
        ],
        instance_id="r-c",
    )
    d = make_instance(
        [
            {"question": "d0?", "rule": None, "能力项": "关键词"},
            {"question": "d1?", "rule": None},
        ],
        instance_id="r-d",
    )
    transcripts = {
        "r-a": Transcript("r-a", "ep", SessionStatus.EXHAUSTED,
                          [_turn(1, {0: True, 1: False, 2: True})]),
        "r-b": Transcript("r-b", "ep", SessionStatus.PASSED, [_turn(1, {0: True})]),
        "r-c": Transcript("r-c", "ep", SessionStatus.PASSED,
                          [_turn(1, {0: True, 1: True, 2: False}),
                           _turn(2, {0: True, 1: True, 2: True})]),
        # r-d intentionally absent
    }
    return [a, b, c, d], transcripts


# --- capability nodes -------------------------------------------------------


def test_capability_node_counting():
    node = CapabilityNode()
    node.add(True)
    node.add(True)
    node.add(False)
    assert (node.correct, node.wrong, node.total) == (2, 1, 3)
    assert node.percentage == pytest.approx(2 / 3)


def test_empty_node_percentage_is_zero():
    assert CapabilityNode().percentage == 0.0


def test_node_dict_round_trip_and_key_order():
    node = CapabilityNode()
    node.add(True)
    node.child("inner").add(False)
    d = node.to_dict()
    assert list(d) == ["percentage", "correct", "wrong", "total", "children"]
    assert list(d["children"]["inner"]) == ["percentage", "correct", "wrong", "total", "children"]
    back = CapabilityNode.from_dict(d)
    assert back.to_dict() == d


# --- round reports ----------------------------------------------------------


def test_round_report_scores_match_hand_computation():
    instances, transcripts = _fixture_world()
    r1 = build_round_report(instances, transcripts, 1)
    assert r1.meeseeks_score == pytest.approx(13 / 24)
    assert r1.utility_score == pytest.approx(1 / 4)
    assert r1.total_items == 4

    r2 = build_round_report(instances, transcripts, 2)
    assert r2.meeseeks_score == pytest.approx((2 / 3 + 1 + 1 + 0) / 4)
    assert r2.utility_score == pytest.approx(2 / 4)


def test_micro_pooling_differs_from_macro():
    instances, transcripts = _fixture_world()
    micro = build_round_report(instances, transcripts, 1, micro=True)
    assert micro.meeseeks_score == pytest.approx(4 / 7)


def test_capability_tally_counts_every_level():
    instances, transcripts = _fixture_world()
    stats = build_round_report(instances, transcripts, 1).capability_stats

    ir = stats["Intent Recognition"]
    assert (ir.correct, ir.wrong) == (1, 0)

    gcv = stats["Granular Content Validation"]
    assert (gcv.correct, gcv.wrong) == (1, 2)
    assert (gcv.children["Theme requirement"].correct,
            gcv.children["Theme requirement"].wrong) == (1, 0)
    wc = gcv.children["Word count requirement"]
    assert (wc.correct, wc.wrong) == (0, 1)
    assert wc.children["Generate at accurate word number"].wrong == 1
    other = gcv.children["Other granular requirements"]
    assert other.children["Generate with certain keywords"].wrong == 1

    osv = stats["Output Structure Validation"]
    assert (osv.correct, osv.wrong) == (2, 1)
    fmt = osv.children["Output format requirement"]
    assert fmt.children["Generate in JSON format"].correct == 2
    assert osv.children["Element number requirement"].wrong == 1

    untagged = stats[UNTAGGED]
    assert (untagged.correct, untagged.wrong) == (2, 1)


def test_report_dict_key_order_is_contractual():
    instances, transcripts = _fixture_world()
    d = build_round_report(instances, transcripts, 1).to_dict()
    assert list(d) == ["round", "meeseeks_score", "utility_score", "capability_stats", "total_items"]
    assert list(d["capability_stats"]) == list(DIMENSIONS) + [UNTAGGED]


def test_children_render_in_taxonomy_order():
    instances, transcripts = _fixture_world()
    d = build_round_report(instances, transcripts, 1).to_dict()
    gcv_children = list(d["capability_stats"]["Granular Content Validation"]["children"])
    assert gcv_children == ["Theme requirement", "Word count requirement", "Other granular requirements"]


def test_missing_transcript_counts_as_all_failed():
    instances, transcripts = _fixture_world()
    with_d = build_round_report(instances, transcripts, 1)
    kw = with_d.capability_stats["Granular Content Validation"].children[
        "Other granular requirements"].children["Generate with certain keywords"]
    assert (kw.correct, kw.wrong) == (0, 1)


def test_denominators_are_stable_across_rounds():
    instances, transcripts = _fixture_world()
    totals = set()
    for r in (1, 2, 3):
        report = build_round_report(instances, transcripts, r)
        totals.add(report.total_items)
        tally = sum(
            node.total for node in report.capability_stats.values()
        )
        # each requirement lands in one root per tag (untagged counts once)
        expected = sum(
            max(1, len(sq.capability_tags))
            for i in instances
            for sq in i.sub_questions
        )
        assert tally == expected
    assert totals == {4}


def test_round_must_be_positive():
    instances, transcripts = _fixture_world()
    with pytest.raises(ValueError):
        build_round_report(instances, transcripts, 0)


def test_build_reports_covers_every_round():
    instances, transcripts = _fixture_world()
    reports = build_reports(instances, transcripts, 4)
    assert [r.round for r in reports] == [1, 2, 3, 4]
    # Frozen sessions keep their last judgments: rounds 2..4 identical.
    assert reports[1].meeseeks_score == reports[3].meeseeks_score


# --- utility series ---------------------------------------------------------


def test_utility_series_cumulative_with_explicit_total():
    _, transcripts = _fixture_world()
    assert utility_rate_series(transcripts, 3, total=4) == [0.25, 0.5, 0.5]


def test_utility_series_default_denominator():
    _, transcripts = _fixture_world()
    series = utility_rate_series(transcripts, 2)
    assert series == [pytest.approx(1 / 3), pytest.approx(2 / 3)]


def test_utility_series_empty():
    assert utility_rate_series({}, 3) == [0.0, 0.0, 0.0]


@settings(max_examples=100, deadline=None)
@given(
    pass_turns=st.lists(st.one_of(st.none(), st.integers(1, 10)), min_size=1, max_size=30),
)
def test_utility_series_is_monotone_in_unit_interval(pass_turns):
    transcripts = []
    for i, turn in enumerate(pass_turns):
        if turn is None:
            transcripts.append(
                Transcript(f"i{i}", "ep", SessionStatus.EXHAUSTED,
                           [_turn(1, {0: False})]))
        else:
            turns = [_turn(t, {0: False}) for t in range(1, turn)] + [_turn(turn, {0: True})]
            transcripts.append(Transcript(f"i{i}", "ep", SessionStatus.PASSED, turns))
    series = utility_rate_series(transcripts, 10)
    assert all(0.0 <= v <= 1.0 for v in series)
    assert all(a <= b for a, b in zip(series, series[1:]))
    expected_final = sum(1 for t in pass_turns if t is not None) / len(pass_turns)
    assert series[-1] == pytest.approx(expected_final)


# --- windows ----------------------------------------------------------------


def test_window_average_series():
    series = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    assert window_average_series(series, [(1, 5), (6, 6)]) == [pytest.approx(0.3), 0.6]


def test_default_windows_need_twenty_rounds():
    with pytest.raises(ValueError, match="does not fit"):
        window_average_series([0.5] * 10)
    assert window_average_series([0.5] * 20) == [0.5, 0.5, 0.5, 0.5]
    assert DEFAULT_WINDOWS == ((1, 5), (6, 10), (11, 15), (16, 20))


# --- correlations -----------------------------------------------------------


def test_pearson_and_spearman_basics():
    assert pearson_correlation([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert spearman_correlation([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
    assert spearman_correlation([1, 2, 3], [9, 5, 1]) == pytest.approx(-1.0)
    assert math.isnan(pearson_correlation([1, 1, 1], [1, 2, 3]))
    assert math.isnan(spearman_correlation([2, 2, 2], [1, 2, 3]))


def test_correlation_input_validation():
    with pytest.raises(ValueError):
        pearson_correlation([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman_correlation([1], [2])


@pytest.mark.filterwarnings("ignore::scipy.stats.ConstantInputWarning")
@settings(max_examples=100, deadline=None)
@given(
    data=st.lists(
        st.tuples(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            st.floats(min_value=-100, max_value=100, allow_nan=False),
        ),
        min_size=3,
        max_size=40,
    )
)
def test_correlations_match_scipy(data):
    x = [a for a, _ in data]
    y = [b for _, b in data]
    ours_p = pearson_correlation(x, y)
    ours_s = spearman_correlation(x, y)
    ref_p = scipy.stats.pearsonr(x, y).statistic if len(set(x)) > 1 and len(set(y)) > 1 else float("nan")
    ref_s = scipy.stats.spearmanr(x, y).statistic
    if math.isnan(ours_p):
        assert math.isnan(ref_p) or len(set(x)) == 1 or len(set(y)) == 1
    else:
        assert ours_p == pytest.approx(ref_p, abs=1e-9)
    if math.isnan(ours_s):
        assert math.isnan(ref_s) or len(set(x)) == 1 or len(set(y)) == 1
    else:
        assert ours_s == pytest.approx(ref_s, abs=1e-9)


# --- cross-model analysis ---------------------------------------------------


def _toy_population():
    return {
        "model-a": [0.2, 0.4, 0.5, 0.6, 0.6, 0.7],
        "model-b": [0.3, 0.5, 0.6, 0.6, 0.7, 0.8],
        "model-c": [0.1, 0.1, 0.2, 0.4, 0.5, 0.5],
    }


def test_cross_model_stdev_is_population_flavoured():
    analysis = cross_model_analysis(_toy_population())
    matrix = np.array(list(_toy_population().values()))
    assert analysis.rounds == 6
    assert analysis.models == ("model-a", "model-b", "model-c")
    for got, want in zip(analysis.stdev_by_round, matrix.std(axis=0, ddof=0)):
        assert got == pytest.approx(float(want))


def test_cross_model_round_one_agrees_with_itself():
    analysis = cross_model_analysis(_toy_population())
    assert analysis.pearson_vs_first_round[0] == pytest.approx(1.0)
    assert analysis.spearman_vs_first_round[0] == pytest.approx(1.0)


def test_cross_model_rank_flip_detected():
    flipped = {
        "up": [0.1, 0.9],
        "mid": [0.5, 0.5],
        "down": [0.9, 0.1],
    }
    analysis = cross_model_analysis(flipped)
    assert analysis.spearman_vs_first_round[1] == pytest.approx(-1.0)


def test_cross_model_windows_clip_to_series_length():
    analysis = cross_model_analysis(_toy_population())
    assert analysis.windows == ((1, 5),)  # (6,10) and beyond do not fit 6 rounds
    assert analysis.window_averages["model-a"] == (pytest.approx(0.46),)


def test_cross_model_custom_windows():
    analysis = cross_model_analysis(_toy_population(), windows=[(1, 2), (3, 6)])
    assert analysis.windows == ((1, 2), (3, 6))
    assert analysis.window_averages["model-c"][0] == pytest.approx(0.1)


def test_cross_model_validation():
    with pytest.raises(ValueError, match="at least two models"):
        cross_model_analysis({"only": [0.5]})
    with pytest.raises(ValueError, match="lengths differ"):
        cross_model_analysis({"a": [0.1, 0.2], "b": [0.1]})


# --- schema and serialization -----------------------------------------------


def test_validate_accepts_generated_reports():
    instances, transcripts = _fixture_world()
    for r in (1, 2):
        for micro in (False, True):
            validate_report(build_round_report(instances, transcripts, r, micro=micro).to_dict())


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda d: d.pop("meeseeks_score"),
        lambda d: d.update(meeseeks_score=1.5),
        lambda d: d.update(round=0),
        lambda d: d.update(extra_key=1),
        lambda d: d["capability_stats"]["untagged"].update(correct=-1),
        lambda d: d["capability_stats"]["untagged"].update(bogus=1),
        lambda d: d.update(total_items="four"),
    ],
)
def test_validate_rejects_corrupted_reports(corrupt):
    instances, transcripts = _fixture_world()
    d = build_round_report(instances, transcripts, 1).to_dict()
    d = json.loads(json.dumps(d))  # deep copy
    corrupt(d)
    with pytest.raises(jsonschema.ValidationError):
        validate_report(d)


def test_render_parse_round_trip(tmp_path):
    instances, transcripts = _fixture_world()
    report = build_round_report(instances, transcripts, 1)
    text = render_report_json(report)
    assert text.endswith("\n")
    back = parse_report(text)
    assert back.meeseeks_score == pytest.approx(report.meeseeks_score, abs=1e-12)
    assert back.to_dict() == json.loads(text)

    path = tmp_path / "round_01.json"
    write_report(report, path)
    assert parse_report(path.read_text(encoding="utf-8")).round == 1


def test_parse_report_validates_first():
    with pytest.raises(jsonschema.ValidationError):
        parse_report('{"round": 1}')


# --- the bundled utility reference ------------------------------------------


def test_reference_fixture_is_coherent():
    ref = load_utility_reference()
    models = ref["models"]
    assert len(models) == 17
    assert ref["turns"] == 20
    for name, record in models.items():
        series = record["per_turn"]
        assert len(series) == 20
        assert all(0.0 <= v <= 1.0 for v in series)
        assert all(a <= b for a, b in zip(series, series[1:])), name
        averaged = window_average_series(series)
        for got, want in zip(averaged, record["published_window_averages"]):
            assert abs(got - want) <= 5e-4, (name, got, want)
