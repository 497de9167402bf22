"""Instance parsing, templates, bucketing and the synthetic corpora."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meeseeks.dataset import (
    CorpusScenario,
    DatasetError,
    Language,
    bucket_word_count,
    bucket_word_count_capability,
    count_sentences,
    detect_language,
    dump_dataset,
    evaluate_placeholder_expressions,
    expand_template,
    generate_formatting_corpus,
    load_dataset,
    parse_dataset,
    parse_instance,
    parse_template,
)
from meeseeks.rules import CountMode, check_rule

from conftest import make_instance


# --- language detection -----------------------------------------------------


@pytest.mark.parametrize(
    "text,lang",
    [
        ("please write a poem", Language.ENGLISH),
        ("请写一首诗", Language.CHINESE),
        ("请写一首 poem", Language.CHINESE),  # ideographs dominate
        ("write a poem 诗", Language.ENGLISH),  # latin dominates
        ("12345 !!!", Language.ENGLISH),  # nothing recognisable: default
    ],
)
def test_detect_language(text, lang):
    assert detect_language(text) == lang


# --- instance validation ----------------------------------------------------


def test_minimal_instance_defaults():
    inst = parse_instance(
        {
            "question": "请写三句话。",
            "sub_questions": [{"question": "是否写了三句话？", "rule": "item_count:[3,3]"}],
        }
    )
    assert inst.language is Language.CHINESE
    assert inst.id.startswith("item-0000-")
    assert inst.sub_questions[0].point_id == 0
    assert not inst.coding_flag


def test_chinese_key_synonyms_accepted():
    inst = parse_instance(
        {
            "question": "写点什么。",
            "sub_questions": [
                {"question": "a?", "rule": None, "被依赖": True, "能力项": "主题约束"},
                {"question": "b?", "rule": None, "dep": [0]},
            ],
        }
    )
    assert inst.sub_questions[0].depended_on
    assert inst.sub_questions[0].capability_tags == (
        ("Granular Content Validation", "Theme requirement"),
    )


def test_tag_string_splits_on_enumeration_comma():
    inst = parse_instance(
        {
            "question": "写点什么。",
            "sub_questions": [{"question": "a?", "rule": None, "能力项": "主题约束、范围"}],
        }
    )
    assert len(inst.sub_questions[0].capability_tags) == 2


def test_depended_on_autofilled_from_graph():
    inst = parse_instance(
        {
            "question": "q",
            "sub_questions": [
                {"question": "a?", "rule": None},
                {"question": "b?", "rule": None, "dep": [0]},
            ],
        }
    )
    assert inst.sub_questions[0].depended_on
    assert not inst.sub_questions[1].depended_on


@pytest.mark.parametrize(
    "mutation,message",
    [
        ({"question": ""}, "question"),
        ({"sub_questions": []}, "sub_questions"),
        ({"coding_flag": "yes"}, "coding_flag"),
        ({"corresponding_parts": {"a": 1}}, "corresponding_parts"),
        ({"language": "klingon"}, "language"),
    ],
)
def test_instance_validation_errors(mutation, message):
    obj = {
        "question": "q",
        "sub_questions": [{"question": "a?", "rule": None}],
    }
    obj.update(mutation)
    with pytest.raises(DatasetError, match=message):
        parse_instance(obj)


def test_rule_nullish_spellings_mean_unjudged():
    for raw in (None, "", "null", "None", "NaN"):
        inst = parse_instance(
            {"question": "q", "sub_questions": [{"question": "a?", "rule": raw}]}
        )
        assert inst.sub_questions[0].rule is None
        assert inst.sub_questions[0].rule_spec is None


def test_bad_rule_label_is_a_dataset_error():
    with pytest.raises(DatasetError, match="unknown rule name"):
        parse_instance(
            {"question": "q", "sub_questions": [{"question": "a?", "rule": "bogus_rule"}]}
        )


def test_dependency_validation():
    with pytest.raises(DatasetError, match="depends on itself"):
        make_instance([{"question": "a?", "rule": None, "dep": [0]}])
    with pytest.raises(DatasetError, match="unknown point_id"):
        make_instance([{"question": "a?", "rule": None, "dep": [7]}])
    with pytest.raises(DatasetError, match="cycle"):
        make_instance(
            [
                {"question": "a?", "rule": None, "dep": [1]},
                {"question": "b?", "rule": None, "dep": [0]},
            ]
        )
    with pytest.raises(DatasetError, match="dense"):
        make_instance([{"point_id": 1, "question": "a?", "rule": None}])


def test_unknown_part_reference_rejected():
    with pytest.raises(DatasetError, match="not found in corresponding_parts"):
        make_instance(
            [{"question": "a?", "rule": "item_count:[1,1]", "corresponding_part": "ghost"}]
        )


def test_dataset_round_trip(tmp_path):
    instances = [
        make_instance([{"question": "a?", "rule": "non_repeat", "能力项": "重复"}], instance_id="x-1"),
        make_instance([{"question": "b?", "rule": None}], instance_id="x-2"),
    ]
    path = tmp_path / "data.json"
    dump_dataset(instances, path)
    loaded = load_dataset(path)
    assert [i.to_dict() for i in loaded] == [i.to_dict() for i in instances]


def test_duplicate_ids_rejected():
    objs = [
        {"id": "same", "question": "q", "sub_questions": [{"question": "a?", "rule": None}]},
        {"id": "same", "question": "q2", "sub_questions": [{"question": "b?", "rule": None}]},
    ]
    with pytest.raises(DatasetError, match="duplicate instance id"):
        parse_dataset(objs)


# --- placeholder arithmetic -------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [
        ("###10*0.9###", "9.0"),
        ("###200*1.1###", "220.0"),
        ("x###3+4###y", "x7.0y"),
        ("###-2###", "-2.0"),
        ("a ###1/4### b", "a 0.2 b"),  # one decimal place, bankers be damned
        ("no placeholders", "no placeholders"),
    ],
)
def test_placeholder_arithmetic(text, expected):
    assert evaluate_placeholder_expressions(text) == expected


@pytest.mark.parametrize(
    "text",
    [
        "###__import__('os')###",
        "###open('x')###",
        "###unbound_name###",
        "###1/0###",
        "######",
    ],
)
def test_placeholder_bad_expressions_pass_through(text, caplog):
    assert evaluate_placeholder_expressions(text) == text


# --- word-count bucketing ---------------------------------------------------


@pytest.mark.parametrize(
    "n,bucket",
    [
        (0, "0~10字"),
        (7, "0~10字"),
        (9.9, "0~10字"),
        (10, "10~50字"),
        (49, "10~50字"),
        (50, "50~200字"),
        (199, "50~200字"),
        (200, "200字以上"),
        (10_000, "200字以上"),
    ],
)
def test_bucket_word_count(n, bucket):
    assert bucket_word_count(n) == bucket


def test_bucket_word_count_negative_is_none():
    assert bucket_word_count(-1) is None


def test_bucket_capability_tags():
    assert bucket_word_count_capability("7字") == "0~10字"
    assert bucket_word_count_capability("200字") == "200字以上"
    assert bucket_word_count_capability("范围") == "范围"  # not a count tag
    assert bucket_word_count_capability("大约字") == "大约字"  # unparsable: unchanged
    assert bucket_word_count_capability("-5字") == "-5字"  # negative: unchanged


# --- template expansion -----------------------------------------------------


def _template_raw():
    return {
        "parameters": {"names": ["字数"], "values": [[10], [200]]},
        "instances": [
            {
                "category": "t",
                "question": "写###字数###字。",
                "corresponding_parts": {"正文": "提取正文"},
                "sub_questions": [
                    {
                        "question": "字数是否约为###字数###字？",
                        "rule": "each_length:[###字数*0.9###,###字数*1.1###]",
                        "corresponding_part": "正文",
                        "能力项": "###字数###字、范围",
                    }
                ],
            }
        ],
    }


def test_template_expansion_substitutes_and_buckets():
    instances = expand_template(parse_template(_template_raw()))
    assert len(instances) == 2
    first, second = instances
    assert first.question == "写10字。"
    assert first.sub_questions[0].rule == "each_length:[9.0,11.0]"
    assert ("Granular Content Validation", "Word count requirement", "Generate in 10~50 words") in first.sub_questions[0].capability_tags
    assert second.sub_questions[0].rule == "each_length:[180.0,220.0]"
    assert ("Granular Content Validation", "Word count requirement", "Generate in above 200 words") in second.sub_questions[0].capability_tags
    # Every expansion gets a distinct derived id.
    assert first.id != second.id


@pytest.mark.parametrize(
    "mutation,message",
    [
        ({"parameters": None}, "parameters"),
        ({"parameters": {"names": [], "values": [[1]]}}, "names"),
        ({"parameters": {"names": ["a", "a"], "values": [[1, 2]]}}, "duplicates"),
        ({"parameters": {"names": ["a"], "values": []}}, "values"),
        ({"parameters": {"names": ["a"], "values": [[1, 2]]}}, "bind"),
        ({"instances": []}, "instances"),
    ],
)
def test_template_validation(mutation, message):
    raw = _template_raw()
    raw.update(mutation)
    with pytest.raises(DatasetError, match=message):
        parse_template(raw)


# --- synthetic corpora ------------------------------------------------------


def test_sentence_counter():
    assert count_sentences("") == 0
    assert count_sentences("One. Two! Three?") == 3
    assert count_sentences("第一句。第二句！") == 2
    assert count_sentences("no terminator") == 1


def test_long_single_corpus_shape():
    items = generate_formatting_corpus(CorpusScenario.LONG_SINGLE)
    assert len(items) == 1002  # 501 parameterizations x (one pass, one fail)
    labels = [item.label for item in items]
    assert labels.count(True) == labels.count(False) == 501
    # Same parameterization shares an instance; labels alternate pass/fail.
    assert items[0].instance.id == items[1].instance.id == "fmt-long-000"
    assert items[0].label and not items[1].label
    assert items[2].instance.id == "fmt-long-001"
    assert all(item.instance.coding_flag for item in items)


def test_long_single_labels_match_rule_oracle():
    items = generate_formatting_corpus(CorpusScenario.LONG_SINGLE)
    for item in items[:40] + items[-40:]:
        sq = item.instance.sub_questions[0]
        # The scripted responses put the continuation between markers; the
        # ground-truth label must agree with the rule applied to that body.
        body = item.response.split("[CONTINUATION]\n")[1].split("\n[END]")[0]
        verdict = check_rule(sq.rule_spec, [body], CountMode.ENGLISH_WORDS)
        assert verdict.passed is item.label


def test_multi_element_corpus_shape():
    items = generate_formatting_corpus(CorpusScenario.MULTI_ELEMENT)
    assert len(items) == 100  # 50 parameterizations x 2
    assert {item.instance.language for item in items} == {Language.CHINESE}
    assert not any(item.instance.coding_flag for item in items)
    chars = sorted({int(item.instance.id.split("-")[-1]) for item in items})
    assert chars[0] == 50 and chars[-1] == 4950 and len(chars) == 50


def test_multi_element_labels_match_rule_oracle():
    items = generate_formatting_corpus(CorpusScenario.MULTI_ELEMENT)
    for item in items[:20]:
        lines = item.response.splitlines()[1:-1]
        elements = [line.split(". ", 1)[1] for line in lines]
        ok = True
        for sq in item.instance.sub_questions:
            verdict = check_rule(sq.rule_spec, elements, CountMode.CHINESE_CHARS, "chinese")
            ok = ok and verdict.passed
        assert ok is item.label


# --- property: bucketing is a total, idempotent classification --------------


@settings(max_examples=200, deadline=None)
@given(n=st.floats(min_value=0, max_value=1e6, allow_nan=False))
def test_bucket_total_and_stable(n):
    bucket = bucket_word_count(n)
    assert bucket in {"0~10字", "10~50字", "50~200字", "200字以上"}
    assert bucket_word_count_capability(bucket) == bucket  # already a bucket


@settings(max_examples=200, deadline=None)
@given(n=st.integers(min_value=0, max_value=10**6))
def test_bucket_tag_matches_numeric_bucket(n):
    assert bucket_word_count_capability(f"{n}字") == bucket_word_count(n)
