"""Element extraction: fences, verbatim checks, strategy fallback chain."""

from __future__ import annotations

import pytest

from meeseeks.extraction import (
    ExtractionStrategy,
    PromptKind,
    RegenerateParseError,
    choose_strategy,
    extract_part,
    is_verbatim,
    parse_regenerate_reply,
    part_is_multi_element,
    render_extraction_prompt,
    strip_code_fences,
)
from meeseeks.sandbox import SandboxPolicy

from conftest import StubGateway, make_instance

COUNTING_PROGRAM = """```python
def extract_info_list(model_response):
    return [line.strip() for line in model_response.splitlines() if line.strip()]
```"""

BROKEN_PROGRAM = """```python
def extract_info_list(model_response)
    return []
```"""

INVENTING_PROGRAM = """```python
def extract_info_list(model_response):
    return ["this text is nowhere in the response"]
```"""


# --- text utilities ---------------------------------------------------------


@pytest.mark.parametrize(
    "raw,stripped",
    [
        ("```python\nx = 1\n```", "x = 1"),
        ("```\nplain\n```", "plain"),
        ("```json\n[1]\n```", "[1]"),
        ("no fence at all", "no fence at all"),
        ("```python\nmulti\nline\n```  \n", "multi\nline"),
        ("prefix ```python\nx\n```", "prefix ```python\nx\n```"),  # not a pure block
    ],
)
def test_strip_code_fences(raw, stripped):
    assert strip_code_fences(raw) == stripped


@pytest.mark.parametrize(
    "element,response,ok",
    [
        ("hello world", "Well, hello   world!", True),
        ("hello world", "Well, hello\n  world!", True),  # whitespace squashed
        ("你好 世界", "你好 \n 世界！", True),
        ("你好 世界", "你好世界", False),  # squashing keeps one space, never zero
        ("absent", "present only", False),
        ("", "anything", True),  # empty string is vacuously contained
        ("CASE", "case", False),  # containment is case-sensitive
    ],
)
def test_is_verbatim(element, response, ok):
    assert is_verbatim(element, response) is ok


def test_prompt_rendering_is_literal_replacement():
    text = render_extraction_prompt(
        PromptKind.CODING_SINGLE,
        model_response="body with {braces} inside",
        instruction="grab the {title}",
    )
    assert "body with {braces} inside" in text
    assert "grab the {title}" in text
    assert "{model_response}" not in text and "{instruction}" not in text


# --- regenerate reply parsing -----------------------------------------------


def test_parse_regenerate_list():
    response = "标题：春日\n正文：花开了"
    elements, verified = parse_regenerate_reply('["春日", "花开了"]', response)
    assert elements == ["春日", "花开了"]
    assert verified


def test_parse_regenerate_flags_invented_content():
    elements, verified = parse_regenerate_reply('["春日", "编造的内容"]', "标题：春日")
    assert elements == ["春日", "编造的内容"]
    assert not verified


def test_parse_regenerate_all_sentinel():
    elements, verified = parse_regenerate_reply("ALL", "full text here")
    assert elements == ["full text here"]
    assert verified


def test_parse_regenerate_fenced_and_padded():
    reply = '```json\n["a", "b"]\n```'
    elements, verified = parse_regenerate_reply(reply, "a ... b")
    assert elements == ["a", "b"] and verified

    elements, _ = parse_regenerate_reply('Here you go: ["a"] thanks', "a")
    assert elements == ["a"]


@pytest.mark.parametrize(
    "reply",
    [
        "no list here",
        "[1, 2, 3]",  # not strings
        '["unterminated',
        '{"a": 1}',
    ],
)
def test_parse_regenerate_rejects_garbage(reply):
    with pytest.raises(RegenerateParseError):
        parse_regenerate_reply(reply, "whatever")


def test_parse_regenerate_empty_list_is_legal():
    # The evaluator may honestly report that the part is absent; downstream
    # rules then fail on zero elements with real feedback.
    assert parse_regenerate_reply("[]", "whatever") == ([], True)


# --- strategy selection -----------------------------------------------------


def test_choose_strategy_follows_coding_flag():
    coding = make_instance([{"question": "a?", "rule": None}], coding_flag=True)
    plain = make_instance([{"question": "a?", "rule": None}])
    assert choose_strategy(coding) is ExtractionStrategy.CODING
    assert choose_strategy(plain) is ExtractionStrategy.REGENERATE


def test_part_multiplicity_detection():
    inst = make_instance(
        [
            {"question": "count?", "rule": "item_count:[3,3]", "corresponding_part": "list"},
            {"question": "len?", "rule": "each_length:[5,10]", "corresponding_part": "title"},
        ],
        parts={"list": "提取列表", "title": "提取标题"},
    )
    assert part_is_multi_element(inst, "list")
    assert not part_is_multi_element(inst, "title")


# --- the fallback chain -----------------------------------------------------


def _coding_instance():
    return make_instance(
        [{"question": "lines?", "rule": "item_count:[2,2]", "corresponding_part": "lines"}],
        parts={"lines": "extract each line"},
        coding_flag=True,
    )


def test_coding_success(endpoint):
    gateway = StubGateway(lambda ep, msgs: COUNTING_PROGRAM)
    result = extract_part(
        _coding_instance(), "lines", "alpha\nbeta", gateway,
        coder=endpoint, regenerator=endpoint,
    )
    assert result.strategy is ExtractionStrategy.CODING
    assert result.elements == ("alpha", "beta")
    assert result.verified
    assert result.token_cost > 0
    assert len(gateway.calls) == 1


def test_coding_repair_prompt_carries_the_error(endpoint):
    replies = iter([BROKEN_PROGRAM, COUNTING_PROGRAM])
    gateway = StubGateway(lambda ep, msgs: next(replies))
    result = extract_part(
        _coding_instance(), "lines", "alpha\nbeta", gateway,
        coder=endpoint, regenerator=endpoint,
    )
    assert result.strategy is ExtractionStrategy.CODING
    assert result.elements == ("alpha", "beta")
    assert any("coding attempt 1" in d for d in result.diagnostics)
    # The second prompt must contain the first failure so the coder can react.
    second_prompt = gateway.calls[1][1]
    assert "SyntaxError" in second_prompt
    assert "previous reply failed" in second_prompt


def test_coding_exhaustion_falls_back_to_regenerate(endpoint):
    script = {"coding": BROKEN_PROGRAM, "regen": '["alpha", "beta"]'}

    def reply(ep, msgs):
        prompt = msgs[-1]["content"]
        return script["coding"] if "Python" in prompt else script["regen"]

    gateway = StubGateway(reply)
    result = extract_part(
        _coding_instance(), "lines", "alpha ... beta", gateway,
        coder=endpoint, regenerator=endpoint,
    )
    assert result.strategy is ExtractionStrategy.REGENERATE
    assert result.elements == ("alpha", "beta")
    # 1 + 2 repairs on the coding side, then one regenerate call.
    assert len(gateway.calls) == 4
    assert any("exhausted its repair rounds" in d for d in result.diagnostics)


def test_unverified_coding_output_is_still_returned(endpoint):
    gateway = StubGateway(lambda ep, msgs: INVENTING_PROGRAM)
    result = extract_part(
        _coding_instance(), "lines", "alpha\nbeta", gateway,
        coder=endpoint, regenerator=endpoint,
    )
    assert result.strategy is ExtractionStrategy.CODING
    assert not result.verified
    assert any("verbatim" in d for d in result.diagnostics)


def test_regenerate_repair_then_success(endpoint):
    inst = make_instance(
        [{"question": "title?", "rule": "each_length:[1,50]", "corresponding_part": "title"}],
        parts={"title": "copy the title"},
    )
    replies = iter(["mumble mumble", '["The Title"]'])
    gateway = StubGateway(lambda ep, msgs: next(replies))
    result = extract_part(
        inst, "title", "Title: The Title", gateway,
        coder=endpoint, regenerator=endpoint,
    )
    assert result.strategy is ExtractionStrategy.REGENERATE
    assert result.elements == ("The Title",)
    assert any("regenerate attempt 1" in d for d in result.diagnostics)
    assert "previous reply failed" in gateway.calls[1][1]


def test_everything_fails_judges_the_whole_response(endpoint):
    inst = make_instance(
        [{"question": "title?", "rule": None, "corresponding_part": "title"}],
        parts={"title": "copy the title"},
    )
    gateway = StubGateway(lambda ep, msgs: "I refuse to cooperate")
    result = extract_part(
        inst, "title", "the whole response", gateway,
        coder=endpoint, regenerator=endpoint,
    )
    assert result.strategy is ExtractionStrategy.WHOLE_RESPONSE_FALLBACK
    assert result.elements == ("the whole response",)
    assert not result.verified
    assert len(gateway.calls) == 3  # 1 + max_repair_rounds regenerate attempts
    assert any("all extraction strategies failed" in d for d in result.diagnostics)


def test_repair_rounds_configurable(endpoint):
    inst = make_instance(
        [{"question": "t?", "rule": None, "corresponding_part": "t"}],
        parts={"t": "copy"},
    )
    gateway = StubGateway(lambda ep, msgs: "garbage")
    result = extract_part(
        inst, "t", "resp", gateway,
        coder=endpoint, regenerator=endpoint, max_repair_rounds=0,
    )
    assert len(gateway.calls) == 1
    assert result.strategy is ExtractionStrategy.WHOLE_RESPONSE_FALLBACK


def test_token_cost_accumulates_across_attempts(endpoint):
    inst = make_instance(
        [{"question": "t?", "rule": None, "corresponding_part": "t"}],
        parts={"t": "copy"},
    )
    gateway = StubGateway(lambda ep, msgs: "garbage")
    result = extract_part(
        inst, "t", "resp", gateway, coder=endpoint, regenerator=endpoint,
    )
    # Three failed regenerate calls still cost what the evaluator charged.
    per_call = [c for c in gateway.calls]
    assert len(per_call) == 3
    assert result.token_cost > 0


def test_unknown_part_is_a_key_error(endpoint):
    inst = make_instance([{"question": "a?", "rule": None}])
    with pytest.raises(KeyError, match="ghost"):
        extract_part(inst, "ghost", "resp", StubGateway(lambda e, m: "x"),
                     coder=endpoint, regenerator=endpoint)


def test_sandbox_policy_reaches_the_program(endpoint):
    slow = """```python
def extract_info_list(model_response):
    while True:
        pass
```"""
    script = {"used_regen": False}

    def reply(ep, msgs):
        if "Python" in msgs[-1]["content"]:
            return slow
        script["used_regen"] = True
        return "ALL"

    result = extract_part(
        _coding_instance(), "lines", "text", StubGateway(reply),
        coder=endpoint, regenerator=endpoint,
        policy=SandboxPolicy(timeout_seconds=0.5), max_repair_rounds=0,
    )
    assert script["used_regen"]
    assert any("timeout" in d for d in result.diagnostics)
