"""Per-requirement judging and feedback synthesis.

Every sub-question is decided one of two ways:

* it carries a rule label — the parsed rule runs against the extracted
  elements, deterministically;
* its rule is null — an evaluator model is asked, with a fixed prompt
  that demands an ``Analysis: ... / Judgment: Yes|No`` shape, and the
  *last* Judgment line of the reply is parsed.

Afterwards dependency propagation forces every requirement whose
prerequisite failed to count as failed too (a word count measured on the
wrong kind of content is meaningless), and the failed requirements are
folded into one feedback message for the next turn.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping

from .dataset import DataInstance, Language, SubQuestion
from .extraction import ExtractionResult, prompt_text
from .gateway import ChatGateway, Endpoint
from .rules import check_rule


class JudgmentParseError(ValueError):
    """The evaluator reply contains no usable Judgment line."""


class JudgmentSource(str, Enum):
    RULE = "rule"
    LLM = "llm"
    DEPENDENCY = "dependency"


@dataclass(frozen=True)
class Judgment:
    point_id: int
    passed: bool
    source: JudgmentSource
    explanation: str  # why the verdict is what it is, with measured quantities
    feedback: str  # empty iff passed; what to tell the model to fix
    token_cost: int = 0  # evaluator tokens spent reaching this judgment

    def to_dict(self) -> dict:
        return {
            "point_id": self.point_id,
            "passed": self.passed,
            "source": self.source.value,
            "explanation": self.explanation,
            "feedback": self.feedback,
            "token_cost": self.token_cost,
        }

    @staticmethod
    def from_dict(obj: Mapping) -> "Judgment":
        return Judgment(
            point_id=obj["point_id"],
            passed=obj["passed"],
            source=JudgmentSource(obj["source"]),
            explanation=obj["explanation"],
            feedback=obj["feedback"],
            token_cost=obj.get("token_cost", 0),
        )


_JUDGMENT_LINE = re.compile(
    r"^\s*[*#>\s]*judgment\s*[:：]\s*(?P<verdict>.+?)\s*$",
    re.IGNORECASE | re.MULTILINE,
)
_ANALYSIS_MARK = re.compile(r"analysis\s*[:：]", re.IGNORECASE)
_VERDICT_WORD = re.compile(r"^(yes|no)(?![a-z/])", re.IGNORECASE)


def parse_judgment_reply(reply: str) -> tuple[bool, str]:
    """Extract (verdict, analysis) from an evaluator reply.

    Only the last ``Judgment:`` line counts — evaluators habitually quote
    the requested format before answering.  An echoed ``Judgment: Yes/No``
    is not a verdict and raises.
    """
    matches = list(_JUDGMENT_LINE.finditer(reply))
    if not matches:
        raise JudgmentParseError("no 'Judgment:' line found in evaluator reply")
    last = matches[-1]
    verdict_text = last.group("verdict").strip().strip("*_` .。!！")
    m = _VERDICT_WORD.match(verdict_text)
    if not m:
        raise JudgmentParseError(f"unrecognized judgment verdict: {verdict_text!r}")
    passed = m.group(1).lower() == "yes"

    analysis_starts = [a.end() for a in _ANALYSIS_MARK.finditer(reply, 0, last.start())]
    if analysis_starts:
        analysis = reply[analysis_starts[-1] : last.start()].strip()
    else:
        analysis = reply[: last.start()].strip()
    return passed, analysis


def render_evaluate_prompt(instance_question: str, response: str, sub_question: str) -> str:
    return (
        prompt_text("evaluate")
        .replace("{input}", instance_question)
        .replace("{output}", response)
        .replace("{question}", sub_question)
    )


_RETRY_NOTE = (
    "\n\nYour previous reply could not be parsed. Remember to end with a line "
    'of the exact form "Judgment: Yes" or "Judgment: No".'
)


def _unverifiable_feedback(sq: SubQuestion, language: Language) -> str:
    if language is Language.CHINESE:
        return f"该要求未能自动判定，请确保你的回复明确满足：{sq.question}"
    return (
        "this requirement could not be verified automatically; please make sure "
        f"your response clearly satisfies it: {sq.question}"
    )


def judge_sub_question(
    instance: DataInstance,
    sq: SubQuestion,
    response: str,
    extraction: ExtractionResult | None,
    gateway: ChatGateway,
    judge: Endpoint,
    max_parse_retries: int = 1,
) -> Judgment:
    """Judge one requirement against one response.

    Rule-labelled requirements never touch the gateway.  Evaluator-judged
    ones get ``max_parse_retries`` extra chances to produce a parsable
    verdict; a still-unparsable reply fails conservatively and says so in
    the explanation rather than raising, so one flaky evaluator reply
    cannot sink a whole benchmark run.
    """
    if sq.rule_spec is not None:
        if sq.corresponding_part is not None:
            if extraction is None:
                raise ValueError(
                    f"sub_question {sq.point_id} needs extraction for part "
                    f"{sq.corresponding_part!r}"
                )
            elements = list(extraction.elements)
        else:
            elements = [response]
        verdict = check_rule(
            sq.rule_spec, elements, instance.language.count_mode, instance.language.value
        )
        if verdict.passed:
            explanation = f"rule {sq.rule} satisfied on {len(elements)} element(s)"
        else:
            explanation = f"rule {sq.rule} violated: {verdict.feedback}"
        return Judgment(sq.point_id, verdict.passed, JudgmentSource.RULE, explanation, verdict.feedback)

    prompt = render_evaluate_prompt(instance.question, response, sq.question)
    tokens = 0
    last_reply = ""
    for _ in range(1 + max_parse_retries):
        reply = gateway.chat(judge, [{"role": "user", "content": prompt}])
        tokens += reply.total_tokens
        last_reply = reply.text
        try:
            passed, analysis = parse_judgment_reply(reply.text)
        except JudgmentParseError:
            prompt += _RETRY_NOTE
            continue
        feedback = "" if passed else (analysis or reply.text.strip())
        return Judgment(sq.point_id, passed, JudgmentSource.LLM, analysis, feedback, tokens)
    return Judgment(
        sq.point_id,
        False,
        JudgmentSource.LLM,
        f"evaluator-error: reply could not be parsed: {last_reply[:200]!r}",
        _unverifiable_feedback(sq, instance.language),
        tokens,
    )


def _dependency_feedback(failed_deps: list[int], language: Language) -> str:
    deps = "、".join(str(d) for d in failed_deps) if language is Language.CHINESE else ", ".join(
        str(d) for d in failed_deps
    )
    if language is Language.CHINESE:
        return f"由于前置要求（第{deps}项）未满足，该项按未通过处理"
    return f"not satisfied because prerequisite requirement(s) {deps} failed"


def apply_dependency_propagation(
    judgments: Mapping[int, Judgment],
    sub_questions: tuple[SubQuestion, ...],
    language: Language = Language.ENGLISH,
) -> dict[int, Judgment]:
    """Force-fail every requirement downstream of a failed prerequisite.

    Propagation is transitive (processed in dependency order) and
    idempotent: re-applying it to its own output changes nothing.
    A requirement that already failed on its own keeps its original
    judgment — the dependency override only rewrites passes.
    """
    by_id = {sq.point_id: sq for sq in sub_questions}
    order: list[int] = []
    remaining = {pid: set(sq.dep) for pid, sq in by_id.items()}
    while remaining:
        ready = [pid for pid, deps in remaining.items() if not deps]
        if not ready:  # cycle: dataset validation prevents this
            raise ValueError(f"dependency cycle among {sorted(remaining)}")
        for pid in sorted(ready):
            order.append(pid)
            del remaining[pid]
            for deps in remaining.values():
                deps.discard(pid)

    out: dict[int, Judgment] = {}
    for pid in order:
        sq = by_id[pid]
        judgment = judgments.get(pid)
        failed_deps = [d for d in sq.dep if d in out and not out[d].passed]
        if judgment is None:
            # Defensive: treat an unjudged requirement as failed.
            judgment = Judgment(
                pid, False, JudgmentSource.RULE, "requirement was never judged", "requirement was not judged"
            )
        if failed_deps and judgment.passed:
            judgment = Judgment(
                pid,
                False,
                JudgmentSource.DEPENDENCY,
                f"prerequisite sub-question(s) {failed_deps} failed",
                _dependency_feedback(failed_deps, language),
                judgment.token_cost,
            )
        out[pid] = judgment
    return out


def synthesize_feedback(instance: DataInstance, judgments: Mapping[int, Judgment]) -> str | None:
    """Fold all failed judgments into one revision request, or None if clean."""
    failed = [
        (sq, judgments[sq.point_id])
        for sq in sorted(instance.sub_questions, key=lambda s: s.point_id)
        if sq.point_id in judgments and not judgments[sq.point_id].passed
    ]
    if not failed:
        return None
    lines = []
    for i, (sq, judgment) in enumerate(failed, start=1):
        reason = judgment.feedback or judgment.explanation
        lines.append(f"{i}. {sq.question}\n   {reason}")
    template = prompt_text(
        "feedback_zh" if instance.language is Language.CHINESE else "feedback_en"
    )
    return template.replace("{items}", "\n".join(lines)).strip()
