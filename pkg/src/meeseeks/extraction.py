"""Element extraction: turning a free-form response into checkable elements.

Deterministic rules can only be applied to the exact part of a response
they constrain ("the title", "the 50 comments", ...).  Extraction is
therefore evaluator-driven and comes in two flavors:

* **coding** — an evaluator model writes ``extract_info_list`` and we run
  it in the sandbox.  Used for instances marked ``coding_flag``; robust
  for very long outputs because the response never round-trips through
  the evaluator's output window.
* **regenerate** — an evaluator model copies the target part verbatim
  (or answers ``ALL`` when the whole response is the part).  Copies are
  verified character-for-character against the response modulo
  whitespace; unverified elements are still judged, but flagged.

Both flavors get a bounded number of repair rounds with the error text
appended to the prompt; when everything fails, the whole response is
used as a single element so judging always has something to work with.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from .dataset import DataInstance
from .gateway import ChatGateway, Endpoint
from .rules import RuleKind
from .sandbox import SandboxExecutionError, SandboxPolicy, execute_extraction_program


class ExtractionStrategy(str, Enum):
    CODING = "coding"
    REGENERATE = "regenerate"
    WHOLE_RESPONSE_FALLBACK = "whole_response_fallback"


class PromptKind(str, Enum):
    CODING_SINGLE = "coding_single"
    CODING_MULTI = "coding_multi"
    REGEN_SINGLE = "regen_single"
    REGEN_MULTI = "regen_multi"


class RegenerateParseError(ValueError):
    """The regenerate evaluator's reply was not a python list nor ALL."""


@dataclass(frozen=True)
class ExtractionResult:
    elements: tuple[str, ...]
    strategy: ExtractionStrategy
    verified: bool  # every element confirmed to appear verbatim in the response
    diagnostics: tuple[str, ...] = ()
    token_cost: int = 0  # evaluator tokens actually spent on this extraction

    def to_dict(self) -> dict:
        return {
            "elements": list(self.elements),
            "strategy": self.strategy.value,
            "verified": self.verified,
            "diagnostics": list(self.diagnostics),
            "token_cost": self.token_cost,
        }


@lru_cache(maxsize=None)
def prompt_text(name: str) -> str:
    return resources.files("meeseeks.prompts").joinpath(f"{name}.txt").read_text(
        encoding="utf-8"
    )


def render_extraction_prompt(
    kind: PromptKind,
    *,
    model_response: str,
    instruction: str,
    question: str = "",
) -> str:
    """Fill an extraction prompt template.

    Slots are replaced literally (no str.format) because prompt bodies and
    response text routinely contain braces of their own.
    """
    kind = PromptKind(kind)
    text = prompt_text(kind.value)
    if kind in (PromptKind.CODING_SINGLE, PromptKind.CODING_MULTI):
        return (
            text.replace("{model_response}", model_response)
            .replace("{instruction}", instruction)
        )
    return (
        text.replace("{input_instruction}", question)
        .replace("{model_response}", model_response)
        .replace("{extraction_prompt}", instruction)
    )


def choose_strategy(instance: DataInstance) -> ExtractionStrategy:
    return ExtractionStrategy.CODING if instance.coding_flag else ExtractionStrategy.REGENERATE


def part_is_multi_element(instance: DataInstance, part_name: str) -> bool:
    """A part holds multiple elements when some rule counts or compares them."""
    for sq in instance.sub_questions:
        if sq.corresponding_part != part_name or sq.rule_spec is None:
            continue
        if sq.rule_spec.kind in (RuleKind.ITEM_COUNT, RuleKind.NON_REPEAT):
            return True
    return False


_FENCE = re.compile(r"^```[A-Za-z0-9_+-]*\s*\n(.*?)\n?```\s*$", re.DOTALL)


def strip_code_fences(text: str) -> str:
    m = _FENCE.match(text.strip())
    return m.group(1) if m else text.strip()


_WS = re.compile(r"\s+")


def _squash_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def is_verbatim(element: str, response: str) -> bool:
    """Containment check tolerant to whitespace reflow only."""
    needle = _squash_ws(element)
    return not needle or needle in _squash_ws(response)


def parse_regenerate_reply(reply: str, response: str) -> tuple[list[str], bool]:
    """Parse a regenerate-evaluator reply into elements.

    Returns ``(elements, verified)`` where ``verified`` says every element
    occurs verbatim (modulo whitespace) in the response.  ``ALL`` means
    the entire response is the single element, which is verbatim by
    definition.  Raises :class:`RegenerateParseError` when the reply is
    neither ALL nor a parsable python list of strings.
    """
    text = strip_code_fences(reply)
    if text.strip() == "ALL":
        return [response], True
    start, end = text.find("["), text.rfind("]")
    if start == -1 or end <= start:
        raise RegenerateParseError("reply contains neither ALL nor a python list")
    try:
        parsed = ast.literal_eval(text[start : end + 1])
    except (ValueError, SyntaxError) as exc:
        raise RegenerateParseError(f"reply list does not parse: {exc}") from exc
    if not isinstance(parsed, (list, tuple)):
        raise RegenerateParseError(f"reply parses to {type(parsed).__name__}, not a list")
    if not all(isinstance(el, str) for el in parsed):
        raise RegenerateParseError("reply list must contain only strings")
    elements = list(parsed)
    verified = all(is_verbatim(el, response) for el in elements)
    return elements, verified


_REPAIR_NOTE = (
    "\n\nYour previous reply failed with the following error:\n{error}\n"
    "Please correct the problem and reply again, strictly following the "
    "required output format."
)


def extract_part(
    instance: DataInstance,
    part_name: str,
    response: str,
    gateway: ChatGateway,
    *,
    coder: Endpoint,
    regenerator: Endpoint,
    policy: SandboxPolicy = SandboxPolicy(),
    max_repair_rounds: int = 2,
) -> ExtractionResult:
    """Extract one named part of a response, trying strategies in order.

    coding (when the instance asks for it) → regenerate → whole response.
    Every evaluator call's token usage is accumulated into ``token_cost``;
    every failed attempt leaves a diagnostic behind.
    """
    if part_name not in instance.corresponding_parts:
        raise KeyError(f"instance {instance.id!r} has no part {part_name!r}")
    instruction = instance.corresponding_parts[part_name]
    multi = part_is_multi_element(instance, part_name)
    diagnostics: list[str] = []
    tokens = 0

    if choose_strategy(instance) is ExtractionStrategy.CODING:
        kind = PromptKind.CODING_MULTI if multi else PromptKind.CODING_SINGLE
        prompt = render_extraction_prompt(
            kind, model_response=response, instruction=instruction
        )
        for attempt in range(1 + max_repair_rounds):
            reply = gateway.chat(coder, [{"role": "user", "content": prompt}])
            tokens += reply.total_tokens
            source = strip_code_fences(reply.text)
            try:
                elements = execute_extraction_program(source, response, policy)
            except SandboxExecutionError as exc:
                diagnostics.append(f"coding attempt {attempt + 1}: {exc}")
                prompt += _REPAIR_NOTE.format(error=str(exc))
                continue
            verified = all(is_verbatim(el, response) for el in elements)
            if not verified:
                diagnostics.append(
                    "coding extraction returned elements not found verbatim in the response"
                )
            return ExtractionResult(
                tuple(elements), ExtractionStrategy.CODING, verified, tuple(diagnostics), tokens
            )
        diagnostics.append("coding extraction exhausted its repair rounds; trying regenerate")

    kind = PromptKind.REGEN_MULTI if multi else PromptKind.REGEN_SINGLE
    prompt = render_extraction_prompt(
        kind,
        model_response=response,
        instruction=instruction,
        question=instance.question,
    )
    for attempt in range(1 + max_repair_rounds):
        reply = gateway.chat(regenerator, [{"role": "user", "content": prompt}])
        tokens += reply.total_tokens
        try:
            elements, verified = parse_regenerate_reply(reply.text, response)
        except RegenerateParseError as exc:
            diagnostics.append(f"regenerate attempt {attempt + 1}: {exc}")
            prompt += _REPAIR_NOTE.format(error=str(exc))
            continue
        if not verified:
            diagnostics.append(
                "regenerate extraction returned elements not found verbatim in the response"
            )
        return ExtractionResult(
            tuple(elements), ExtractionStrategy.REGENERATE, verified, tuple(diagnostics), tokens
        )

    diagnostics.append("all extraction strategies failed; judging the whole response")
    return ExtractionResult(
        (response,),
        ExtractionStrategy.WHOLE_RESPONSE_FALLBACK,
        False,
        tuple(diagnostics),
        tokens,
    )
