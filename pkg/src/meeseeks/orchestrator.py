"""Multi-turn session orchestration.

One *session* is the conversation between a target model and the
harness about one instance: ask, judge every requirement, feed back what
failed, repeat.  A session ends the first time everything passes
(``passed`` — the instance is frozen and never asked again), when the
turn budget runs out (``exhausted``), when the next request would no
longer fit the target's context window (``context_overflow``), or when
an endpoint fails terminally (``error``).

``run_benchmark`` fans sessions out over a thread pool for a whole
dataset × target grid and persists transcripts incrementally as JSONL,
which is what makes ``--resume`` cheap and crash-safe.
"""

from __future__ import annotations

import json
import re
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .dataset import DataInstance
from .extraction import ExtractionResult, ExtractionStrategy, extract_part
from .gateway import ChatGateway, Endpoint, GatewayError, estimate_message_tokens
from .judging import (
    Judgment,
    apply_dependency_propagation,
    judge_sub_question,
    synthesize_feedback,
)
from .sandbox import SandboxPolicy

# Reasoning models interleave deliberation with the answer; structure rules
# apply to the answer, and history should not resend thousands of thinking
# tokens every turn.
DEFAULT_RESPONSE_FILTER = r"<think>.*?</think>\s*"


class SessionStatus(str, Enum):
    PASSED = "passed"
    EXHAUSTED = "exhausted"
    CONTEXT_OVERFLOW = "context_overflow"
    ERROR = "error"


@dataclass(frozen=True)
class RunConfig:
    evaluator: Endpoint  # judges null-rule requirements; default for both formatter roles
    coder: Endpoint | None = None  # writes extraction programs (coding instances)
    regenerator: Endpoint | None = None  # copies parts verbatim (regenerate extraction)
    max_turns: int = 20
    concurrency: int = 4
    sandbox: SandboxPolicy = field(default_factory=SandboxPolicy)
    output_dir: Path | None = None
    resume: bool = False
    response_filter: str | None = DEFAULT_RESPONSE_FILTER
    max_repair_rounds: int = 2  # extraction repair attempts per strategy

    def __post_init__(self):
        if self.max_turns < 1:
            raise ValueError("max_turns must be at least 1")
        if self.concurrency < 1:
            raise ValueError("concurrency must be at least 1")
        if self.response_filter is not None:
            try:
                re.compile(self.response_filter, re.DOTALL)
            except re.error as exc:
                raise ValueError(f"invalid response_filter regex: {exc}") from exc

    @property
    def coder_endpoint(self) -> Endpoint:
        return self.coder or self.evaluator

    @property
    def regenerator_endpoint(self) -> Endpoint:
        return self.regenerator or self.evaluator


def apply_response_filter(text: str, pattern: str | None) -> str:
    if not pattern:
        return text
    return re.sub(pattern, "", text, flags=re.DOTALL).strip()


@dataclass
class TurnRecord:
    turn_index: int  # 1-based
    response: str  # raw target output, unfiltered
    extractions: dict[str, ExtractionResult]
    judgments: dict[int, Judgment]
    usable: bool  # all requirements passed this turn
    feedback: str | None  # None iff usable
    latency_ms: float
    target_tokens: int  # target-call usage for this turn
    evaluator_tokens: int  # extraction + judging usage for this turn

    def to_dict(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "response": self.response,
            "extractions": {k: v.to_dict() for k, v in self.extractions.items()},
            "judgments": {str(k): v.to_dict() for k, v in self.judgments.items()},
            "usable": self.usable,
            "feedback": self.feedback,
            "latency_ms": self.latency_ms,
            "target_tokens": self.target_tokens,
            "evaluator_tokens": self.evaluator_tokens,
        }

    @staticmethod
    def from_dict(obj: Mapping) -> "TurnRecord":
        return TurnRecord(
            turn_index=obj["turn_index"],
            response=obj["response"],
            extractions={
                k: ExtractionResult(
                    elements=tuple(v["elements"]),
                    strategy=ExtractionStrategy(v["strategy"]),
                    verified=v["verified"],
                    diagnostics=tuple(v.get("diagnostics", ())),
                    token_cost=v.get("token_cost", 0),
                )
                for k, v in obj["extractions"].items()
            },
            judgments={int(k): Judgment.from_dict(v) for k, v in obj["judgments"].items()},
            usable=obj["usable"],
            feedback=obj["feedback"],
            latency_ms=obj["latency_ms"],
            target_tokens=obj["target_tokens"],
            evaluator_tokens=obj["evaluator_tokens"],
        )


@dataclass
class Transcript:
    instance_id: str
    endpoint_name: str
    status: SessionStatus
    turns: list[TurnRecord] = field(default_factory=list)
    error: str | None = None

    @property
    def passed_turn(self) -> int | None:
        """Turn index at which the instance passed, or None."""
        if self.status is SessionStatus.PASSED and self.turns:
            return self.turns[-1].turn_index
        return None

    def judgments_at(self, turn: int) -> dict[int, Judgment] | None:
        """Latest judgments visible at cumulative turn ``turn`` (clamped)."""
        usable = [r for r in self.turns if r.turn_index <= turn]
        return usable[-1].judgments if usable else None


def evaluate_response(
    instance: DataInstance,
    response: str,
    gateway: ChatGateway,
    config: RunConfig,
) -> tuple[dict[str, ExtractionResult], dict[int, Judgment], int]:
    """Judge one response against every requirement of an instance.

    Returns extractions by part name, post-propagation judgments by
    point_id, and the evaluator token total for the whole evaluation.
    """
    parts_needed = sorted(
        {
            sq.corresponding_part
            for sq in instance.sub_questions
            if sq.rule_spec is not None and sq.corresponding_part is not None
        }
    )
    extractions: dict[str, ExtractionResult] = {}
    for part in parts_needed:
        extractions[part] = extract_part(
            instance,
            part,
            response,
            gateway,
            coder=config.coder_endpoint,
            regenerator=config.regenerator_endpoint,
            policy=config.sandbox,
            max_repair_rounds=config.max_repair_rounds,
        )

    judgments: dict[int, Judgment] = {}
    for sq in instance.sub_questions:
        extraction = extractions.get(sq.corresponding_part) if sq.corresponding_part else None
        judgments[sq.point_id] = judge_sub_question(
            instance, sq, response, extraction, gateway, config.evaluator
        )
    judgments = apply_dependency_propagation(judgments, instance.sub_questions, instance.language)

    tokens = sum(e.token_cost for e in extractions.values())
    tokens += sum(j.token_cost for j in judgments.values())
    return extractions, judgments, tokens


def run_instance_session(
    instance: DataInstance,
    target: Endpoint,
    gateway: ChatGateway,
    config: RunConfig,
    on_turn: Callable[[TurnRecord], None] | None = None,
) -> Transcript:
    """Drive the evaluate → feedback → retry loop for one instance."""
    messages: list[dict[str, str]] = [{"role": "user", "content": instance.question}]
    turns: list[TurnRecord] = []
    status = SessionStatus.EXHAUSTED
    error: str | None = None

    for turn_index in range(1, config.max_turns + 1):
        if estimate_message_tokens(messages, target) > target.max_context_tokens:
            status = SessionStatus.CONTEXT_OVERFLOW
            error = (
                f"conversation would exceed the {target.max_context_tokens}-token "
                f"context budget before turn {turn_index}"
            )
            break
        try:
            reply = gateway.chat(target, messages)
        except GatewayError as exc:
            status, error = SessionStatus.ERROR, f"target call failed: {exc}"
            break
        visible = apply_response_filter(reply.text, config.response_filter)
        try:
            extractions, judgments, evaluator_tokens = evaluate_response(
                instance, visible, gateway, config
            )
        except GatewayError as exc:
            status, error = SessionStatus.ERROR, f"evaluation failed: {exc}"
            break
        usable = all(j.passed for j in judgments.values())
        feedback = None if usable else synthesize_feedback(instance, judgments)
        record = TurnRecord(
            turn_index=turn_index,
            response=reply.text,
            extractions=extractions,
            judgments=judgments,
            usable=usable,
            feedback=feedback,
            latency_ms=reply.latency_ms,
            target_tokens=reply.total_tokens,
            evaluator_tokens=evaluator_tokens,
        )
        turns.append(record)
        if on_turn is not None:
            on_turn(record)
        if usable:
            status = SessionStatus.PASSED
            break
        messages = messages + [
            {"role": "assistant", "content": visible},
            {"role": "user", "content": feedback or ""},
        ]

    return Transcript(instance.id, target.name, status, turns, error)


class TranscriptStore:
    """Append-only JSONL persistence for transcripts.

    Two record kinds: ``turn`` (one evaluated turn of one session) and
    ``end`` (terminal status of one session).  Lines from concurrent
    sessions interleave freely; a reader groups them back by
    (endpoint, instance).  A session with no ``end`` line was interrupted
    and reads back as an error, which resume treats as retryable.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def _append(self, obj: dict) -> None:
        line = json.dumps(obj, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def append_turn(self, endpoint_name: str, instance_id: str, record: TurnRecord) -> None:
        self._append(
            {
                "kind": "turn",
                "endpoint": endpoint_name,
                "instance_id": instance_id,
                "turn": record.to_dict(),
            }
        )

    def append_end(self, transcript: Transcript) -> None:
        self._append(
            {
                "kind": "end",
                "endpoint": transcript.endpoint_name,
                "instance_id": transcript.instance_id,
                "status": transcript.status.value,
                "error": transcript.error,
            }
        )

    def read_transcripts(self) -> dict[tuple[str, str], Transcript]:
        out: dict[tuple[str, str], Transcript] = {}
        if not self.path.exists():
            return out
        with self.path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{self.path}:{line_no}: corrupt transcript line: {exc}")
                key = (obj["endpoint"], obj["instance_id"])
                transcript = out.get(key)
                if transcript is None:
                    transcript = out[key] = Transcript(
                        obj["instance_id"], obj["endpoint"], SessionStatus.ERROR,
                        error="session interrupted (no end record)",
                    )
                if obj["kind"] == "turn":
                    transcript.turns.append(TurnRecord.from_dict(obj["turn"]))
                elif obj["kind"] == "end":
                    transcript.status = SessionStatus(obj["status"])
                    transcript.error = obj.get("error")
        return out


@dataclass
class RunResult:
    transcripts: dict[tuple[str, str], Transcript]

    def for_endpoint(self, endpoint_name: str) -> dict[str, Transcript]:
        return {
            inst_id: t
            for (ep, inst_id), t in self.transcripts.items()
            if ep == endpoint_name
        }

    def endpoints(self) -> list[str]:
        return sorted({ep for ep, _ in self.transcripts})

    def failures(self) -> list[tuple[tuple[str, str], str]]:
        return [
            (key, t.error or "unknown error")
            for key, t in sorted(self.transcripts.items())
            if t.status is SessionStatus.ERROR
        ]


def run_benchmark(
    instances: Sequence[DataInstance],
    targets: Sequence[Endpoint] | Endpoint,
    gateway: ChatGateway,
    config: RunConfig,
) -> RunResult:
    """Run every (target, instance) session, optionally resuming.

    Sessions already terminal in the transcript store (passed, exhausted
    or context_overflow) are skipped when ``config.resume`` is set;
    errored or interrupted sessions are retried.  Session-internal
    failures never abort the grid — they surface as error transcripts.
    """
    if isinstance(targets, Endpoint):
        targets = [targets]
    store: TranscriptStore | None = None
    existing: dict[tuple[str, str], Transcript] = {}
    if config.output_dir is not None:
        store = TranscriptStore(Path(config.output_dir) / "transcripts.jsonl")
        if config.resume:
            existing = store.read_transcripts()

    done = {
        key: t for key, t in existing.items() if t.status is not SessionStatus.ERROR
    }
    jobs = [
        (target, instance)
        for target in targets
        for instance in instances
        if (target.name, instance.id) not in done
    ]

    results: dict[tuple[str, str], Transcript] = dict(done)

    def run_one(target: Endpoint, instance: DataInstance) -> Transcript:
        on_turn = None
        if store is not None:
            on_turn = lambda rec: store.append_turn(target.name, instance.id, rec)
        try:
            transcript = run_instance_session(instance, target, gateway, config, on_turn)
        except Exception as exc:  # pragma: no cover - safety net for bugs
            transcript = Transcript(
                instance.id, target.name, SessionStatus.ERROR,
                error=f"internal error: {exc!r}",
            )
        if store is not None:
            store.append_end(transcript)
        return transcript

    if jobs:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            futures = {
                pool.submit(run_one, target, instance): (target.name, instance.id)
                for target, instance in jobs
            }
            for future in as_completed(futures):
                results[futures[future]] = future.result()

    return RunResult(results)
