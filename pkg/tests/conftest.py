"""Shared test helpers: instance builders and scriptable gateways."""

from __future__ import annotations

from typing import Callable, Sequence

import pytest

from meeseeks.dataset import DataInstance, parse_instance
from meeseeks.gateway import (
    ChatGateway,
    ChatReply,
    Endpoint,
    Message,
    estimate_message_tokens,
    estimate_tokens,
)


def make_instance(
    sub_questions: list[dict],
    *,
    question: str = "Write the thing.",
    parts: dict[str, str] | None = None,
    instance_id: str = "test-item",
    language: str | None = "english",
    coding_flag: bool = False,
) -> DataInstance:
    obj = {
        "id": instance_id,
        "category": "test",
        "question": question,
        "corresponding_parts": parts or {},
        "coding_flag": coding_flag,
        "sub_questions": sub_questions,
    }
    if language is not None:
        obj["language"] = language
    return parse_instance(obj)


class StubGateway(ChatGateway):
    """Gateway whose replies come from a ``(endpoint, messages) -> str`` function.

    Records every call so tests can assert on traffic.  Token usage uses
    the same estimators as the real HTTP gateway's fallback path, so
    accounting assertions stay meaningful.
    """

    def __init__(self, script: Callable[[Endpoint, Sequence[Message]], str]):
        self.script = script
        self.calls: list[tuple[str, str]] = []  # (endpoint name, last message content)

    def chat(self, endpoint: Endpoint, messages: Sequence[Message]) -> ChatReply:
        self.calls.append((endpoint.name, messages[-1]["content"]))
        text = self.script(endpoint, messages)
        prompt_tokens = estimate_message_tokens(messages, endpoint)
        completion_tokens = estimate_tokens(text, endpoint)
        return ChatReply(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            total_tokens=prompt_tokens + completion_tokens,
            latency_ms=1.0,
        )


class QueueGateway(StubGateway):
    """Gateway that pops canned replies in order, regardless of the prompt."""

    def __init__(self, replies: Sequence[str]):
        self._queue = list(replies)
        super().__init__(self._pop)

    def _pop(self, endpoint: Endpoint, messages: Sequence[Message]) -> str:
        if not self._queue:
            raise AssertionError("QueueGateway ran out of scripted replies")
        return self._queue.pop(0)


@pytest.fixture
def endpoint() -> Endpoint:
    return Endpoint(name="stub", model="stub-model")
