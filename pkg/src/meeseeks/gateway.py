"""Chat-completion gateway: HTTP client, token heuristics and record/replay.

All model traffic in the harness flows through a :class:`ChatGateway`.
The HTTP implementation targets OpenAI-style ``/chat/completions``
endpoints and handles retry with exponential backoff plus client-side
rate limiting.  :class:`ReplayGateway` wraps any gateway with a
content-addressed fixture store so that full benchmark runs can be
recorded once and replayed hermetically (tests, CI, demos) with
byte-identical results.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import requests

Message = Mapping[str, str]  # {"role": ..., "content": ...}


class GatewayError(Exception):
    """Base class for everything the gateway can signal."""


class TransportError(GatewayError):
    """Network-level failure (connect, timeout); retriable."""


class AuthError(GatewayError):
    """Credential rejected or missing; retrying cannot help."""


class RequestError(GatewayError):
    """Endpoint rejected the request (non-retriable 4xx)."""


class MalformedReplyError(GatewayError):
    """HTTP 200 whose body does not look like a chat completion."""


class RetryBudgetExceededError(GatewayError):
    """Retriable errors persisted beyond the configured attempt budget."""


class ReplayMissError(GatewayError):
    """Strict replay was asked for a request that was never recorded."""


@dataclass(frozen=True)
class Endpoint:
    """Where and how to reach one model."""

    name: str  # stable identifier; used in digests, transcripts and reports
    model: str  # model name sent on the wire
    base_url: str = ""  # e.g. https://api.example.com/v1; may be empty for replay
    api_key_env: str | None = None  # environment variable holding the bearer token
    timeout_seconds: float = 120.0  # per-request transport timeout
    max_context_tokens: int = 128_000  # context budget checked before each turn
    sampling: Mapping[str, Any] = field(default_factory=dict)  # temperature etc.
    requests_per_minute: float | None = None  # client-side rate cap, None = unlimited
    token_estimator: str = "heuristic"  # name in the estimator registry

    def __post_init__(self):
        if not self.name:
            raise ValueError("endpoint name must be non-empty")
        if self.max_context_tokens <= 0:
            raise ValueError("max_context_tokens must be positive")


@dataclass(frozen=True)
class ChatReply:
    text: str
    prompt_tokens: int
    completion_tokens: int
    total_tokens: int
    latency_ms: float
    from_cache: bool = False


# --- token estimation -------------------------------------------------------

_ESTIMATORS: dict[str, Callable[[str], int]] = {}


def register_token_estimator(name: str, fn: Callable[[str], int]) -> None:
    """Plug in a real tokenizer under ``name`` for Endpoint.token_estimator."""
    _ESTIMATORS[name] = fn


def _heuristic_tokens(text: str) -> int:
    # CJK ideographs tokenize to roughly one token per character; everything
    # else averages about four characters per token.
    from .rules import is_cjk_char

    cjk = sum(1 for ch in text if is_cjk_char(ch))
    other = len(text) - cjk
    return cjk + math.ceil(other / 4)


register_token_estimator("heuristic", _heuristic_tokens)


def estimate_tokens(text: str, endpoint: Endpoint | None = None) -> int:
    """Cheap token estimate used for context budgeting and usage fallbacks."""
    name = endpoint.token_estimator if endpoint else "heuristic"
    fn = _ESTIMATORS.get(name)
    if fn is None:
        raise KeyError(f"no token estimator registered under {name!r}")
    return fn(text)


def estimate_message_tokens(messages: Sequence[Message], endpoint: Endpoint | None = None) -> int:
    # Small fixed overhead per message for role/framing tokens.
    return sum(estimate_tokens(m.get("content", ""), endpoint) + 4 for m in messages)


# --- gateways ---------------------------------------------------------------


class ChatGateway:
    """Anything that can answer a chat request for an endpoint."""

    def chat(self, endpoint: Endpoint, messages: Sequence[Message]) -> ChatReply:
        raise NotImplementedError


class _TokenBucket:
    def __init__(self, per_minute: float):
        self.capacity = max(per_minute, 1.0)
        self.tokens = self.capacity
        self.rate = per_minute / 60.0
        self.stamp = time.monotonic()
        self.lock = threading.Lock()

    def wait_time(self) -> float:
        with self.lock:
            now = time.monotonic()
            self.tokens = min(self.capacity, self.tokens + (now - self.stamp) * self.rate)
            self.stamp = now
            if self.tokens >= 1.0:
                self.tokens -= 1.0
                return 0.0
            need = 1.0 - self.tokens
            self.tokens = 0.0
            return need / self.rate


_RETRIABLE_STATUS = {429}


def _default_transport(
    url: str, headers: Mapping[str, str], payload: Mapping[str, Any], timeout: float
) -> tuple[int, Any]:
    try:
        resp = requests.post(url, headers=dict(headers), json=payload, timeout=timeout)
    except (requests.Timeout, requests.ConnectionError) as exc:
        raise TransportError(str(exc)) from exc
    try:
        body = resp.json()
    except ValueError:
        body = resp.text
    return resp.status_code, body


class HttpChatGateway(ChatGateway):
    """OpenAI-style chat client with backoff, rate limiting and accounting.

    ``transport`` is injectable for tests: a callable taking
    ``(url, headers, payload, timeout)`` and returning ``(status, body)``
    or raising :class:`TransportError`.
    """

    def __init__(
        self,
        max_retries: int = 5,
        backoff_base: float = 0.5,
        backoff_cap: float = 30.0,
        transport: Callable[..., tuple[int, Any]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.transport = transport or _default_transport
        self.sleep = sleep
        self.call_count = 0  # network attempts actually made
        self._buckets: dict[str, _TokenBucket] = {}
        self._lock = threading.Lock()

    def _throttle(self, endpoint: Endpoint) -> None:
        if not endpoint.requests_per_minute:
            return
        with self._lock:
            bucket = self._buckets.get(endpoint.name)
            if bucket is None:
                bucket = self._buckets[endpoint.name] = _TokenBucket(endpoint.requests_per_minute)
        delay = bucket.wait_time()
        if delay > 0:
            self.sleep(delay)

    def _headers(self, endpoint: Endpoint) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if endpoint.api_key_env:
            key = os.environ.get(endpoint.api_key_env)
            if not key:
                raise AuthError(
                    f"endpoint {endpoint.name!r} expects a credential in "
                    f"${endpoint.api_key_env}, which is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def chat(self, endpoint: Endpoint, messages: Sequence[Message]) -> ChatReply:
        if not endpoint.base_url:
            raise RequestError(f"endpoint {endpoint.name!r} has no base_url configured")
        url = endpoint.base_url.rstrip("/") + "/chat/completions"
        headers = self._headers(endpoint)
        payload = {"model": endpoint.model, "messages": [dict(m) for m in messages]}
        payload.update(endpoint.sampling)

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(min(self.backoff_cap, self.backoff_base * 2 ** (attempt - 1)))
            self._throttle(endpoint)
            started = time.monotonic()
            try:
                self.call_count += 1
                status, body = self.transport(url, headers, payload, endpoint.timeout_seconds)
            except TransportError as exc:
                last_error = exc
                continue
            latency_ms = (time.monotonic() - started) * 1000.0
            if status in (401, 403):
                raise AuthError(f"endpoint {endpoint.name!r} rejected credentials (HTTP {status})")
            if status in _RETRIABLE_STATUS or 500 <= status < 600:
                last_error = TransportError(f"HTTP {status}: {_snippet(body)}")
                continue
            if status != 200:
                raise RequestError(f"HTTP {status}: {_snippet(body)}")
            return self._parse_reply(endpoint, messages, body, latency_ms)
        raise RetryBudgetExceededError(
            f"giving up on {endpoint.name!r} after {self.max_retries + 1} attempts: {last_error}"
        )

    def _parse_reply(
        self,
        endpoint: Endpoint,
        messages: Sequence[Message],
        body: Any,
        latency_ms: float,
    ) -> ChatReply:
        try:
            content = body["choices"][0]["message"]["content"]
        except (TypeError, KeyError, IndexError):
            raise MalformedReplyError(
                f"endpoint {endpoint.name!r} returned no chat completion: {_snippet(body)}"
            ) from None
        if not isinstance(content, str):
            raise MalformedReplyError(f"completion content is {type(content).__name__}, not text")
        usage = body.get("usage") or {}
        prompt = usage.get("prompt_tokens")
        completion = usage.get("completion_tokens")
        if prompt is None:
            prompt = estimate_message_tokens(messages, endpoint)
        if completion is None:
            completion = estimate_tokens(content, endpoint)
        total = usage.get("total_tokens", prompt + completion)
        return ChatReply(content, int(prompt), int(completion), int(total), latency_ms)


def _snippet(body: Any, limit: int = 200) -> str:
    text = body if isinstance(body, str) else json.dumps(body, ensure_ascii=False, default=str)
    return text[:limit]


# --- record / replay --------------------------------------------------------


class ReplayMode(str, Enum):
    RECORD = "record"  # serve from store when present, else call through and save
    REPLAY_STRICT = "replay_strict"  # store only; a miss is an error, never a network call
    PASSTHROUGH = "passthrough"  # ignore the store entirely


class ReplayStore:
    """One JSON file per request digest.

    The digest is the SHA-256 of the canonical serialization of
    ``{endpoint name, model, messages}`` — key order never matters,
    message order and content always do.  Sampling parameters and URLs are
    deliberately excluded so fixtures survive config tweaks that cannot
    change a recorded reply.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    @staticmethod
    def request_digest(endpoint: Endpoint, messages: Sequence[Message]) -> str:
        canonical = json.dumps(
            {
                "endpoint": endpoint.name,
                "model": endpoint.model,
                "messages": [
                    {"role": m.get("role", ""), "content": m.get("content", "")}
                    for m in messages
                ],
            },
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def load(self, digest: str) -> ChatReply | None:
        path = self._path(digest)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        r = data["reply"]
        return ChatReply(
            text=r["text"],
            prompt_tokens=r["prompt_tokens"],
            completion_tokens=r["completion_tokens"],
            total_tokens=r["total_tokens"],
            latency_ms=r["latency_ms"],
            from_cache=True,
        )

    def save(
        self,
        digest: str,
        endpoint: Endpoint,
        messages: Sequence[Message],
        reply: ChatReply,
    ) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        doc = {
            "digest": digest,
            "endpoint": endpoint.name,
            "model": endpoint.model,
            "messages": [
                {"role": m.get("role", ""), "content": m.get("content", "")} for m in messages
            ],
            "reply": {
                "text": reply.text,
                "prompt_tokens": reply.prompt_tokens,
                "completion_tokens": reply.completion_tokens,
                "total_tokens": reply.total_tokens,
                "latency_ms": reply.latency_ms,
            },
        }
        tmp = self._path(digest).with_suffix(".tmp")
        tmp.write_text(
            json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, self._path(digest))

    def digests(self) -> list[str]:
        if not self.directory.exists():
            return []
        return sorted(p.stem for p in self.directory.glob("*.json"))


class ReplayGateway(ChatGateway):
    def __init__(self, store: ReplayStore, mode: ReplayMode, inner: ChatGateway | None = None):
        self.store = store
        self.mode = ReplayMode(mode)
        self.inner = inner
        self._lock = threading.Lock()
        if self.mode is not ReplayMode.REPLAY_STRICT and inner is None:
            raise ValueError(f"mode {self.mode.value} requires an inner gateway")

    def chat(self, endpoint: Endpoint, messages: Sequence[Message]) -> ChatReply:
        if self.mode is ReplayMode.PASSTHROUGH:
            return self.inner.chat(endpoint, messages)
        digest = ReplayStore.request_digest(endpoint, messages)
        cached = self.store.load(digest)
        if cached is not None:
            return cached
        if self.mode is ReplayMode.REPLAY_STRICT:
            raise ReplayMissError(
                f"no recorded reply for digest {digest[:12]}… "
                f"(endpoint {endpoint.name!r}); re-record the fixture set"
            )
        reply = self.inner.chat(endpoint, messages)
        with self._lock:
            self.store.save(digest, endpoint, messages, replace(reply, from_cache=False))
        return reply
