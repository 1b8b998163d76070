"""Provider-agnostic LLM access: chat, embeddings, rerank.

The gateway owns retries, backoff, and the in-flight bound; providers only
turn one serialized request body into one parsed response. Request bodies are
serialized once so every retry re-sends byte-identical content.
"""
from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

import httpx


class ProviderError(RuntimeError):
    """Upstream failure; transient errors are retried, fatal ones are not."""

    def __init__(self, message: str, *, status: int | None = None,
                 body: str | None = None, transient: bool = False):
        super().__init__(message)
        self.status = status
        self.body = body
        self.transient = transient


class AuthError(ProviderError):
    def __init__(self, message: str, *, status: int | None = None, body: str | None = None):
        super().__init__(message, status=status, body=body, transient=False)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if any(m.role == "system" for m in self.messages) and self.messages[0].role != "system":
            raise ValueError("system prompt, when present, must be the first message")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class ChatResponse:
    content: str
    usage: TokenUsage
    latency_s: float


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5


@dataclass(frozen=True)
class ProviderConfig:
    model_id: str = "mock-model"
    base_url: str = ""
    api_key_env: str | None = None
    max_in_flight: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    timeout_s: float = 60.0


class Provider(Protocol):
    def send(self, kind: str, body: bytes) -> dict[str, Any]:
        """kind is one of chat/embed/rerank; body is canonical JSON bytes."""
        ...


Recorder = Callable[[str, bytes, Any, int], None]


class LlmGateway:
    """Thread-safe front to one provider; share freely across workers."""

    def __init__(self, provider: Provider, config: ProviderConfig, *,
                 sleeper: Callable[[float], None] = time.sleep,
                 recorder: Recorder | None = None):
        self.provider = provider
        self.config = config
        self._sleeper = sleeper
        self._recorder = recorder
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)

    def chat(self, request: ChatRequest) -> ChatResponse:
        payload = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        started = time.perf_counter()
        raw = self._call("chat", payload)
        try:
            content = raw["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat response shape: {exc}", body=repr(raw)) from exc
        usage = raw.get("usage") or {}
        return ChatResponse(
            content=content,
            usage=TokenUsage(
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
            ),
            latency_s=time.perf_counter() - started,
        )

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("texts must be non-empty")
        raw = self._call("embed", {"model": self.config.model_id, "input": list(texts)})
        try:
            rows = [tuple(float(x) for x in item["embedding"]) for item in raw["data"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embedding response shape: {exc}") from exc
        if len(rows) != len(texts):
            raise ProviderError(f"expected {len(texts)} embeddings, got {len(rows)}")
        for row in rows:
            if not row or any(not math.isfinite(x) for x in row):
                raise ProviderError("embedding contains non-finite or no values")
        return [EmbeddingVector(values=row, model_id=self.config.model_id) for row in rows]

    def rerank(self, query: str, candidates: Sequence[str]) -> list[tuple[int, float]]:
        """Scores for every candidate on [0, 1], descending; ties keep input order."""
        if not candidates:
            raise ValueError("candidates must be non-empty")
        raw = self._call("rerank", {
            "model": self.config.model_id,
            "query": query,
            "documents": list(candidates),
        })
        try:
            scored = {int(r["index"]): float(r["relevance_score"]) for r in raw["results"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed rerank response shape: {exc}") from exc
        if set(scored) != set(range(len(candidates))):
            raise ProviderError("rerank response must score every candidate exactly once")
        return sorted(scored.items(), key=lambda item: (-item[1], item[0]))

    def _call(self, kind: str, payload: dict[str, Any]) -> dict[str, Any]:
        body = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
        attempts = max(1, self.config.retry.max_attempts)
        with self._semaphore:
            for attempt in range(attempts):
                try:
                    response = self.provider.send(kind, body)
                except (ProviderError, TimeoutError) as exc:
                    transient = isinstance(exc, TimeoutError) or exc.transient
                    self._record(kind, body, exc, attempt)
                    if not transient or attempt == attempts - 1:
                        raise
                    self._sleeper(self.config.retry.base_backoff * (2 ** attempt))
                    continue
                self._record(kind, body, response, attempt)
                return response
        raise ProviderError("retry loop exhausted without a response")  # pragma: no cover

    def _record(self, kind: str, body: bytes, outcome: Any, attempt: int) -> None:
        if self._recorder is not None:
            self._recorder(kind, body, outcome, attempt)


_TRANSIENT_STATUSES = {429, 500, 502, 503, 504}
_HTTP_PATHS = {"chat": "/chat/completions", "embed": "/embeddings", "rerank": "/rerank"}


class HttpProvider:
    """OpenAI-compatible chat/embeddings plus a generic rerank endpoint."""

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        if not config.base_url:
            raise ValueError("HttpProvider requires base_url")
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout_s)

    def send(self, kind: str, body: bytes) -> dict[str, Any]:
        headers = {"content-type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
            if not key:
                raise AuthError(f"environment variable {self.config.api_key_env} is not set")
            headers["authorization"] = f"Bearer {key}"
        url = self.config.base_url.rstrip("/") + _HTTP_PATHS[kind]
        try:
            response = self._client.post(url, content=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise TimeoutError(f"{kind} request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderError(f"{kind} request failed: {exc}", transient=True) from exc
        if response.status_code in (401, 403):
            raise AuthError(f"auth rejected ({response.status_code})",
                            status=response.status_code, body=response.text)
        if response.status_code in _TRANSIENT_STATUSES:
            raise ProviderError(f"transient upstream error ({response.status_code})",
                                status=response.status_code, body=response.text, transient=True)
        if response.status_code >= 400:
            raise ProviderError(f"upstream rejected request ({response.status_code})",
                                status=response.status_code, body=response.text)
        return response.json()
