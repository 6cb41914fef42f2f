"""Chat-LLM access: canonical requests, caching, retries, and mock replay.

Every request has a canonical JSON form whose SHA-256 digest keys the
response cache and the mock transcript, so identical prompts always map to
the same stored response.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone

import requests

from .errors import GatewayError, TranscriptError, TransportError

logger = logging.getLogger(__name__)

API_KEY_ENV = "LLM4VIS_API_KEY"
DEFAULT_MODEL_ID = "gpt-3.5-turbo-16k"
DEFAULT_API_BASE = "https://api.openai.com/v1"

_FINISH_REASONS = ("stop", "length", "other")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple  # of Message, order significant
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not self.messages:
            raise ValueError("a request carries at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    @classmethod
    def single_user(
        cls,
        text: str,
        model_id: str = DEFAULT_MODEL_ID,
        temperature: float = 0.0,
        max_tokens: int = 1024,
    ) -> "ChatRequest":
        return cls(
            model_id=model_id,
            messages=(Message(role="user", content=text),),
            temperature=temperature,
            max_tokens=max_tokens,
        )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: str = "stop"
    provider_meta: str = ""

    def __post_init__(self):
        if self.finish_reason not in _FINISH_REASONS:
            raise ValueError(f"unknown finish_reason {self.finish_reason!r}")
        if not self.text and self.finish_reason != "other":
            raise ValueError("an empty response must carry finish_reason 'other'")


def canonical_request_json(request: ChatRequest) -> str:
    """Stable serialization: fields sorted, message order preserved."""
    obj = {
        "model_id": request.model_id,
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def cache_key(request: ChatRequest) -> str:
    """SHA-256 hex digest of the canonical request JSON."""
    return hashlib.sha256(canonical_request_json(request).encode("utf-8")).hexdigest()


class Provider:
    """Something that can answer one ChatRequest."""

    is_live = False

    def send(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


class _FreshLockOnCopy:
    """Pickle/deepcopy support for lock-holding classes.

    The lock itself cannot be copied; the copy gets a fresh, unheld one.
    """

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_lock", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()


class LiveProvider(Provider):
    """OpenAI-compatible chat completions over HTTP."""

    is_live = True

    def __init__(
        self,
        api_key: str,
        api_base: str = DEFAULT_API_BASE,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        if not api_key:
            raise GatewayError(f"no API key; set {API_KEY_ENV}")
        self._api_key = api_key
        self._api_base = api_base.rstrip("/")
        self._timeout = timeout
        self._session = session or requests.Session()

    def send(self, request: ChatRequest) -> ChatResponse:
        payload = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            http = self._session.post(
                f"{self._api_base}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self._timeout,
            )
        except requests.RequestException as e:
            raise TransportError(f"transport failure: {e}") from e
        if http.status_code == 429 or http.status_code >= 500:
            raise TransportError(f"provider returned HTTP {http.status_code}")
        if http.status_code >= 400:
            raise GatewayError(f"provider rejected the request: HTTP {http.status_code}: {http.text[:200]}")
        try:
            data = http.json()
            choice = data["choices"][0]
            text = choice["message"].get("content") or ""
            finish = choice.get("finish_reason")
        except (ValueError, KeyError, IndexError) as e:
            raise GatewayError(f"malformed provider response: {e}") from e
        if finish not in ("stop", "length") or not text:
            finish = "other"
        return ChatResponse(text=text, finish_reason=finish, provider_meta=data.get("model", ""))


class MockProvider(_FreshLockOnCopy, Provider):
    """Replays scripted responses from a transcript.

    Transcript lines are JSON objects: {"match": "digest", "digest": ...,
    "response": ...} entries form a reusable digest -> response map that is
    consulted first; {"match": "sequence", "response": ...} entries form a
    FIFO consumed in order when no digest matches. A request matching
    neither fails with its digest so the transcript can be extended.
    """

    def __init__(self, entries):
        self._by_digest: dict[str, ChatResponse] = {}
        self._sequence: list[ChatResponse] = []
        self._lock = threading.Lock()
        for i, entry in enumerate(entries, start=1):
            try:
                match = entry["match"]
                response = _response_from_obj(entry["response"])
                if match == "digest":
                    self._by_digest[entry["digest"]] = response
                elif match == "sequence":
                    self._sequence.append(response)
                else:
                    raise KeyError(f"unknown match kind {match!r}")
            except (KeyError, TypeError, ValueError) as e:
                raise TranscriptError(f"transcript entry {i} is malformed: {e}") from e

    @classmethod
    def from_path(cls, path: str) -> "MockProvider":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entries.append(json.loads(line))
        return cls(entries)

    def send(self, request: ChatRequest) -> ChatResponse:
        digest = cache_key(request)
        with self._lock:
            if digest in self._by_digest:
                return self._by_digest[digest]
            if self._sequence:
                return self._sequence.pop(0)
        raise TranscriptError(
            f"no scripted response for request digest {digest}", digest=digest
        )


class RecordingProvider(_FreshLockOnCopy, Provider):
    """Wraps a provider and records digest -> response pairs for replay."""

    def __init__(self, inner: Provider):
        self._inner = inner
        self._lock = threading.Lock()
        self._records: dict[str, ChatResponse] = {}

    @property
    def is_live(self) -> bool:  # type: ignore[override]
        return self._inner.is_live

    def send(self, request: ChatRequest) -> ChatResponse:
        response = self._inner.send(request)
        digest = cache_key(request)
        with self._lock:
            self._records.setdefault(digest, response)
        return response

    def dump_transcript(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for digest, response in self._records.items():
                obj = {
                    "match": "digest",
                    "digest": digest,
                    "response": {"text": response.text, "finish_reason": response.finish_reason},
                }
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _response_from_obj(obj) -> ChatResponse:
    if isinstance(obj, str):
        return ChatResponse(text=obj)
    return ChatResponse(
        text=obj["text"],
        finish_reason=obj.get("finish_reason", "stop"),
        provider_meta=obj.get("provider_meta", ""),
    )


class ResponseCache:
    """Write-once on-disk cache keyed by request digest."""

    def __init__(self, directory: str):
        self._dir = directory
        os.makedirs(directory, exist_ok=True)

    def _path(self, key: str) -> str:
        return os.path.join(self._dir, f"{key}.json")

    def get(self, key: str) -> ChatResponse | None:
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except FileNotFoundError:
            return None
        except (ValueError, OSError) as e:
            raise GatewayError(f"corrupt cache entry {path}: {e}") from e
        return _response_from_obj(obj["response"])

    def put(self, key: str, request: ChatRequest, response: ChatResponse) -> ChatResponse:
        """Store exactly once; a concurrent winner's entry is returned instead."""
        path = self._path(key)
        record = {
            "request": json.loads(canonical_request_json(request)),
            "response": {
                "text": response.text,
                "finish_reason": response.finish_reason,
                "provider_meta": response.provider_meta,
            },
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        tmp = os.path.join(self._dir, f".tmp-{uuid.uuid4().hex}")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(record, fh, ensure_ascii=False)
        try:
            os.link(tmp, path)
        except FileExistsError:
            existing = self.get(key)
            if existing is not None:
                return existing
            return response
        finally:
            os.unlink(tmp)
        return response


@dataclass(frozen=True)
class RequestSettings:
    model_id: str = DEFAULT_MODEL_ID
    temperature: float = 0.0
    max_tokens: int = 1024


class Gateway(_FreshLockOnCopy):
    """One configured path to the LLM: a provider, optionally fronted by a cache.

    Transport-level failures are retried with exponential backoff (1s, 2s by
    default); other provider errors and mock-transcript misses are not.
    """

    def __init__(
        self,
        provider: Provider,
        cache: ResponseCache | None = None,
        settings: RequestSettings = RequestSettings(),
        retries: int = 2,
        backoff_base: float = 1.0,
        sleep=time.sleep,
    ):
        self.provider = provider
        self.cache = cache
        self.settings = settings
        self._retries = retries
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._lock = threading.Lock()
        self._provider_calls = 0

    @property
    def provider_calls(self) -> int:
        """Number of provider.send invocations (cache hits excluded)."""
        with self._lock:
            return self._provider_calls

    @property
    def resend_on_parse_failure(self) -> bool:
        """Whether re-sending an identical request could change the answer."""
        return self.provider.is_live and self.cache is None

    def request_for(self, prompt: str) -> ChatRequest:
        return ChatRequest.single_user(
            prompt,
            model_id=self.settings.model_id,
            temperature=self.settings.temperature,
            max_tokens=self.settings.max_tokens,
        )

    def complete_text(self, prompt: str) -> ChatResponse:
        return self.complete(self.request_for(prompt))

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = cache_key(request)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        response = self._send_with_retry(request)
        if self.cache is not None:
            response = self.cache.put(key, request, response)
        return response

    def _send_with_retry(self, request: ChatRequest) -> ChatResponse:
        attempts = self._retries + 1
        delay = self._backoff_base
        last: Exception | None = None
        for attempt in range(1, attempts + 1):
            with self._lock:
                self._provider_calls += 1
            try:
                return self.provider.send(request)
            except TransportError as e:
                last = e
                if attempt < attempts:
                    logger.warning("retryable provider failure (attempt %d): %s", attempt, e)
                    self._sleep(delay)
                    delay *= 2
        raise GatewayError(f"provider failed after {attempts} attempts: {last}", attempts=attempts)
