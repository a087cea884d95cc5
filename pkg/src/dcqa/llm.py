"""Text-generation backends.

``ScriptedBackend`` applies a pure policy function to the prompt,
``ReplayBackend`` plays back recorded outputs, and ``HttpChatBackend`` talks to
any OpenAI-compatible ``/chat/completions`` endpoint, optionally through a
JSONL cassette so tests can run offline.
"""

from __future__ import annotations

import collections
import hashlib
import json
import logging
import os
import threading
import time
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import httpx

from .errors import BackendError, InvalidInput, TransientBackendError

log = logging.getLogger(__name__)

API_KEY_ENV = "DCQA_LLM_API_KEY"
ENDPOINT_ENV = "DCQA_LLM_ENDPOINT"

Policy = Callable[[str], str]


class LlmBackend:
    """Base class. Backends are shared by concurrently running episodes."""

    label = "llm"

    def complete(self, prompt: str) -> str:
        raise NotImplementedError

    def for_episode(self, qid: str) -> "LlmBackend":
        """Backend to use for one episode; stateless backends return ``self``."""
        return self


class ScriptedBackend(LlmBackend):
    def __init__(self, policy: Policy, label: str = "scripted"):
        self.policy = policy
        self.label = label

    def complete(self, prompt: str) -> str:
        if not prompt:
            raise InvalidInput("empty prompt")
        return self.policy(prompt)


class ReplayBackend(LlmBackend):
    """Returns recorded outputs in order.

    Built either from one output list (a single episode) or from a mapping
    ``qid -> outputs``, in which case :meth:`for_episode` hands out a fresh
    cursor per question.
    """

    label = "replay"

    def __init__(self, outputs: Union[Sequence[str], Mapping[str, Sequence[str]]]):
        self._by_qid: Optional[Dict[str, List[str]]] = None
        self._outputs: List[str] = []
        if isinstance(outputs, Mapping):
            self._by_qid = {k: list(v) for k, v in outputs.items()}
        else:
            self._outputs = list(outputs)
        self._cursor = 0
        self._lock = threading.Lock()

    def for_episode(self, qid: str) -> "LlmBackend":
        if self._by_qid is None:
            return self
        if qid not in self._by_qid:
            raise BackendError(f"no recorded outputs for {qid!r}")
        return ReplayBackend(self._by_qid[qid])

    def complete(self, prompt: str) -> str:
        if self._by_qid is not None:
            raise BackendError("multi-episode replay: call for_episode() first")
        with self._lock:
            if self._cursor >= len(self._outputs):
                raise BackendError("replay exhausted")
            out = self._outputs[self._cursor]
            self._cursor += 1
            return out


class Cassette:
    """JSONL store of ``prompt hash -> completion`` for recording live calls.

    ``mode`` is ``"record"`` (call through and append), ``"replay"`` (never
    call; a miss is an error) or ``"auto"`` (replay hits, record misses).
    """

    def __init__(self, path: Union[str, Path], mode: str = "auto"):
        if mode not in ("record", "replay", "auto"):
            raise InvalidInput(f"unknown cassette mode {mode!r}")
        self.path = Path(path)
        self.mode = mode
        self._lock = threading.Lock()
        self._entries: Dict[str, str] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        row = json.loads(line)
                        self._entries[row["key"]] = row["completion"]

    @staticmethod
    def key(request: Mapping) -> str:
        return hashlib.sha256(json.dumps(request, sort_keys=True).encode()).hexdigest()

    def get(self, key: str) -> Optional[str]:
        if self.mode == "record":
            return None
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, completion: str) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = completion
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "completion": completion}, ensure_ascii=False) + "\n")


class _RateLimiter:
    def __init__(self, per_minute: Optional[int], clock=time.monotonic, sleep=time.sleep):
        self.per_minute = per_minute
        self._stamps: collections.deque = collections.deque()
        self._lock = threading.Lock()
        self._clock, self._sleep = clock, sleep

    def acquire(self) -> None:
        if not self.per_minute:
            return
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(wait)


class HttpChatBackend(LlmBackend):
    """OpenAI-compatible chat completions client.

    Transient failures (transport errors, 429, 5xx) are retried ``max_retries``
    times with exponential backoff; other failures raise
    :class:`BackendError` immediately. The API key is never logged or
    serialized.
    """

    def __init__(
        self,
        model: str,
        endpoint: Optional[str] = None,
        api_key: Optional[str] = None,
        temperature: float = 0.0,
        max_tokens: int = 512,
        stop: Optional[Sequence[str]] = ("\nAnswer from the ", "\nObservation:"),
        timeout: float = 60.0,
        max_retries: int = 2,
        backoff: float = 1.0,
        max_concurrency: int = 4,
        requests_per_minute: Optional[int] = None,
        cassette: Optional[Cassette] = None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise InvalidInput(f"no chat endpoint given and {ENDPOINT_ENV} is unset")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.label = model
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.stop = list(stop) if stop else None
        self.max_retries = max_retries
        self.backoff = backoff
        self.cassette = cassette
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_concurrency)
        self._limiter = _RateLimiter(requests_per_minute, sleep=sleep)
        headers = {"Authorization": f"Bearer {self._api_key}"} if self._api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def __repr__(self) -> str:
        return f"HttpChatBackend(model={self.model!r}, endpoint={self.endpoint!r}, temperature={self.temperature})"

    def config(self) -> Dict[str, object]:
        """Serializable settings, without credentials."""
        return {"model": self.model, "endpoint": self.endpoint, "temperature": self.temperature,
                "max_tokens": self.max_tokens, "stop": self.stop}

    def _body(self, prompt: str) -> Dict[str, object]:
        body: Dict[str, object] = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.stop:
            body["stop"] = self.stop
        return body

    def complete(self, prompt: str) -> str:
        if not prompt:
            raise InvalidInput("empty prompt")
        body = self._body(prompt)
        key = Cassette.key(body)
        if self.cassette is not None:
            hit = self.cassette.get(key)
            if hit is not None:
                return hit
            if self.cassette.mode == "replay":
                raise BackendError("cassette miss in replay mode")
        text = self._call_with_retries(body)
        if self.cassette is not None:
            self.cassette.put(key, text)
        return text

    def _call_with_retries(self, body: Dict[str, object]) -> str:
        attempt = 0
        while True:
            try:
                return self._call(body)
            except TransientBackendError as e:
                if attempt >= self.max_retries:
                    raise BackendError(f"giving up after {attempt + 1} attempts: {e}") from None
                delay = self.backoff * (2 ** attempt)
                log.info("transient LLM error (%s); retrying in %.1fs", e, delay)
                self._sleep(delay)
                attempt += 1

    def _call(self, body: Dict[str, object]) -> str:
        self._limiter.acquire()
        with self._slots:
            try:
                resp = self._client.post(f"{self.endpoint}/chat/completions", json=body)
            except httpx.TransportError as e:
                raise TransientBackendError(type(e).__name__) from None
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientBackendError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise BackendError(f"HTTP {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise BackendError("malformed chat completion response") from None
        if not isinstance(content, str):
            raise BackendError("completion has no text content")
        return content
