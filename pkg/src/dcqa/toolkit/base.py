from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Dict, Iterator, Mapping, Optional, Protocol, Tuple

from ..errors import InvalidInput
from ..protocol import NO_RESULT, TOOL_ORDER, ToolKind

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class ToolRequest:
    tool: ToolKind
    question: str
    context_refs: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.question or not self.question.strip():
            raise InvalidInput("tool request needs a non-empty question")
        object.__setattr__(self, "tool", ToolKind(self.tool))
        object.__setattr__(self, "context_refs", tuple(self.context_refs))


@dataclass(frozen=True)
class ToolResponse:
    answer: str
    confidence: Optional[float] = None
    failed: bool = False

    @classmethod
    def failure(cls) -> "ToolResponse":
        return cls(NO_RESULT, None, True)


class ToolClient(Protocol):
    def answer(self, request: ToolRequest) -> ToolResponse: ...


class ToolRegistry(Mapping[ToolKind, ToolClient]):
    """Exactly one client per tool kind, iterated Text, Table, Image, Search."""

    def __init__(self, clients: Mapping[ToolKind, ToolClient]):
        clients = {ToolKind(k): v for k, v in clients.items()}
        missing = [k.value for k in TOOL_ORDER if k not in clients]
        if missing:
            raise InvalidInput(f"tool registry missing: {', '.join(missing)}")
        self._clients: Dict[ToolKind, ToolClient] = {k: clients[k] for k in TOOL_ORDER}

    def __getitem__(self, kind: ToolKind) -> ToolClient:
        return self._clients[ToolKind(kind)]

    def __iter__(self) -> Iterator[ToolKind]:
        return iter(TOOL_ORDER)

    def __len__(self) -> int:
        return len(self._clients)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k.value}={type(c).__name__}" for k, c in self._clients.items())
        return f"ToolRegistry({inner})"


def dispatch(registry: ToolRegistry, request: ToolRequest) -> ToolResponse:
    """Route a request to its tool. Never raises; failures come back in-band."""
    try:
        resp = registry[request.tool].answer(request)
    except Exception as e:  # noqa: BLE001 - tool failures must not cross into the loop
        log.warning("%s tool failed: %s", request.tool.value, e)
        return ToolResponse.failure()
    if not isinstance(resp, ToolResponse):
        return ToolResponse.failure()
    if resp.failed or not isinstance(resp.answer, str) or not resp.answer.strip():
        return ToolResponse.failure()
    conf = resp.confidence
    if conf is not None and not (0.0 <= conf <= 1.0):
        resp = replace(resp, confidence=None)
    return resp


def timed_dispatch(registry: ToolRegistry, request: ToolRequest) -> Tuple[ToolResponse, float]:
    start = time.perf_counter()
    resp = dispatch(registry, request)
    return resp, (time.perf_counter() - start) * 1000.0
