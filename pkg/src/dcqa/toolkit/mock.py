"""Stub, oracle and noisy tools for tests and controlled experiments."""

from __future__ import annotations

import hashlib
import random
import re
from typing import Mapping, Pattern, Sequence, Tuple, Union

from .base import ToolClient, ToolRequest, ToolResponse


class StubTool:
    """Always fails; stands in for an unconfigured tool."""

    def answer(self, request: ToolRequest) -> ToolResponse:
        return ToolResponse.failure()


class OracleTool:
    """Exact lookup in a ``(relation, subject) -> object`` fact table.

    ``pattern`` must capture the relation and subject, in that order; the
    last match in the question is used.
    """

    def __init__(self, facts: Mapping[Tuple[str, str], str], pattern: Union[str, Pattern[str]]):
        self.facts = dict(facts)
        self.pattern = re.compile(pattern) if isinstance(pattern, str) else pattern

    def answer(self, request: ToolRequest) -> ToolResponse:
        matches = list(self.pattern.finditer(request.question))
        if not matches:
            return ToolResponse.failure()
        key = (matches[-1].group(1), matches[-1].group(2))
        value = self.facts.get(key)
        if value is None:
            return ToolResponse.failure()
        return ToolResponse(value, 1.0, False)


def request_seed(seed: int, request: ToolRequest) -> int:
    h = hashlib.sha256()
    h.update(str(seed).encode())
    for part in (request.tool.value, request.question, *request.context_refs):
        h.update(b"\x00" + part.encode())
    return int.from_bytes(h.digest()[:8], "big")


class NoisyTool:
    """Wraps a tool and, with probability ``p``, swaps its answer for a wrong one.

    Randomness comes from ``(seed, request)`` only, so the same request gets
    the same outcome no matter how requests are scheduled.
    """

    def __init__(self, inner: ToolClient, p: float, seed: int, vocabulary: Sequence[str] = ()):
        if not 0.0 <= p <= 1.0:
            raise ValueError("noise probability must lie in [0, 1]")
        self.inner = inner
        self.p = p
        self.seed = seed
        self.vocabulary = list(vocabulary)

    def answer(self, request: ToolRequest) -> ToolResponse:
        resp = self.inner.answer(request)
        if self.p == 0.0:
            return resp
        rng = random.Random(request_seed(self.seed, request))
        if rng.random() >= self.p:
            return resp
        choices = [v for v in self.vocabulary if v != resp.answer]
        if not choices:
            return ToolResponse.failure()
        return ToolResponse(rng.choice(choices), resp.confidence, False)
