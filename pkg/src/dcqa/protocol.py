"""Turn grammar for divider / tool exchanges.

A divider turn is free text that ends either in a sub-question tagged with a
tool, e.g. ``Sub-question: Which teams ...? (Tool=Text)``, or in a final
answer marker ``[Answer: Chicago Bears, Cleveland Browns]``. Tool turns are
rendered as ``Answer from the Text Tool: ...``.

Transcripts serialize to JSONL, one event object per line. Field names:

* ``{"kind": "divider", "type": "sub_question", "rationale", "text", "tool", "raw"}``
* ``{"kind": "divider", "type": "final_answer", "rationale", "items", "answer_raw", "raw"}``
* ``{"kind": "tool_reply", "tool", "answer", "failed"}`` (+ ``latency_ms`` when timing is kept)
* ``{"kind": "system", "text", "detail"}``
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import ParseFailure

NO_RESULT = "NO_RESULT"


class ToolKind(str, enum.Enum):
    TEXT = "Text"
    TABLE = "Table"
    IMAGE = "Image"
    SEARCH = "Search"

    @classmethod
    def parse(cls, name: str) -> "ToolKind":
        key = " ".join(str(name).split()).lower()
        try:
            return _TOOL_ALIASES[key]
        except KeyError:
            raise ParseFailure(f"unknown tool {name!r}") from None

    def __str__(self) -> str:
        return self.value


_TOOL_ALIASES = {
    "text": ToolKind.TEXT,
    "textqa": ToolKind.TEXT,
    "table": ToolKind.TABLE,
    "tableqa": ToolKind.TABLE,
    "image": ToolKind.IMAGE,
    "imageqa": ToolKind.IMAGE,
    "search": ToolKind.SEARCH,
    "web search": ToolKind.SEARCH,
}

# Fixed registry / iteration order.
TOOL_ORDER: Tuple[ToolKind, ...] = (ToolKind.TEXT, ToolKind.TABLE, ToolKind.IMAGE, ToolKind.SEARCH)


@dataclass(frozen=True)
class SubQuestion:
    text: str
    tool: ToolKind


@dataclass(frozen=True)
class FinalAnswer:
    items: Tuple[str, ...]
    raw: str


@dataclass(frozen=True)
class DividerEvent:
    payload: Union[SubQuestion, FinalAnswer]
    rationale: str = ""
    # verbatim LLM output this event was parsed from; not part of identity
    raw: str = field(default="", compare=False)

    @property
    def is_final(self) -> bool:
        return isinstance(self.payload, FinalAnswer)


@dataclass(frozen=True)
class ToolReplyEvent:
    tool: ToolKind
    answer: str
    failed: bool = False
    latency_ms: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SystemNote:
    text: str
    detail: str = ""


TranscriptEvent = Union[DividerEvent, ToolReplyEvent, SystemNote]


_ANSWER_RE = re.compile(r"\[\s*answer\s*:(.*?)\]", re.IGNORECASE | re.DOTALL)
_TOOL_RE = re.compile(r"\(\s*tool\s*=\s*([^()\n]*?)\s*\)", re.IGNORECASE)
_SUBQ_RE = re.compile(r"sub-question\s*:", re.IGNORECASE)
_REPLY_RE = re.compile(r"^Answer from the (\w+) Tool:[ \t]?(.*)$")

_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {v: k for k, v in _OPEN.items()}


def split_final_answer(raw: str) -> List[str]:
    """Split an answer list on top-level ``", "`` separators.

    Commas inside brackets or double quotes do not split. Empty items are
    dropped; order is preserved.
    """
    items: List[str] = []
    stack: List[str] = []
    in_quote = False
    start = 0
    n = len(raw)
    for i, ch in enumerate(raw):
        if ch == '"':
            in_quote = not in_quote
        elif in_quote:
            continue
        elif ch in _OPEN:
            stack.append(ch)
        elif ch in _CLOSE:
            if stack and stack[-1] == _CLOSE[ch]:
                stack.pop()
        elif ch == "," and not stack and (i + 1 == n or raw[i + 1].isspace()):
            items.append(raw[start:i])
            start = i + 1
    items.append(raw[start:])
    return [item.strip() for item in items if item.strip()]


def parse_divider_output(text: str) -> DividerEvent:
    """Extract the sub-question or final answer from one divider turn.

    A final-answer marker anywhere in the text wins over sub-question
    markers; among several markers of the same kind the last one is used.
    Raises :class:`ParseFailure` when nothing usable is found.
    """
    if not isinstance(text, str):
        raise ParseFailure("output is not text")

    answers = list(_ANSWER_RE.finditer(text))
    if answers:
        m = answers[-1]
        raw = m.group(1).strip()
        items = split_final_answer(raw)
        if not items:
            raise ParseFailure("empty final answer")
        return DividerEvent(FinalAnswer(tuple(items), raw), text[: m.start()].strip(), raw=text)

    tools = list(_TOOL_RE.finditer(text))
    if not tools:
        raise ParseFailure("no marker found")
    suffix = tools[-1]
    markers = [m for m in _SUBQ_RE.finditer(text, 0, suffix.start())]
    if not markers:
        raise ParseFailure("tool tag without a Sub-question marker")
    marker = markers[-1]
    tool = ToolKind.parse(suffix.group(1))
    # a sub-question spanning lines is joined up to the tool suffix
    question = " ".join(text[marker.end(): suffix.start()].split())
    if not question:
        raise ParseFailure("empty sub-question")
    return DividerEvent(SubQuestion(question, tool), text[: marker.start()].strip(), raw=text)


def render_divider(event: DividerEvent) -> str:
    """Canonical text for a divider event; inverse of :func:`parse_divider_output`."""
    p = event.payload
    if isinstance(p, SubQuestion):
        body = f"Sub-question: {p.text} (Tool={p.tool.value})"
    else:
        body = f"[Answer: {p.raw}]"
    return f"{event.rationale} {body}" if event.rationale else body


def render_tool_reply(tool: ToolKind, answer: str) -> str:
    return f"Answer from the {ToolKind(tool).value} Tool: {answer}"


def sub_question(text: str, tool: ToolKind, rationale: str = "") -> DividerEvent:
    ev = DividerEvent(SubQuestion(text, ToolKind(tool)), rationale)
    return DividerEvent(ev.payload, rationale, raw=render_divider(ev))


def final_answer(items: Sequence[str], rationale: str = "") -> DividerEvent:
    raw = ", ".join(items)
    ev = DividerEvent(FinalAnswer(tuple(split_final_answer(raw)), raw), rationale)
    return DividerEvent(ev.payload, rationale, raw=render_divider(ev))


def transcript_text(events: Iterable[TranscriptEvent]) -> str:
    """Plain-text transcript of divider and tool turns (system notes omitted)."""
    lines = []
    for ev in events:
        if isinstance(ev, DividerEvent):
            lines.append((ev.raw or render_divider(ev)).strip())
        elif isinstance(ev, ToolReplyEvent):
            lines.append(render_tool_reply(ev.tool, one_line(ev.answer)))
    return "\n".join(lines)


def one_line(s: str) -> str:
    return " ".join(s.splitlines()).strip() if "\n" in s or "\r" in s else s


def parse_transcript(text: str) -> List[TranscriptEvent]:
    """Split a plain-text transcript back into divider and tool-reply events.

    Lines of the form ``Answer from the X Tool: ...`` are tool replies; all
    other lines accumulate into the surrounding divider turn.
    """
    events: List[TranscriptEvent] = []
    chunk: List[str] = []

    def flush() -> None:
        body = "\n".join(chunk).strip()
        chunk.clear()
        if body:
            events.append(parse_divider_output(body))

    for line in text.splitlines():
        m = _REPLY_RE.match(line.strip())
        if m:
            flush()
            answer = m.group(2).strip()
            events.append(ToolReplyEvent(ToolKind.parse(m.group(1)), answer, failed=answer == NO_RESULT))
        else:
            chunk.append(line)
    flush()
    return events


def check_alternation(events: Sequence[TranscriptEvent]) -> Optional[str]:
    """Return ``None`` for a legal transcript, else a reason string.

    Legal: (SubQuestion, ToolReply)* FinalAnswer, with each reply coming from
    the tool its sub-question named. System notes are ignored.
    """
    turns = [e for e in events if not isinstance(e, SystemNote)]
    if not turns:
        return "empty transcript"
    for i, ev in enumerate(turns[:-1]):
        if i % 2 == 0:
            if not isinstance(ev, DividerEvent) or ev.is_final:
                return f"turn {i}: expected a sub-question"
        else:
            prev = turns[i - 1]
            if not isinstance(ev, ToolReplyEvent):
                return f"turn {i}: expected a tool reply"
            if ev.tool != prev.payload.tool:  # type: ignore[union-attr]
                return f"turn {i}: reply from {ev.tool.value}, asked {prev.payload.tool.value}"  # type: ignore[union-attr]
    last = turns[-1]
    if len(turns) % 2 == 0 or not isinstance(last, DividerEvent) or not last.is_final:
        return "transcript does not end in a final answer"
    return None


# -- JSONL -------------------------------------------------------------------

def event_to_dict(event: TranscriptEvent, include_timing: bool = False) -> Dict[str, Any]:
    if isinstance(event, DividerEvent):
        p = event.payload
        if isinstance(p, SubQuestion):
            d: Dict[str, Any] = {"kind": "divider", "type": "sub_question", "rationale": event.rationale,
                                 "text": p.text, "tool": p.tool.value}
        else:
            d = {"kind": "divider", "type": "final_answer", "rationale": event.rationale,
                 "items": list(p.items), "answer_raw": p.raw}
        d["raw"] = event.raw
        return d
    if isinstance(event, ToolReplyEvent):
        d = {"kind": "tool_reply", "tool": event.tool.value, "answer": event.answer, "failed": event.failed}
        if include_timing:
            d["latency_ms"] = event.latency_ms
        return d
    if isinstance(event, SystemNote):
        return {"kind": "system", "text": event.text, "detail": event.detail}
    raise TypeError(f"not a transcript event: {event!r}")


def event_from_dict(d: Dict[str, Any]) -> TranscriptEvent:
    kind = d.get("kind")
    if kind == "divider":
        if d.get("type") == "sub_question":
            payload: Union[SubQuestion, FinalAnswer] = SubQuestion(d["text"], ToolKind.parse(d["tool"]))
        elif d.get("type") == "final_answer":
            payload = FinalAnswer(tuple(d["items"]), d["answer_raw"])
        else:
            raise ValueError(f"unknown divider type {d.get('type')!r}")
        return DividerEvent(payload, d.get("rationale", ""), raw=d.get("raw", ""))
    if kind == "tool_reply":
        return ToolReplyEvent(ToolKind.parse(d["tool"]), d["answer"], bool(d.get("failed", False)),
                              latency_ms=float(d.get("latency_ms", 0.0)))
    if kind == "system":
        return SystemNote(d["text"], d.get("detail", ""))
    raise ValueError(f"unknown event kind {kind!r}")


def dumps_events(events: Iterable[TranscriptEvent], include_timing: bool = False) -> str:
    return "".join(json.dumps(event_to_dict(e, include_timing), ensure_ascii=False, sort_keys=True) + "\n"
                   for e in events)


def loads_events(text: str) -> List[TranscriptEvent]:
    return [event_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
