"""Episode runner: the divider / tool loop and its two baselines.

Three strategies share one budget and one transcript format:

* ``DIVIDE_CONQUER`` - the LLM asks one tool-tagged sub-question per turn,
  the named tool answers, and the reply is appended to the context until
  the LLM emits ``[Answer: ...]``.
* ``TOOLS_ANSWER`` - every tool answers the original question once; one LLM
  call turns the four replies into an answer.
* ``REACT`` - Thought / Action / Observation turns with
  ``Action: Tool[input]`` and ``Action: Finish[answer]``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import BackendError, InvalidInput, ParseFailure
from .eval.records import QaRecord
from .llm import LlmBackend
from .prompts import (
    CORRECTIVE_NOTE,
    REACT_CORRECTIVE_NOTE,
    REACT_INSTRUCTION,
    TOOLS_ANSWER_INSTRUCTION,
    Shot,
    fit_prompt,
    history_lines,
    load_shots,
)
from .protocol import (
    DividerEvent,
    FinalAnswer,
    SubQuestion,
    SystemNote,
    ToolKind,
    ToolReplyEvent,
    TranscriptEvent,
    event_from_dict,
    event_to_dict,
    one_line,
    parse_divider_output,
    render_tool_reply,
    split_final_answer,
)
from .toolkit.base import ToolRegistry, ToolRequest, timed_dispatch

DEFAULT_MAX_TOOL_CALLS = 12


class StrategyKind(str, enum.Enum):
    DIVIDE_CONQUER = "divide-conquer"
    TOOLS_ANSWER = "tools-answer"
    REACT = "react"


# -- ReAct grammar -------------------------------------------------------------

_ACTION_RE = re.compile(r"^\s*Action\s*\d*\s*:\s*([A-Za-z][A-Za-z ]*?)\s*\[(.*)\]\s*$", re.IGNORECASE)
_THOUGHT_RE = re.compile(r"^\s*Thought\s*\d*\s*:\s*", re.IGNORECASE)


def parse_react_output(text: str) -> DividerEvent:
    """Parse the last ``Action: Name[input]`` line of a ReAct turn."""
    if not isinstance(text, str):
        raise ParseFailure("output is not text")
    lines = text.splitlines()
    for idx in range(len(lines) - 1, -1, -1):
        m = _ACTION_RE.match(lines[idx])
        if m:
            break
    else:
        raise ParseFailure("no action found")
    name, arg = m.group(1), " ".join(m.group(2).split())
    thought = "\n".join(lines[:idx]).strip()
    thought = _THOUGHT_RE.sub("", thought, count=1).strip()
    if name.strip().lower() == "finish":
        items = split_final_answer(arg)
        if not items:
            raise ParseFailure("empty final answer")
        return DividerEvent(FinalAnswer(tuple(items), arg), thought, raw=text)
    tool = ToolKind.parse(name)
    if not arg:
        raise ParseFailure("empty action input")
    return DividerEvent(SubQuestion(arg, tool), thought, raw=text)


def render_react(event: DividerEvent) -> str:
    p = event.payload
    action = f"Finish[{p.raw}]" if isinstance(p, FinalAnswer) else f"{p.tool.value}[{p.text}]"
    return f"Thought: {event.rationale}\nAction: {action}"


# -- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class Budget:
    max_tool_calls: int = DEFAULT_MAX_TOOL_CALLS
    max_parse_retries: int = 1

    def __post_init__(self) -> None:
        if int(self.max_tool_calls) < 1:
            raise InvalidInput("max_tool_calls must be at least 1")
        if int(self.max_parse_retries) < 0:
            raise InvalidInput("max_parse_retries must be non-negative")


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    shots: Tuple[Shot, ...] = ()
    instruction: Optional[str] = None
    # "gold": tools see the question's context refs; "global": whole stores
    context_mode: str = "gold"
    # character budget for the initial prompt; oldest shots are dropped first
    max_prompt_chars: Optional[int] = None

    def __post_init__(self) -> None:
        if self.context_mode not in ("gold", "global"):
            raise InvalidInput(f"unknown context mode {self.context_mode!r}")
        if self.max_prompt_chars is not None and self.max_prompt_chars < 1:
            raise InvalidInput("max_prompt_chars must be positive")

    @classmethod
    def divide_conquer(cls, shots: Optional[Sequence[Shot]] = None, **kw) -> "Strategy":
        return cls(StrategyKind.DIVIDE_CONQUER, tuple(load_shots() if shots is None else shots), **kw)

    @classmethod
    def tools_answer(cls, **kw) -> "Strategy":
        return cls(StrategyKind.TOOLS_ANSWER, **kw)

    @classmethod
    def react(cls, **kw) -> "Strategy":
        return cls(StrategyKind.REACT, **kw)

    @classmethod
    def from_name(cls, name: str, **kw) -> "Strategy":
        kind = StrategyKind(name)
        return {StrategyKind.DIVIDE_CONQUER: cls.divide_conquer, StrategyKind.TOOLS_ANSWER: cls.tools_answer,
                StrategyKind.REACT: cls.react}[kind](**kw)

    @property
    def name(self) -> str:
        return self.kind.value

    def initial_prompt(self, q: QaRecord) -> str:
        return self.fit(q)[0]

    def fit(self, q: QaRecord) -> Tuple[str, int]:
        """Initial prompt and the number of shots dropped to fit ``max_prompt_chars``."""
        if self.kind is StrategyKind.DIVIDE_CONQUER:
            return fit_prompt(self.shots, q.question, q.history, self.instruction, self.max_prompt_chars)
        return self._zero_shot(q), 0

    def _zero_shot(self, q: QaRecord) -> str:
        if self.kind is StrategyKind.REACT:
            return f"{self.instruction or REACT_INSTRUCTION}\n\n{history_lines(q.history)}Question: {q.question}"
        return f"{self.instruction or TOOLS_ANSWER_INSTRUCTION}\n\n{history_lines(q.history)}Open Question: {q.question}"


# -- episodes ------------------------------------------------------------------

class OutcomeKind(str, enum.Enum):
    ANSWERED = "answered"
    BUDGET_EXHAUSTED = "budget_exhausted"
    PARSE_FAILED = "parse_failed"
    BACKEND_ERROR = "backend_error"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    items: Tuple[str, ...] = ()
    detail: str = ""


@dataclass(frozen=True)
class Episode:
    question: QaRecord
    strategy: str
    events: Tuple[TranscriptEvent, ...]
    tool_calls: int
    outcome: Outcome
    seed: int
    llm_calls: int = 0

    @property
    def prediction(self) -> List[str]:
        """Answer items; empty unless the episode was answered."""
        return list(self.outcome.items) if self.outcome.kind is OutcomeKind.ANSWERED else []

    def header(self) -> Dict[str, Any]:
        return {
            "kind": "episode",
            "qid": self.question.qid,
            "question": self.question.question,
            "strategy": self.strategy,
            "seed": self.seed,
            "outcome": self.outcome.kind.value,
            "answer": list(self.outcome.items),
            "detail": self.outcome.detail,
            "tool_calls": self.tool_calls,
            "llm_calls": self.llm_calls,
        }

    def dumps(self, include_timing: bool = False) -> str:
        lines = [self.header()] + [event_to_dict(e, include_timing) for e in self.events]
        return "".join(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n" for d in lines)


def episode_seed(run_seed: int, qid: str) -> int:
    digest = hashlib.sha256(f"{run_seed}\x00{qid}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _refs(strategy: Strategy, q: QaRecord) -> Tuple[str, ...]:
    return tuple(q.all_refs) if strategy.context_mode == "gold" else ()


def run_episode(question: QaRecord, strategy: Strategy, budget: Budget, llm: LlmBackend,
                tools: ToolRegistry, seed: int = 0) -> Episode:
    """Run one question to completion. Backend and parse failures are recorded, not raised."""
    runner = _ToolsAnswerRun if strategy.kind is StrategyKind.TOOLS_ANSWER else _LoopRun
    return runner(question, strategy, budget, llm, tools, seed).run()


class _Run:
    def __init__(self, question, strategy, budget, llm, tools, seed):
        self.q: QaRecord = question
        self.strategy: Strategy = strategy
        self.budget: Budget = budget
        self.llm: LlmBackend = llm
        self.tools: ToolRegistry = tools
        self.seed = seed
        self.events: List[TranscriptEvent] = []
        self.tool_calls = 0
        self.llm_calls = 0

    def finish(self, kind: OutcomeKind, items: Sequence[str] = (), detail: str = "") -> Episode:
        return Episode(self.q, self.strategy.name, tuple(self.events), self.tool_calls,
                       Outcome(kind, tuple(items), detail), self.seed, self.llm_calls)

    def complete(self, prompt: str) -> str:
        self.llm_calls += 1
        try:
            out = self.llm.complete(prompt)
        except BackendError:
            raise
        except Exception as e:  # noqa: BLE001 - policy bugs count as backend failures
            raise BackendError(f"{type(e).__name__}: {e}") from None
        if not isinstance(out, str):
            raise BackendError("backend returned non-text output")
        return out

    def call_tool(self, tool: ToolKind, text: str) -> ToolReplyEvent:
        resp, latency = timed_dispatch(self.tools, ToolRequest(tool, text, _refs(self.strategy, self.q)))
        self.tool_calls += 1
        ev = ToolReplyEvent(tool, resp.answer, resp.failed, latency)
        self.events.append(ev)
        return ev


class _LoopRun(_Run):
    def run(self) -> Episode:
        react = self.strategy.kind is StrategyKind.REACT
        parse = parse_react_output if react else parse_divider_output
        corrective = REACT_CORRECTIVE_NOTE if react else CORRECTIVE_NOTE
        try:
            self.llm = self.llm.for_episode(self.q.qid)
        except BackendError as e:
            return self.finish(OutcomeKind.BACKEND_ERROR, detail=str(e))
        prompt, dropped = self.strategy.fit(self.q)
        if dropped:
            self.events.append(SystemNote(f"dropped {dropped} oldest shot(s) to fit the prompt limit"))
        retries = 0
        while True:
            try:
                out = self.complete(prompt)
            except BackendError as e:
                return self.finish(OutcomeKind.BACKEND_ERROR, detail=str(e))
            try:
                ev = parse(out)
            except ParseFailure as e:
                if retries < self.budget.max_parse_retries:
                    retries += 1
                    self.events.append(SystemNote(corrective, detail=out))
                    prompt += f"\n{out.strip()}\n{corrective}"
                    continue
                self.events.append(SystemNote(f"parse failed: {e.reason}", detail=out))
                return self.finish(OutcomeKind.PARSE_FAILED, detail=e.reason)
            retries = 0
            self.events.append(ev)
            prompt += f"\n{out.strip()}"
            if isinstance(ev.payload, FinalAnswer):
                return self.finish(OutcomeKind.ANSWERED, ev.payload.items)
            if self.tool_calls >= self.budget.max_tool_calls:
                self.events.append(SystemNote(f"tool-call budget of {self.budget.max_tool_calls} exhausted"))
                return self.finish(OutcomeKind.BUDGET_EXHAUSTED)
            reply = self.call_tool(ev.payload.tool, ev.payload.text)
            answer = one_line(reply.answer)
            prompt += f"\nObservation: {answer}" if react else "\n" + render_tool_reply(reply.tool, answer)


class _ToolsAnswerRun(_Run):
    def run(self) -> Episode:
        try:
            self.llm = self.llm.for_episode(self.q.qid)
        except BackendError as e:
            return self.finish(OutcomeKind.BACKEND_ERROR, detail=str(e))
        lines = []
        for kind in self.tools:
            if self.tool_calls >= self.budget.max_tool_calls:
                self.events.append(SystemNote(f"tool-call budget of {self.budget.max_tool_calls} exhausted"))
                return self.finish(OutcomeKind.BUDGET_EXHAUSTED)
            reply = self.call_tool(kind, self.q.question)
            lines.append(render_tool_reply(kind, one_line(reply.answer)))
        prompt = self.strategy.initial_prompt(self.q) + "\n" + "\n".join(lines)
        try:
            out = self.complete(prompt)
        except BackendError as e:
            return self.finish(OutcomeKind.BACKEND_ERROR, detail=str(e))
        try:
            ev = parse_divider_output(out)
        except ParseFailure as e:
            self.events.append(SystemNote(f"parse failed: {e.reason}", detail=out))
            return self.finish(OutcomeKind.PARSE_FAILED, detail=e.reason)
        self.events.append(ev)
        if not isinstance(ev.payload, FinalAnswer):
            self.events.append(SystemNote("expected a final answer"))
            return self.finish(OutcomeKind.PARSE_FAILED, detail="no final answer")
        return self.finish(OutcomeKind.ANSWERED, ev.payload.items)


def run_batch(questions: Sequence[QaRecord], strategy: Strategy, budget: Budget, llm: LlmBackend,
              tools: ToolRegistry, run_seed: int = 0, parallelism: int = 1) -> List[Episode]:
    """Run many episodes; results are in input order and independent of ``parallelism``."""
    questions = list(questions)
    if not questions:
        raise InvalidInput("run_batch needs at least one question")
    if parallelism < 1:
        raise InvalidInput("parallelism must be positive")

    def one(q: QaRecord) -> Episode:
        return run_episode(q, strategy, budget, llm, tools, episode_seed(run_seed, q.qid))

    if parallelism == 1:
        return [one(q) for q in questions]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, questions))


# -- transcripts ----------------------------------------------------------------

def llm_outputs(episode: Union[Episode, Sequence[TranscriptEvent]]) -> List[str]:
    """Raw LLM outputs of an episode in call order (input for :class:`ReplayBackend`)."""
    events = episode.events if isinstance(episode, Episode) else episode
    outs = []
    for ev in events:
        if isinstance(ev, DividerEvent):
            outs.append(ev.raw)
        elif isinstance(ev, SystemNote) and ev.detail:
            outs.append(ev.detail)
    return outs


def dumps_episodes(episodes: Iterable[Episode], include_timing: bool = False) -> str:
    return "".join(ep.dumps(include_timing) for ep in episodes)


def write_episodes(episodes: Iterable[Episode], path: Union[str, Path], include_timing: bool = False) -> None:
    Path(path).write_text(dumps_episodes(episodes, include_timing), encoding="utf-8")


def read_transcripts(path: Union[str, Path]) -> List[Tuple[Dict[str, Any], List[TranscriptEvent]]]:
    """Parse a transcript JSONL file into ``(header, events)`` pairs."""
    out: List[Tuple[Dict[str, Any], List[TranscriptEvent]]] = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            d = json.loads(line)
            if d.get("kind") == "episode":
                out.append((d, []))
            elif not out:
                raise ValueError(f"{path}:{lineno}: event before any episode header")
            else:
                out[-1][1].append(event_from_dict(d))
    return out


def load_episodes(path: Union[str, Path], records: Mapping[str, QaRecord]) -> List[Episode]:
    episodes = []
    for header, events in read_transcripts(path):
        episodes.append(Episode(
            question=records[header["qid"]],
            strategy=header["strategy"],
            events=tuple(events),
            tool_calls=int(header["tool_calls"]),
            outcome=Outcome(OutcomeKind(header["outcome"]), tuple(header.get("answer", ())), header.get("detail", "")),
            seed=int(header["seed"]),
            llm_calls=int(header.get("llm_calls", 0)),
        ))
    return episodes
