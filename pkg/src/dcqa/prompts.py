"""Instructions, few-shot examples and prompt assembly.

Prompt layout for the divide-and-conquer loop::

    <instruction>

    Open Question: <shot 1 question>
    <shot 1 divider / tool turns>
    ...

    Q: <history question>        # conversational benchmarks only
    A: <history answer>
    Open Question: <target question>
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .errors import InvalidShot, ParseFailure
from .protocol import (
    DividerEvent,
    ToolKind,
    ToolReplyEvent,
    TranscriptEvent,
    check_alternation,
    parse_divider_output,
    render_divider,
    transcript_text,
)

DIVIDE_CONQUER_INSTRUCTION = (
    "Your task is to answer a given Open Question. However, the Open Question needs information from "
    "different modules, which are Image module, Text module, and Text module. "
    "You can divide the Open Question into a simpler Sub-question and wait to receive the answer it. "
    "Each time you can ask a Sub-question from only one module. "
    "If the provided answer was not complete, you ask a new Sub-question from different or the same module. "
    "You can repeat this loop until you get the complete information to answer the Open Question."
)

TOOLS_ANSWER_INSTRUCTION = (
    "Your task is to answer a given Open Question. Each of the Text, Table, Image and Search tools was "
    "asked the Open Question and their answers are listed below. Using these answers, reply with the "
    "final answer in the form [Answer: ...]."
)

REACT_INSTRUCTION = (
    "Answer the question by interleaving Thought, Action and Observation steps. "
    "Thought reasons about the current situation. Action must be one of:\n"
    "Text[query]: ask the text tool, which answers from text passages.\n"
    "Table[query]: ask the table tool, which answers from tables.\n"
    "Image[query]: ask the image tool, which answers questions about images.\n"
    "Search[query]: run a web search.\n"
    "Finish[answer]: return the answer; separate several answers with \", \".\n"
    "Write one Thought and one Action per step, then wait for the Observation."
)

CORRECTIVE_NOTE = "Reply with exactly one Sub-question: ... (Tool=X) or [Answer: ...]."
REACT_CORRECTIVE_NOTE = "Reply with one Thought and one Action: Tool[input] or Finish[answer]."


@dataclass(frozen=True)
class Shot:
    question: str
    turns: Tuple[TranscriptEvent, ...]
    instruction: str = DIVIDE_CONQUER_INSTRUCTION
    gold: Tuple[str, ...] = ()
    id: str = ""
    modality: str = ""

    def render(self) -> str:
        return f"Open Question: {self.question}\n{transcript_text(self.turns)}"

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "Shot":
        turns: List[TranscriptEvent] = []
        for t in d["turns"]:
            if t["role"] == "divider":
                try:
                    turns.append(parse_divider_output(t["text"]))
                except ParseFailure as e:
                    raise InvalidShot(f"shot {d.get('id', '?')}: {e.reason}") from None
            elif t["role"] == "tool":
                answer = t["answer"]
                turns.append(ToolReplyEvent(ToolKind.parse(t["tool"]), answer, failed=answer == "NO_RESULT"))
            else:
                raise InvalidShot(f"unknown turn role {t['role']!r}")
        return cls(
            question=d["question"],
            turns=tuple(turns),
            instruction=d.get("instruction", DIVIDE_CONQUER_INSTRUCTION),
            gold=tuple(d.get("gold", ())),
            id=d.get("id", ""),
            modality=d.get("modality", ""),
        )

    def to_dict(self) -> Dict[str, Any]:
        turns = []
        for t in self.turns:
            if isinstance(t, DividerEvent):
                turns.append({"role": "divider", "text": t.raw or render_divider(t)})
            elif isinstance(t, ToolReplyEvent):
                turns.append({"role": "tool", "tool": t.tool.value, "answer": t.answer})
        return {"id": self.id, "modality": self.modality, "instruction": self.instruction,
                "question": self.question, "gold": list(self.gold), "turns": turns}


def validate_shot(shot: Shot) -> None:
    """Raise :class:`InvalidShot` unless the shot is a legal, re-parseable transcript."""
    reason = check_alternation(shot.turns)
    if reason:
        raise InvalidShot(f"shot {shot.id or shot.question[:40]!r}: {reason}")
    for ev in shot.turns:
        if isinstance(ev, DividerEvent):
            try:
                again = parse_divider_output(render_divider(ev))
                raw_again = parse_divider_output(ev.raw) if ev.raw else ev
            except ParseFailure as e:
                raise InvalidShot(f"shot turn does not re-parse: {e.reason}") from None
            if again != ev or raw_again != ev:
                raise InvalidShot("shot turn does not round-trip")


def load_shots(path: Optional[Union[str, Path]] = None) -> List[Shot]:
    """Load shots from JSONL; defaults to the eight bundled shots."""
    if path is None:
        text = resources.files("dcqa.shots").joinpath("default.jsonl").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return [Shot.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def history_lines(history: Sequence[Tuple[str, str]]) -> str:
    return "".join(f"Q: {q}\nA: {a}\n" for q, a in history)


def assemble_prompt(shots: Sequence[Shot], question: str, history: Sequence[Tuple[str, str]] = (),
                    instruction: Optional[str] = None) -> str:
    """Instruction, rendered shots, then the target question.

    All shots must share one instruction, which heads the prompt.
    """
    instructions = {s.instruction for s in shots}
    if len(instructions) > 1:
        raise InvalidShot("shots in one prompt must share the same instruction")
    for s in shots:
        validate_shot(s)
    head = instruction or (instructions.pop() if instructions else DIVIDE_CONQUER_INSTRUCTION)
    blocks = [head] + [s.render() for s in shots]
    blocks.append(f"{history_lines(history)}Open Question: {question}")
    return "\n\n".join(blocks)


def fit_prompt(shots: Sequence[Shot], question: str, history: Sequence[Tuple[str, str]] = (),
               instruction: Optional[str] = None, max_chars: Optional[int] = None) -> Tuple[str, int]:
    """:func:`assemble_prompt` under a character budget.

    Oldest shots are dropped first until the prompt fits. Returns the prompt
    and how many shots were dropped; with every shot gone the zero-shot
    prompt is returned even if it is still too long.
    """
    shots = list(shots)
    dropped = 0
    prompt = assemble_prompt(shots, question, history, instruction)
    while max_chars is not None and len(prompt) > max_chars and dropped < len(shots):
        dropped += 1
        prompt = assemble_prompt(shots[dropped:], question, history, instruction)
    return prompt, dropped
