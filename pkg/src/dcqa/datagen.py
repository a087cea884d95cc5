"""Few-shot generation of tool-interacting divide-and-conquer finetuning data.

A generator LLM is prompted with the shot library and a training question.
In ``live`` mode it drives a real divide-and-conquer episode against the
tools; in ``invent`` mode it writes the whole transcript, tool replies
included, in one completion. Each transcript is validated (legal turn
order, final answer F1 against gold) and written as
``{"prompt", "completion", "meta"}`` JSONL.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import InvalidInput, ParseFailure
from .eval.metrics import token_f1
from .eval.records import QaRecord
from .llm import LlmBackend
from .orchestrator import Budget, Episode, OutcomeKind, Strategy, run_batch
from .prompts import Shot, assemble_prompt, load_shots, validate_shot
from .protocol import DividerEvent, FinalAnswer, check_alternation, parse_transcript, transcript_text
from .toolkit.base import ToolRegistry

DEFAULT_THRESHOLD = 0.8
TRAINING_SUBSET_SIZE = 2000

__all__ = [
    "FinetuneRecord", "GenReport", "assemble_prompt", "generate_dataset", "sample_training_subset",
    "validate_completion", "validate_record", "write_dataset", "load_shots", "Shot",
]


@dataclass(frozen=True)
class FinetuneRecord:
    qid: str
    prompt: str
    completion: str
    validated: bool
    f1: float
    tool_calls: int = 0

    def to_json(self) -> str:
        meta = {"qid": self.qid, "f1": self.f1, "tool_calls": self.tool_calls, "validated": self.validated}
        return json.dumps({"prompt": self.prompt, "completion": self.completion, "meta": meta},
                          ensure_ascii=False, sort_keys=True)


@dataclass
class GenReport:
    total: int = 0
    kept: int = 0
    records: int = 0
    parse_failures: int = 0
    budget_exhaustions: int = 0
    backend_errors: int = 0
    threshold: float = DEFAULT_THRESHOLD
    mode: str = "live"
    granularity: str = "transcript"

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def sample_training_subset(benchmark: Sequence[QaRecord], n: int = TRAINING_SUBSET_SIZE,
                           seed: int = 0) -> List[QaRecord]:
    """Uniform sample without replacement; picked records keep their input order."""
    if n < 0 or n > len(benchmark):
        raise InvalidInput(f"cannot sample {n} of {len(benchmark)} records")
    idx = sorted(random.Random(seed).sample(range(len(benchmark)), n))
    return [benchmark[i] for i in idx]


def validate_completion(completion: str, gold_answers) -> Tuple[bool, float, int]:
    """``(legal, f1, tool_calls)`` for a whole-transcript completion."""
    try:
        events = parse_transcript(completion)
    except ParseFailure:
        return False, 0.0, 0
    tool_calls = sum(1 for e in events if not isinstance(e, DividerEvent))
    if check_alternation(events) is not None:
        return False, 0.0, tool_calls
    final = events[-1].payload
    assert isinstance(final, FinalAnswer)
    return True, token_f1(list(final.items), gold_answers), tool_calls


def validate_record(record: FinetuneRecord, gold_answers, threshold: float = DEFAULT_THRESHOLD,
                    transcript: Optional[str] = None) -> FinetuneRecord:
    """Recompute ``validated`` / ``f1``. ``transcript`` overrides the completion (per-turn records)."""
    legal, f1, _ = validate_completion(transcript if transcript is not None else record.completion, gold_answers)
    return replace(record, validated=legal and f1 >= threshold, f1=f1)


def _episode_records(ep: Episode, prompt: str, granularity: str, threshold: float) -> List[FinetuneRecord]:
    full = transcript_text(ep.events)
    legal, f1, _ = validate_completion(full, ep.question.gold_answers)
    ok = legal and f1 >= threshold
    if granularity == "transcript":
        return [FinetuneRecord(ep.question.qid, prompt, full, ok, f1, ep.tool_calls)]
    records = []
    context = prompt
    for ev in ep.events:
        text = transcript_text([ev])
        if not text:
            continue
        if isinstance(ev, DividerEvent):
            records.append(FinetuneRecord(ep.question.qid, context, text, ok, f1, ep.tool_calls))
        context += "\n" + text
    return records


def generate_dataset(subset: Sequence[QaRecord], shots: Sequence[Shot], generator: LlmBackend,
                     tools: Optional[ToolRegistry] = None, budget: Budget = Budget(),
                     threshold: float = DEFAULT_THRESHOLD, granularity: str = "transcript",
                     mode: str = "live", run_seed: int = 0,
                     parallelism: int = 1) -> Tuple[List[FinetuneRecord], GenReport]:
    if granularity not in ("transcript", "turn"):
        raise InvalidInput(f"unknown granularity {granularity!r}")
    if mode not in ("live", "invent"):
        raise InvalidInput(f"unknown mode {mode!r}")
    for s in shots:
        validate_shot(s)
    report = GenReport(total=len(subset), threshold=threshold, mode=mode, granularity=granularity)
    records: List[FinetuneRecord] = []
    if not subset:
        return records, report

    if mode == "live":
        if tools is None:
            raise InvalidInput("live mode needs a tool registry")
        strategy = Strategy.divide_conquer(shots)
        episodes = run_batch(subset, strategy, budget, generator, tools, run_seed, parallelism)
        for ep in episodes:
            report.parse_failures += ep.outcome.kind is OutcomeKind.PARSE_FAILED
            report.budget_exhaustions += ep.outcome.kind is OutcomeKind.BUDGET_EXHAUSTED
            report.backend_errors += ep.outcome.kind is OutcomeKind.BACKEND_ERROR
            recs = _episode_records(ep, strategy.initial_prompt(ep.question), granularity, threshold)
            records.extend(recs)
            report.kept += bool(recs) and recs[0].validated
    else:
        for q in subset:
            prompt = assemble_prompt(shots, q.question, q.history)
            try:
                completion = generator.for_episode(q.qid).complete(prompt).strip()
            except Exception:  # noqa: BLE001
                report.backend_errors += 1
                continue
            legal, f1, calls = validate_completion(completion, q.gold_answers)
            if not legal:
                report.parse_failures += 1
            ok = legal and f1 >= threshold
            records.append(FinetuneRecord(q.qid, prompt, completion, ok, f1, calls))
            report.kept += ok
    report.records = len(records)
    return records, report


def write_dataset(records: Sequence[FinetuneRecord], path: Union[str, Path], only_validated: bool = True) -> int:
    rows = [r for r in records if r.validated or not only_validated]
    Path(path).write_text("".join(r.to_json() + "\n" for r in rows), encoding="utf-8")
    return len(rows)
