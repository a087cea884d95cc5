from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

from ..errors import InvalidInput
from .metrics import exact_match, token_f1

DEFAULT_BUDGET = 12
COLUMNS = ("LLM", "Size", "Strategy", "EM", "F1", "Average Tool Calls")


@dataclass(frozen=True)
class QuestionScore:
    qid: str
    em: int
    f1: float
    tool_calls: int


@dataclass
class EvalReport:
    scores: List[QuestionScore]
    strategy: str
    llm: str = ""
    size: str = "NA"
    budget: int = DEFAULT_BUDGET
    context_mode: str = ""

    @property
    def em(self) -> float:
        return 100.0 * sum(s.em for s in self.scores) / len(self.scores)

    @property
    def f1(self) -> float:
        return 100.0 * sum(s.f1 for s in self.scores) / len(self.scores)

    @property
    def avg_tool_calls(self) -> float:
        return sum(s.tool_calls for s in self.scores) / len(self.scores)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "llm": self.llm,
            "size": self.size,
            "strategy": self.strategy,
            "budget": self.budget,
            "context_mode": self.context_mode,
            "EM": self.em,
            "F1": self.f1,
            "avg_tool_calls": self.avg_tool_calls,
            "n": len(self.scores),
            "questions": [{"qid": s.qid, "em": s.em, "f1": s.f1, "tool_calls": s.tool_calls} for s in self.scores],
        }


def score_predictions(rows: Sequence[Tuple[str, Sequence[str], Any, int]], strategy: str, **kw) -> EvalReport:
    """Build a report from ``(qid, predicted items, gold variants, tool_calls)`` rows."""
    if not rows:
        raise InvalidInput("nothing to evaluate")
    scores = []
    for qid, pred, gold, calls in rows:
        em = exact_match(pred, gold)
        f1 = 1.0 if em else token_f1(pred, gold)
        scores.append(QuestionScore(qid, em, f1, int(calls)))
    return EvalReport(scores, strategy, **kw)


def evaluate(episodes: Sequence[Any], llm: str = "", size: str = "NA", budget: int = DEFAULT_BUDGET,
             context_mode: str = "") -> EvalReport:
    """Score episodes; unanswered ones count as EM=0, F1=0 but keep their tool calls."""
    if not episodes:
        raise InvalidInput("nothing to evaluate")
    rows = [(ep.question.qid, ep.prediction, ep.question.gold_answers, ep.tool_calls) for ep in episodes]
    return score_predictions(rows, episodes[0].strategy, llm=llm, size=size, budget=budget,
                             context_mode=context_mode)


def render_report(reports: Sequence[EvalReport]) -> Tuple[str, Dict[str, Any]]:
    """Text table in the layout LLM | Size | Strategy | EM | F1 | Average Tool Calls, plus JSON."""
    rows = [COLUMNS] + [
        (r.llm or "-", r.size, r.strategy, f"{r.em:.2f}", f"{r.f1:.2f}", f"{r.avg_tool_calls:.2f}")
        for r in reports
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS))]
    fmt = lambda row: " | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()  # noqa: E731
    lines = [fmt(rows[0]), "-+-".join("-" * w for w in widths)] + [fmt(row) for row in rows[1:]]
    budgets = sorted({r.budget for r in reports if r.budget != DEFAULT_BUDGET})
    for b in budgets:
        lines.append(f"Note: maximum tool calls per question set to {b}.")
    modes = sorted({r.context_mode for r in reports if r.context_mode})
    if modes:
        lines.append(f"Tool context mode: {', '.join(modes)}.")
    payload = {"reports": [r.to_dict() for r in reports]}
    return "\n".join(lines) + "\n", payload


def report_json(reports: Sequence[EvalReport]) -> str:
    return json.dumps(render_report(reports)[1], indent=2, sort_keys=True) + "\n"
