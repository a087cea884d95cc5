from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from .._jsonl import iter_jsonl
from ..errors import InvalidInput, SchemaError

MODALITIES = ("text", "table", "image")


@dataclass(frozen=True)
class QaRecord:
    """A benchmark question normalized across datasets.

    ``gold_answers`` holds answer variants; each variant is itself a list of
    strings so that list-valued answers keep their items apart.
    """

    qid: str
    question: str
    gold_answers: Tuple[Tuple[str, ...], ...]
    context_refs: Dict[str, Tuple[str, ...]] = field(default_factory=dict, compare=True, hash=False)
    history: Tuple[Tuple[str, str], ...] = ()
    split: str = "dev"
    benchmark: str = ""

    def __post_init__(self) -> None:
        gold = tuple(tuple(str(a) for a in variant) for variant in self.gold_answers)
        if not gold or any(not v for v in gold):
            raise InvalidInput(f"{self.qid}: gold_answers must be non-empty lists")
        object.__setattr__(self, "gold_answers", gold)
        refs = {k: tuple(v) for k, v in self.context_refs.items() if v}
        object.__setattr__(self, "context_refs", refs)
        object.__setattr__(self, "history", tuple((str(q), str(a)) for q, a in self.history))

    @property
    def all_refs(self) -> List[str]:
        return [ref for m in MODALITIES for ref in self.context_refs.get(m, ())]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "qid": self.qid,
            "question": self.question,
            "gold_answers": [list(v) for v in self.gold_answers],
            "context_refs": {k: list(v) for k, v in sorted(self.context_refs.items())},
            "history": [{"question": q, "answer": a} for q, a in self.history],
            "split": self.split,
            "benchmark": self.benchmark,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "QaRecord":
        return cls(
            qid=str(d["qid"]),
            question=d["question"],
            gold_answers=d["gold_answers"],
            context_refs=d.get("context_refs") or {},
            history=[(h["question"], h["answer"]) for h in d.get("history", ())],
            split=d.get("split", "dev"),
            benchmark=d.get("benchmark", ""),
        )


def save_records(records: Sequence[QaRecord], path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_records(path: Union[str, Path]) -> List[QaRecord]:
    out = []
    for lineno, obj in iter_jsonl(path):
        try:
            out.append(QaRecord.from_dict(obj))
        except (KeyError, TypeError, InvalidInput) as e:
            raise SchemaError(f"bad record: {e}", str(path), lineno) from None
    return out
