"""Benchmark loaders.

MultiModalQA (``MMQA_<split>.jsonl``) field mapping:

* ``qid`` -> qid, ``question`` -> question
* ``answers[*].answer`` -> one gold variant holding every listed answer
* ``metadata.text_doc_ids`` / ``metadata.table_id`` / ``metadata.image_doc_ids`` -> context refs
* stores: ``MMQA_texts.jsonl`` (``id``, ``text``), ``MMQA_tables.jsonl``
  (``id``, ``table.header[*].column_name``, ``table.table_rows[*][*].text``),
  ``MMQA_images.jsonl`` (``id``, ``title``; the title doubles as caption)

MMCoQA (``MMCoQA_<split>.txt`` or ``.jsonl``, one JSON object per line):

* ``qid`` -> qid, ``question`` -> question
* ``answer`` (list of ``{"answer": ...}`` or a string) -> gold variants, one per answer
* ``history`` (list of ``{"question", "answer"}``) -> conversation history
* ``conv_id`` when present, else the qid prefix before its last ``_``, groups conversations
* stores are the MultiModalQA collections, found in the same directory when present

A third format, ``native``, is this package's own QaRecord JSONL.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..errors import InvalidInput, MissingFile, SchemaError
from ..toolkit.stores import CaptionStore, TableStore, TextStore
from .records import QaRecord, iter_jsonl, load_records

log = logging.getLogger(__name__)

# published split sizes; a mismatch is reported, not fatal
EXPECTED_SIZES = {
    "multimodalqa": {"train": 23817, "dev": 2441, "test": 3660},
    "mmcoqa": {"train": 4582, "dev": 581, "test": 590},
}
DEFAULT_SPLIT = {"multimodalqa": "dev", "mmcoqa": "test"}


@dataclass
class ModalityStores:
    texts: TextStore
    tables: TableStore
    captions: CaptionStore


def _answer_text(a: Any) -> str:
    if isinstance(a, dict):
        a = a.get("answer", "")
    return str(a).strip()


def _mmqa_record(obj: Dict[str, Any], split: str) -> QaRecord:
    answers = [_answer_text(a) for a in obj.get("answers") or []]
    answers = [a for a in answers if a]
    meta = obj.get("metadata") or {}
    table = meta.get("table_id")
    refs = {
        "text": meta.get("text_doc_ids") or [],
        "table": [table] if table else [],
        "image": meta.get("image_doc_ids") or [],
    }
    # test split ships without answers
    gold = [answers] if answers else [[""]]
    return QaRecord(str(obj["qid"]), obj["question"], gold, refs, (), split, "multimodalqa")


def _mmcoqa_record(obj: Dict[str, Any], split: str) -> QaRecord:
    raw = obj.get("answer", obj.get("answers"))
    if isinstance(raw, list):
        answers = [_answer_text(a) for a in raw]
    else:
        answers = [_answer_text(raw)] if raw is not None else []
    answers = [a for a in answers if a] or [""]
    history = []
    for h in obj.get("history") or []:
        ha = h.get("answer")
        if isinstance(ha, list):
            ha = ", ".join(_answer_text(a) for a in ha)
        history.append((h.get("question", ""), _answer_text(ha)))
    refs = {"text": [], "table": [], "image": []}
    for a in raw if isinstance(raw, list) else []:
        if isinstance(a, dict):
            for key, mod in (("text_instances", "text"), ("image_instances", "image")):
                for inst in a.get(key) or []:
                    doc = inst.get("doc_id") if isinstance(inst, dict) else None
                    if doc:
                        refs[mod].append(doc)
            if a.get("table_id"):
                refs["table"].append(a["table_id"])
    return QaRecord(str(obj["qid"]), obj["question"], [[a] for a in answers], refs, history, split, "mmcoqa")


def conversation_id(record: QaRecord) -> str:
    return record.qid.rsplit("_", 1)[0] if "_" in record.qid else record.qid


def questions_per_conversation(records: Sequence[QaRecord]) -> float:
    if not records:
        raise InvalidInput("no records")
    convs = Counter(conversation_id(r) for r in records)
    return len(records) / len(convs)


def _find(directory: Path, names: Sequence[str]) -> Optional[Path]:
    for n in names:
        p = directory / n
        if p.exists():
            return p
    return None


def load_mmqa_stores(directory: Union[str, Path]) -> ModalityStores:
    directory = Path(directory)
    texts: Dict[str, str] = {}
    tables: Dict[str, Tuple[List[str], List[List[str]]]] = {}
    captions: Dict[str, str] = {}
    p = _find(directory, ["MMQA_texts.jsonl"])
    if p:
        for lineno, obj in iter_jsonl(p):
            try:
                texts[str(obj["id"])] = obj["text"]
            except KeyError as e:
                raise SchemaError(f"missing field {e}", str(p), lineno) from None
    p = _find(directory, ["MMQA_tables.jsonl"])
    if p:
        for lineno, obj in iter_jsonl(p):
            try:
                t = obj["table"]
                header = [h["column_name"] for h in t["header"]]
                rows = [[c["text"] for c in row] for row in t["table_rows"]]
            except (KeyError, TypeError) as e:
                raise SchemaError(f"bad table: {e}", str(p), lineno) from None
            tables[str(obj["id"])] = (header, rows)
    p = _find(directory, ["MMQA_images.jsonl"])
    if p:
        for lineno, obj in iter_jsonl(p):
            try:
                captions[str(obj["id"])] = obj.get("caption") or obj["title"]
            except KeyError as e:
                raise SchemaError(f"missing field {e}", str(p), lineno) from None
    return ModalityStores(TextStore(texts), TableStore(tables), CaptionStore(captions))


def _check_size(name: str, split: str, n: int) -> None:
    expected = EXPECTED_SIZES.get(name, {}).get(split)
    if expected is not None and expected != n:
        log.warning("%s %s: loaded %d records, published size is %d", name, split, n, expected)


def load_benchmark(name: str, path: Union[str, Path], split: Optional[str] = None,
                   with_stores: bool = True) -> Tuple[List[QaRecord], Optional[ModalityStores]]:
    """Load one split of a benchmark from a directory (or, for ``native``, a file)."""
    name = name.lower()
    path = Path(path)
    if name == "native":
        return load_records(path), None
    if name not in EXPECTED_SIZES:
        raise InvalidInput(f"unknown benchmark {name!r}")
    split = split or DEFAULT_SPLIT[name]
    if not path.exists():
        raise MissingFile(f"no such path: {path}")
    if path.is_file():
        qfile, directory = path, path.parent
    else:
        directory = path
        candidates = ([f"MMQA_{split}.jsonl"] if name == "multimodalqa"
                      else [f"MMCoQA_{split}.txt", f"MMCoQA_{split}.jsonl"])
        qfile = _find(directory, candidates)
        if qfile is None:
            raise MissingFile(f"{name} {split}: none of {candidates} in {directory}")
    build = _mmqa_record if name == "multimodalqa" else _mmcoqa_record
    records = []
    for lineno, obj in iter_jsonl(qfile):
        try:
            records.append(build(obj, split))
        except (KeyError, TypeError, AttributeError, InvalidInput) as e:
            raise SchemaError(f"bad {name} record: {e}", str(qfile), lineno) from None
    _check_size(name, split, len(records))
    stores = load_mmqa_stores(directory) if with_stores else None
    return records, stores
