"""Per-modality data stores.

Each store holds one modality only and counts its reads, so tests can check
that a tool never touched another modality's data.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

from ..errors import SchemaError
from .._jsonl import iter_jsonl


class _Store:
    modality = ""

    def __init__(self) -> None:
        self._reads = 0
        self._lock = threading.Lock()

    @property
    def reads(self) -> int:
        return self._reads

    def _touch(self) -> None:
        with self._lock:
            self._reads += 1

    def __len__(self) -> int:
        return len(self._items)  # type: ignore[attr-defined]

    def ids(self) -> List[str]:
        return list(self._items)  # type: ignore[attr-defined]

    def select(self, refs: Sequence[str] = ()) -> List[str]:
        """Ids visible for a request; all ids when ``refs`` has none of ours."""
        self._touch()
        own = [r for r in refs if r in self._items]  # type: ignore[attr-defined]
        return own if own else list(self._items)  # type: ignore[attr-defined]


class TextStore(_Store):
    modality = "text"

    def __init__(self, docs: Mapping[str, str]):
        super().__init__()
        self._items: Dict[str, str] = dict(docs)

    def get(self, doc_id: str) -> str:
        self._touch()
        return self._items[doc_id]

    def items(self) -> List[Tuple[str, str]]:
        self._touch()
        return list(self._items.items())

    @classmethod
    def from_jsonl(cls, path: Union[str, Path]) -> "TextStore":
        docs = {}
        for lineno, obj in iter_jsonl(path):
            try:
                docs[str(obj["id"])] = str(obj["text"])
            except KeyError as e:
                raise SchemaError(f"missing field {e}", str(path), lineno) from None
        return cls(docs)

    def to_jsonl(self, path: Union[str, Path]) -> None:
        _write(path, ({"id": k, "text": v} for k, v in self._items.items()))


class TableStore(_Store):
    modality = "table"

    def __init__(self, tables: Mapping[str, Tuple[Sequence[str], Sequence[Sequence[str]]]]):
        super().__init__()
        self._items: Dict[str, Tuple[List[str], List[List[str]]]] = {
            k: ([str(h) for h in header], [[str(c) for c in row] for row in rows])
            for k, (header, rows) in tables.items()
        }

    def get(self, table_id: str) -> Tuple[List[str], List[List[str]]]:
        self._touch()
        return self._items[table_id]

    @classmethod
    def from_jsonl(cls, path: Union[str, Path]) -> "TableStore":
        tables = {}
        for lineno, obj in iter_jsonl(path):
            try:
                tables[str(obj["id"])] = (obj["header"], obj["rows"])
            except KeyError as e:
                raise SchemaError(f"missing field {e}", str(path), lineno) from None
        return cls(tables)

    def to_jsonl(self, path: Union[str, Path]) -> None:
        _write(path, ({"id": k, "header": h, "rows": r} for k, (h, r) in self._items.items()))


class CaptionStore(_Store):
    """Image stand-in: image id -> caption text."""

    modality = "image"

    def __init__(self, captions: Mapping[str, str]):
        super().__init__()
        self._items: Dict[str, str] = dict(captions)

    def get(self, image_id: str) -> str:
        self._touch()
        return self._items[image_id]

    def items(self) -> List[Tuple[str, str]]:
        self._touch()
        return list(self._items.items())

    @classmethod
    def from_jsonl(cls, path: Union[str, Path]) -> "CaptionStore":
        caps = {}
        for lineno, obj in iter_jsonl(path):
            try:
                caps[str(obj["id"])] = str(obj["caption"])
            except KeyError as e:
                raise SchemaError(f"missing field {e}", str(path), lineno) from None
        return cls(caps)

    def to_jsonl(self, path: Union[str, Path]) -> None:
        _write(path, ({"id": k, "caption": v} for k, v in self._items.items()))


def _write(path: Union[str, Path], rows: Iterable[dict]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
