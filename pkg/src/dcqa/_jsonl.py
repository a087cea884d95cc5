from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple, Union

from .errors import MissingFile, SchemaError


def iter_jsonl(path: Union[str, Path]) -> Iterable[Tuple[int, Dict[str, Any]]]:
    """Yield ``(line_number, object)``; blank lines are skipped."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"invalid JSON ({e.msg})", str(path), lineno) from None
            if not isinstance(obj, dict):
                raise SchemaError("expected a JSON object", str(path), lineno)
            yield lineno, obj
