"""TableQA stand-in: header / cell matching over small relational tables."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .base import ToolRequest, ToolResponse
from .lexical import content_terms
from .stores import TableStore


def _matches(cell: str, qterms: set) -> bool:
    terms = content_terms(cell)
    return bool(terms) and all(t in qterms for t in terms)


def lookup(header: Sequence[str], rows: Sequence[Sequence[str]], question: str) -> Tuple[int, Optional[List[str]]]:
    """Answer ``question`` from one table; returns ``(score, cells)``.

    Columns whose header words all appear in the question are answer
    columns. Rows are selected by cells (outside answer columns) whose words
    all appear in the question. With both, the answer columns of the
    selected rows are returned; with only answer columns, the whole column;
    with only rows, the rows' remaining cells.
    """
    q = set(content_terms(question))
    cols = [j for j, h in enumerate(header) if _matches(h, q)]
    picked: List[Tuple[int, List[int]]] = []
    for i, row in enumerate(rows):
        hit = [j for j, cell in enumerate(row) if j not in cols and _matches(cell, q)]
        if hit:
            picked.append((i, hit))
    if cols and picked:
        return 2 * len(cols) + 1, [rows[i][j] for i, _ in picked for j in cols if j < len(rows[i])]
    if cols:
        return 2 * len(cols), [row[cols[0]] for row in rows if cols[0] < len(row)]
    if picked:
        return 1, [c for i, hit in picked for j, c in enumerate(rows[i]) if j not in hit]
    return 0, None


class TableLookupTool:
    def __init__(self, store: TableStore):
        self.store = store

    def answer(self, request: ToolRequest) -> ToolResponse:
        best: Tuple[int, Optional[List[str]]] = (0, None)
        for table_id in self.store.select(request.context_refs):
            header, rows = self.store.get(table_id)
            score, cells = lookup(header, rows, request.question)
            if score > best[0]:
                best = (score, cells)
        cells = [c for c in (best[1] or []) if c.strip()]
        if not cells:
            return ToolResponse.failure()
        return ToolResponse(", ".join(cells), None, False)


def table_lookup_tool(tables: TableStore, question: str) -> ToolResponse:
    return TableLookupTool(tables).answer(ToolRequest("Table", question))
