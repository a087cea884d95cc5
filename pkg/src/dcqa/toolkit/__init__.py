from .base import (
    DEFAULT_TIMEOUT,
    ToolClient,
    ToolRegistry,
    ToolRequest,
    ToolResponse,
    dispatch,
    timed_dispatch,
)
from .http import HttpToolClient, SearchToolClient, http_tool_client, search_tool_client, serve_tool
from .lexical import Bm25Index, CaptionImageTool, LexicalTextTool, extract_span, lexical_text_tool
from .mock import NoisyTool, OracleTool, StubTool
from .stores import CaptionStore, TableStore, TextStore
from .table import TableLookupTool, table_lookup_tool


def standin_registry(texts: TextStore, tables: TableStore, captions: CaptionStore,
                     search: ToolClient = None) -> ToolRegistry:
    """Registry of the desk-scale stand-ins, each bound to its own store only."""
    from ..protocol import ToolKind

    return ToolRegistry({
        ToolKind.TEXT: LexicalTextTool(texts),
        ToolKind.TABLE: TableLookupTool(tables),
        ToolKind.IMAGE: CaptionImageTool(captions),
        ToolKind.SEARCH: search if search is not None else StubTool(),
    })
