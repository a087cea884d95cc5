"""
Lexical stand-in tools
======================

The desk-scale tools need no model: BM25 over passages, cell lookup over
tables and caption matching for images. Each one sees only its own store.
"""

# %%
from dcqa.protocol import ToolKind
from dcqa.toolkit import CaptionStore, TableStore, TextStore, ToolRequest, dispatch, standin_registry

texts = TextStore({
    "d1": "The Chicago Bears play at Soldier Field. Their cheerleaders are the Honey Bears.",
    "d2": "Persepolis is a football club in Tehran with a cheerleading squad of its own.",
    "d3": "The Green Bay Packers have never had cheerleaders in recent decades.",
})
tables = TableStore({
    "t1": (["Team", "Wins", "Coach"], [["Bears", "10", "Eberflus"], ["Browns", "11", "Stefanski"]]),
})
captions = CaptionStore({"i1": "A red car parked beside the Golden Gate Bridge"})
tools = standin_registry(texts, tables, captions)

# %%
for kind, question in [
    (ToolKind.TEXT, "Where do the Chicago Bears play?"),
    (ToolKind.TABLE, "How many wins did the Browns have?"),
    (ToolKind.IMAGE, "What is parked beside the Golden Gate Bridge?"),
    (ToolKind.SEARCH, "Who coaches the Bears?"),
]:
    resp = dispatch(tools, ToolRequest(kind, question))
    print(f"{kind.value:6s} {question!r} -> {resp.answer!r}")

# %%
# Span extraction is a heuristic: it keeps the words of the best sentence
# that the question does not mention, so attribute questions ("what color")
# come back as a phrase rather than a single word.
#
# Search has no backing client here, so it answers NO_RESULT instead of
# raising; the orchestrator treats that like any other failed reply.
