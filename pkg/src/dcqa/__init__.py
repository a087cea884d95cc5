"""Tool-interacting divide-and-conquer question answering."""

from .errors import (
    BackendError,
    InsufficientChains,
    InvalidInput,
    InvalidShot,
    MissingFile,
    ParseFailure,
    SchemaError,
)
from .eval import EvalReport, QaRecord, evaluate, exact_match, normalize_answer, render_report, token_f1
from .llm import Cassette, HttpChatBackend, LlmBackend, ReplayBackend, ScriptedBackend
from .orchestrator import Budget, Episode, Outcome, OutcomeKind, Strategy, StrategyKind, run_batch, run_episode
from .protocol import (
    NO_RESULT,
    DividerEvent,
    FinalAnswer,
    SubQuestion,
    SystemNote,
    ToolKind,
    ToolReplyEvent,
    parse_divider_output,
    render_divider,
    render_tool_reply,
    split_final_answer,
)
from .toolkit import ToolRegistry, ToolRequest, ToolResponse, dispatch

__version__ = "0.1.0"
