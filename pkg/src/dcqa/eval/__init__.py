from .loaders import (
    DEFAULT_SPLIT,
    EXPECTED_SIZES,
    ModalityStores,
    load_benchmark,
    load_mmqa_stores,
    questions_per_conversation,
)
from .metrics import average_tool_calls, exact_match, normalize_answer, token_f1
from .records import QaRecord, load_records, save_records
from .report import EvalReport, QuestionScore, evaluate, render_report, report_json, score_predictions
