from .benchmark import (
    ALL_TASKS,
    RELAXED_TASKS,
    ScoreReport,
    TaskScore,
    format_report_table,
    run_benchmark,
)
from .finetune import FinetuneError, FinetuneSpec, select_finetune_data, write_jsonl
from .gold import (
    GoldCorpusError,
    GoldDocument,
    LabelMaps,
    SegmentTask,
    expected_answer,
    load_gold_corpus,
    segment_tasks,
)
from .metrics import (
    DEFAULT_THRESHOLD,
    MacroScores,
    MatchOutcome,
    lcs_length,
    lcs_ratio,
    macro_f1,
    match_spans,
    normalize_text,
    prf1,
    sample_f1,
    score_classification,
)

__all__ = [
    "ALL_TASKS",
    "DEFAULT_THRESHOLD",
    "FinetuneError",
    "FinetuneSpec",
    "GoldCorpusError",
    "GoldDocument",
    "LabelMaps",
    "MacroScores",
    "MatchOutcome",
    "RELAXED_TASKS",
    "ScoreReport",
    "SegmentTask",
    "TaskScore",
    "expected_answer",
    "format_report_table",
    "lcs_length",
    "lcs_ratio",
    "load_gold_corpus",
    "macro_f1",
    "match_spans",
    "normalize_text",
    "prf1",
    "run_benchmark",
    "sample_f1",
    "score_classification",
    "segment_tasks",
    "select_finetune_data",
    "write_jsonl",
]
