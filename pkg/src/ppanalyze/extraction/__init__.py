from .backend import (
    Backend,
    BackendConfig,
    BackendError,
    BackendResponse,
    ConfigError,
    ReplayMissError,
    ResponseCache,
    TransportError,
    prompt_digest,
)
from .pipeline import (
    DocumentError,
    EntitySpan,
    ExtractionError,
    ExtractionResult,
    RelationTuple,
    SegmentExtraction,
    TaskTrace,
    classify_entities,
    extract_document,
    run_task,
)
from .prompts import (
    ACTION_SUBTYPES,
    EVENT_TYPES,
    PARTY_SUBTYPES,
    PromptMessages,
    TaskKind,
    build_prompt,
)
from .repair import DEFAULT_REFUSAL_PHRASES, ParseError, RepairTrace, repair_and_parse

__all__ = [
    "ACTION_SUBTYPES",
    "Backend",
    "BackendConfig",
    "BackendError",
    "BackendResponse",
    "ConfigError",
    "DEFAULT_REFUSAL_PHRASES",
    "DocumentError",
    "EVENT_TYPES",
    "EntitySpan",
    "ExtractionError",
    "ExtractionResult",
    "PARTY_SUBTYPES",
    "ParseError",
    "PromptMessages",
    "RelationTuple",
    "ReplayMissError",
    "RepairTrace",
    "ResponseCache",
    "SegmentExtraction",
    "TaskKind",
    "TaskTrace",
    "TransportError",
    "build_prompt",
    "classify_entities",
    "extract_document",
    "prompt_digest",
    "repair_and_parse",
    "run_task",
]
