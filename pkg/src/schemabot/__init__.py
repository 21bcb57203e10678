"""Schema-guided task-oriented dialog engine.

Drive a frozen LLM through belief-state tracking, database grounding, action
selection, and response generation from a declarative task schema, then score
the result with corpus metrics (Inform / Success / BLEU / Combined) or the
interactive human-evaluation protocol.
"""

from .database import Database, DbState, Entity, lexicalize, load_database, query_database
from .dst import (
    BeliefState,
    DialogHistory,
    Utterance,
    build_dst_prompt,
    parse_belief_sql,
    serialize_belief_sql,
)
from .engine import AblationFlags, EngineConfig, Session, TurnTrace, new_session, step_turn
from .evaluate import (
    CorpusDialog,
    EvalReport,
    combined_score,
    corpus_bleu,
    eval_inform,
    eval_success,
    load_corpus,
    run_corpus_eval,
)
from .llm import BackendConfig, CompletionRequest, ScriptedBackend, ScriptTable, make_backend
from .policy import PolicyOutput, build_policy_prompt, parse_policy_output
from .schema import (
    FormattingExample,
    SchemaEdit,
    SlotDef,
    TaskSchema,
    TemplateTurn,
    apply_schema_edit,
    parse_schema,
    render_belief_instruction,
    render_policy_skeleton_text,
    serialize_schema,
    validate_schema,
)

__version__ = "0.1.0"

__all__ = [
    "AblationFlags",
    "BackendConfig",
    "BeliefState",
    "CompletionRequest",
    "CorpusDialog",
    "Database",
    "DbState",
    "DialogHistory",
    "EngineConfig",
    "Entity",
    "EvalReport",
    "FormattingExample",
    "PolicyOutput",
    "SchemaEdit",
    "ScriptTable",
    "ScriptedBackend",
    "Session",
    "SlotDef",
    "TaskSchema",
    "TemplateTurn",
    "TurnTrace",
    "Utterance",
    "apply_schema_edit",
    "build_dst_prompt",
    "build_policy_prompt",
    "combined_score",
    "corpus_bleu",
    "eval_inform",
    "eval_success",
    "lexicalize",
    "load_corpus",
    "load_database",
    "make_backend",
    "new_session",
    "parse_belief_sql",
    "parse_policy_output",
    "parse_schema",
    "query_database",
    "render_belief_instruction",
    "render_policy_skeleton_text",
    "run_corpus_eval",
    "serialize_belief_sql",
    "serialize_schema",
    "step_turn",
    "validate_schema",
]
