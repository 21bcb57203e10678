"""One dialog turn end to end: belief tracking, DB grounding, action, response.

Each user turn runs the pipeline b -> c -> (a, r): a state-tracking completion
parsed into a belief state, a database query, a policy completion parsed into
an action plus delexicalized response, and lexicalization. Ablation flags
drop individual stages; every turn leaves a full TurnTrace behind.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field, replace

from .database import Database, DbState, lexicalize, query_database
from .dst import BeliefState, DialogHistory, DstPrompt, build_dst_prompt, parse_belief_sql
from .errors import ConfigInvalid, ParseFailure
from .llm import Backend, BackendConfig, CompletionRequest, make_backend
from .policy import (
    FALLBACK_ACTION,
    FALLBACK_RESPONSE,
    PolicyOutput,
    PolicyPrompt,
    SystemAction,
    build_policy_prompt,
    parse_policy_output,
)
from .schema import FormattingExample, TaskSchema

# a completion should stop before inventing the next prompt section or user turn
DEFAULT_STOP = ("###", "User:")


@dataclass(frozen=True)
class AblationFlags:
    use_policy: bool = True
    use_db: bool = True
    use_belief: bool = True


@dataclass(frozen=True)
class EngineConfig:
    schemas: tuple[TaskSchema, ...]
    databases: dict[str, Database]
    dst_example: FormattingExample
    policy_example: FormattingExample
    backend: Backend | BackendConfig
    ablation: AblationFlags = AblationFlags()
    action_response_mode: str = "single_call"  # or "two_calls"
    max_history_turns: int = 20
    temperature: float = 0.5
    max_tokens: int = 256

    def validate(self) -> None:
        if not self.schemas:
            raise ConfigInvalid("at least one schema is required")
        if self.ablation.use_db:
            for schema in self.schemas:
                if schema.domain not in self.databases:
                    raise ConfigInvalid(f"no database for domain {schema.domain!r}")
        if self.action_response_mode not in ("single_call", "two_calls"):
            raise ConfigInvalid(f"unknown action_response_mode {self.action_response_mode!r}")
        if self.max_history_turns < 1:
            raise ConfigInvalid("max_history_turns must be positive")

    def resolve_backend(self) -> Backend:
        if isinstance(self.backend, BackendConfig):
            return make_backend(self.backend)
        return self.backend

    def schema_for(self, domain: str) -> TaskSchema | None:
        for schema in self.schemas:
            if schema.domain == domain:
                return schema
        return None


@dataclass(frozen=True)
class TurnTrace:
    user_text: str
    dst_prompt: str | None
    belief: BeliefState | None
    db_state: DbState | None
    policy_prompt: str
    action: SystemAction
    delex_response: str
    final_response: str
    diagnostics: tuple[str, ...]
    latency_ms: dict[str, float]


@dataclass
class Session:
    id: str
    history: DialogHistory = field(default_factory=DialogHistory)
    traces: list[TurnTrace] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    last_domain: str | None = None


def new_session(cfg: EngineConfig) -> Session:
    cfg.validate()
    return Session(id=uuid.uuid4().hex)


def get_trace(session: Session, turn_index: int) -> TurnTrace:
    if not 0 <= turn_index < len(session.traces):
        raise IndexError(f"turn index {turn_index} out of range (0..{len(session.traces) - 1})")
    return session.traces[turn_index]


def truncate_for_prompt(history: DialogHistory, max_turns: int) -> DialogHistory:
    """Keep the most recent utterances, trimmed so the window starts with a user turn."""
    turns = history.turns
    if len(turns) <= max_turns:
        return history
    window = turns[-max_turns:]
    if window[0].speaker != "user":
        window = window[1:]
    return DialogHistory(window)


def step_turn(cfg: EngineConfig, session: Session, user_text: str) -> TurnTrace:
    """Run one full engine turn and append it to the session."""
    if not user_text.strip():
        raise ValueError("user_text must be non-empty")
    backend = cfg.resolve_backend()
    session.history = session.history.append("user", user_text)
    window = truncate_for_prompt(session.history, cfg.max_history_turns)
    diagnostics: list[str] = []
    latency: dict[str, float] = {}

    def ask(prompt: str) -> str:
        return backend.complete(
            CompletionRequest(
                prompt=prompt,
                temperature=cfg.temperature,
                max_tokens=cfg.max_tokens,
                stop_sequences=DEFAULT_STOP,
            )
        )

    # -- sub-task 1: belief state
    dst_prompt: DstPrompt | None = None
    belief: BeliefState | None = None
    if cfg.ablation.use_belief:
        t0 = time.perf_counter()
        mode = "multi" if len(cfg.schemas) > 1 else "single"
        dst_prompt = build_dst_prompt(list(cfg.schemas), cfg.dst_example, window, mode=mode)
        for attempt in range(2):
            raw = ask(dst_prompt.full_text)
            try:
                belief = parse_belief_sql(raw)
                break
            except ParseFailure as e:
                diagnostics.append(f"belief parse attempt {attempt + 1} failed: {e}")
        latency["dst"] = (time.perf_counter() - t0) * 1000.0

    # -- domain routing
    schema = cfg.schemas[0]
    if belief is not None:
        routed = cfg.schema_for(belief.domain)
        if routed is not None:
            schema = routed
            session.last_domain = belief.domain
        else:
            diagnostics.append(f"unknown predicted domain {belief.domain!r}")
            fallback = cfg.schema_for(session.last_domain or "")
            schema = fallback or cfg.schemas[0]
            belief = replace(belief, domain=schema.domain)
    elif session.last_domain:
        schema = cfg.schema_for(session.last_domain) or cfg.schemas[0]

    if belief is None and cfg.ablation.use_belief:
        # both parse attempts failed: apologize rather than crash the session
        return _finish_fallback_turn(cfg, session, user_text, dst_prompt, diagnostics, latency)

    # -- sub-task 1b: db grounding (needs a belief to query with)
    db_state: DbState | None = None
    if cfg.ablation.use_db and belief is not None:
        t0 = time.perf_counter()
        db_state = query_database(cfg.databases[schema.domain], belief)
        latency["db"] = (time.perf_counter() - t0) * 1000.0

    # -- sub-tasks 2+3: action and response
    t0 = time.perf_counter()
    policy_prompt = build_policy_prompt(
        schema,
        cfg.policy_example,
        window,
        belief,
        db_state,
        include_skeleton=cfg.ablation.use_policy,
    )
    output = _run_policy(cfg, ask, policy_prompt, diagnostics)
    latency["policy"] = (time.perf_counter() - t0) * 1000.0
    diagnostics.extend(
        f"response uses undeclared token {t}" for t in output.unknown_tokens(schema)
    )

    # -- lexicalization
    t0 = time.perf_counter()
    final_response, lex_diags = lexicalize(output.delex_response, db_state, belief, schema)
    diagnostics.extend(lex_diags)
    latency["lexicalize"] = (time.perf_counter() - t0) * 1000.0

    trace = TurnTrace(
        user_text=user_text,
        dst_prompt=dst_prompt.full_text if dst_prompt else None,
        belief=belief,
        db_state=db_state,
        policy_prompt=policy_prompt.full_text,
        action=output.action,
        delex_response=output.delex_response,
        final_response=final_response,
        diagnostics=tuple(diagnostics),
        latency_ms=latency,
    )
    session.history = session.history.append("system", final_response)
    session.traces.append(trace)
    return trace


def _run_policy(cfg, ask, policy_prompt: PolicyPrompt, diagnostics: list[str]) -> PolicyOutput:
    if cfg.action_response_mode == "two_calls":
        return _run_policy_two_calls(ask, policy_prompt, diagnostics)
    for attempt in range(2):
        raw = ask(policy_prompt.full_text)
        try:
            return parse_policy_output(raw)
        except ParseFailure as e:
            diagnostics.append(f"policy parse attempt {attempt + 1} failed: {e}")
    diagnostics.append("policy fallback: nomatch with fixed apology")
    return PolicyOutput(action=SystemAction(FALLBACK_ACTION), delex_response=FALLBACK_RESPONSE)


def _run_policy_two_calls(ask, policy_prompt: PolicyPrompt, diagnostics: list[str]) -> PolicyOutput:
    """Ask once for the action line, then again with the action appended for the response."""
    for attempt in range(2):
        raw_action = ask(policy_prompt.full_text)
        try:
            probe = parse_policy_output(raw_action + "\nResponse: pending")
        except ParseFailure as e:
            diagnostics.append(f"action parse attempt {attempt + 1} failed: {e}")
            continue
        action = probe.action
        follow_up = f"{policy_prompt.full_text}System Action: {action.render()}\n"
        raw_response = ask(follow_up)
        try:
            full = parse_policy_output(f"System Action: {action.render()}\n{raw_response}")
            return PolicyOutput(action=action, delex_response=full.delex_response)
        except ParseFailure as e:
            diagnostics.append(f"response parse attempt {attempt + 1} failed: {e}")
    diagnostics.append("policy fallback: nomatch with fixed apology")
    return PolicyOutput(action=SystemAction(FALLBACK_ACTION), delex_response=FALLBACK_RESPONSE)


def _finish_fallback_turn(
    cfg: EngineConfig,
    session: Session,
    user_text: str,
    dst_prompt: DstPrompt | None,
    diagnostics: list[str],
    latency: dict[str, float],
) -> TurnTrace:
    diagnostics.append("belief fallback: nomatch with fixed apology")
    window = truncate_for_prompt(session.history, cfg.max_history_turns)
    schema = cfg.schema_for(session.last_domain or "") or cfg.schemas[0]
    policy_prompt = build_policy_prompt(
        schema, cfg.policy_example, window, None, None,
        include_skeleton=cfg.ablation.use_policy,
    )
    trace = TurnTrace(
        user_text=user_text,
        dst_prompt=dst_prompt.full_text if dst_prompt else None,
        belief=None,
        db_state=None,
        policy_prompt=policy_prompt.full_text,
        action=SystemAction(FALLBACK_ACTION),
        delex_response=FALLBACK_RESPONSE,
        final_response=FALLBACK_RESPONSE,
        diagnostics=tuple(diagnostics),
        latency_ms=latency,
    )
    session.history = session.history.append("system", FALLBACK_RESPONSE)
    session.traces.append(trace)
    return trace
