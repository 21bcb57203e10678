"""Task schemas: the ontology and policy skeleton that drive both prompters.

A schema bundles the domain vocabulary (slots, values, delex tokens) with an
ordered list of template dialog turns. Schemas are parsed from a JSON file,
validated, rendered into prompt sections, and edited (add/amend/remove slots
and turns) without mutating the original.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

from .errors import InvariantViolation, SchemaSyntaxError
from .text import is_delex_token, is_identifier, normalize_value

DEFAULT_DST_INSTRUCTION = (
    "You are a dialog state tracker. Read the conversation and summarize the "
    "user's constraints so far as one SQL-style line: "
    "select * from <domain> where <slot> = <value> ; ... "
    "Output only that line."
)
DEFAULT_POLICY_INSTRUCTION = (
    "You are a task-oriented assistant. Follow the interaction patterns shown "
    "in the policy skeleton. Reply with exactly two lines:\n"
    "System Action: <action>(<slot>=<token>, ...)\n"
    "Response: <delexicalized response using the bracket tokens>"
)

SKELETON_SIZE_RANGE = (5, 40)

DB_CLASSES = ("zero", "one", "many")
_DB_TRIGGER_TEXT = {"zero": "zero matches", "one": "one match", "many": "many matches"}


@dataclass(frozen=True)
class SlotDef:
    name: str
    kind: str  # "categorical" | "open"
    values: tuple[str, ...]
    delex_token: str
    description: str | None = None


@dataclass(frozen=True)
class DomainOntology:
    domain: str
    slots: tuple[SlotDef, ...]
    requestable_slots: tuple[str, ...] = ()

    def slot(self, name: str) -> SlotDef | None:
        for s in self.slots:
            if s.name == name:
                return s
        return None

    def slot_for_token(self, token: str) -> SlotDef | None:
        for s in self.slots:
            if s.delex_token == token:
                return s
        return None


@dataclass(frozen=True)
class ActionLabel:
    name: str
    args: tuple[tuple[str, str], ...] = ()  # (slot name, delex token)

    def render(self) -> str:
        inner = ", ".join(f"{slot}={token}" for slot, token in self.args)
        return f"{self.name}({inner})"


@dataclass(frozen=True)
class TemplateTurn:
    """One template turn: a user- or DB-triggered (action, response) pair."""

    action: ActionLabel
    response: str
    user: str | None = None  # trigger variant 1: delexicalized user utterance
    db: str | None = None  # trigger variant 2: match-count class zero|one|many

    def trigger_text(self) -> str:
        if self.user is not None:
            return f"User: {self.user}"
        return f"DB: {_DB_TRIGGER_TEXT[self.db or 'zero']}"


@dataclass(frozen=True)
class PolicySkeleton:
    domain: str
    turns: tuple[TemplateTurn, ...]


@dataclass(frozen=True)
class TaskSchema:
    ontology: DomainOntology
    skeleton: PolicySkeleton
    task_instruction_dst: str = DEFAULT_DST_INSTRUCTION
    task_instruction_policy: str = DEFAULT_POLICY_INSTRUCTION

    @property
    def domain(self) -> str:
        return self.ontology.domain

    def delex_tokens(self) -> dict[str, str]:
        """Map delex token -> owning slot name."""
        return {s.delex_token: s.name for s in self.ontology.slots}


@dataclass(frozen=True)
class FormattingExample:
    """Fixed output-format exemplar taken from a *different* domain.

    The policy exemplar is stored structurally so the rendered example mirrors
    the engine configuration: when a run drops the belief or DB stage, the
    exemplar drops the corresponding line too.
    """

    source_domain: str
    dst_history: str = ""
    dst_belief_line: str = ""
    policy_skeleton_snippet: str = ""
    policy_history: str = ""
    policy_belief_line: str = ""
    policy_db_line: str = ""
    policy_action: str = ""
    policy_response: str = ""

    def render_dst(self) -> str:
        return f"{self.dst_history}\n{self.dst_belief_line}".strip("\n")

    def render_policy(self, include_belief: bool = True, include_db: bool = True) -> str:
        lines = []
        if self.policy_skeleton_snippet:
            lines.append(self.policy_skeleton_snippet)
            lines.append("")
        if self.policy_history:
            lines.append(self.policy_history)
        if include_belief and self.policy_belief_line:
            lines.append(f"Belief: {self.policy_belief_line}")
        if include_db and self.policy_db_line:
            lines.append(f"DB: {self.policy_db_line}")
        if self.policy_action:
            lines.append(f"System Action: {self.policy_action}")
        if self.policy_response:
            lines.append(f"Response: {self.policy_response}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str


class SchemaWarning(UserWarning):
    """Non-fatal schema issue (skeleton size, missing many-coverage, ...)."""


@dataclass(frozen=True)
class SchemaEdit:
    """Pure edit over a schema; turn ids are indices into the original skeleton."""

    add_slots: tuple[SlotDef, ...] = ()
    add_turns: tuple[TemplateTurn, ...] = ()
    remove_turn_ids: tuple[int, ...] = ()
    amend_turns: tuple[tuple[int, TemplateTurn], ...] = ()
    remove_slot_names: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# validation


def validate_schema(schema: TaskSchema) -> list[Diagnostic]:
    """Check every schema invariant; errors and warnings come back as diagnostics."""
    out: list[Diagnostic] = []
    ont = schema.ontology

    def err(m: str) -> None:
        out.append(Diagnostic("error", m))

    def warn(m: str) -> None:
        out.append(Diagnostic("warning", m))

    if ont.domain != schema.skeleton.domain:
        err(f"ontology domain {ont.domain!r} != skeleton domain {schema.skeleton.domain!r}")
    if not is_identifier(ont.domain):
        err(f"domain {ont.domain!r} is not a lowercase identifier")

    seen_names: set[str] = set()
    seen_tokens: set[str] = set()
    for s in ont.slots:
        if not is_identifier(s.name):
            err(f"slot name {s.name!r} is not a lowercase identifier")
        if s.name in seen_names:
            err(f"duplicate slot name {s.name!r}")
        seen_names.add(s.name)
        if s.kind not in ("categorical", "open"):
            err(f"slot {s.name!r} has unknown kind {s.kind!r}")
        if s.kind == "categorical" and not s.values:
            err(f"categorical slot {s.name!r} has no values")
        if not is_delex_token(s.delex_token):
            err(f"slot {s.name!r} delex token {s.delex_token!r} does not match [identifier]")
        if s.delex_token in seen_tokens:
            err(f"duplicate delex token {s.delex_token!r}")
        seen_tokens.add(s.delex_token)

    for name in ont.requestable_slots:
        if name not in seen_names:
            err(f"requestable slot {name!r} is not declared")

    turns = schema.skeleton.turns
    if not turns:
        err("policy skeleton has no turns")
    lo, hi = SKELETON_SIZE_RANGE
    if turns and not lo <= len(turns) <= hi:
        warn(f"skeleton size {len(turns)} outside {lo}..{hi}")

    covered = set()
    for i, t in enumerate(turns):
        if (t.user is None) == (t.db is None):
            err(f"turn {i}: exactly one of user/db trigger must be set")
        if t.db is not None:
            if t.db not in DB_CLASSES:
                err(f"turn {i}: unknown db match class {t.db!r}")
            covered.add(t.db)
        if not t.action.name or not is_identifier(t.action.name):
            err(f"turn {i}: action name {t.action.name!r} is not an identifier")
        for slot, _tok in t.action.args:
            if slot not in seen_names:
                err(f"turn {i}: action arg slot {slot!r} is not declared")
        for tok in _bracket_tokens(t.response):
            if tok not in seen_tokens:
                err(f"turn {i}: response uses unknown delex token {tok!r}")
    # zero/one coverage is warning-level at parse time so minimal schemas load;
    # apply_schema_edit refuses edits that *remove* existing coverage.
    for k in ("zero", "one"):
        if turns and k not in covered:
            warn(f"no db-triggered turn for match-count class {k}")
    if turns and "many" not in covered:
        warn("no db-triggered turn for match-count class many")

    return out


def _bracket_tokens(text: str) -> list[str]:
    from .text import DELEX_TOKEN

    return [f"[{m}]" for m in DELEX_TOKEN.findall(text)]


def _raise_on_errors(diags: list[Diagnostic]) -> None:
    errors = [d.message for d in diags if d.severity == "error"]
    if errors:
        raise InvariantViolation("; ".join(errors))
    for d in diags:
        if d.severity == "warning":
            warnings.warn(d.message, SchemaWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# file format

_TOP_KEYS = {
    "domain",
    "slots",
    "requestable_slots",
    "skeleton",
    "task_instruction_dst",
    "task_instruction_policy",
}
_SLOT_KEYS = {"name", "kind", "values", "delex_token", "description"}
_TURN_KEYS = {"trigger", "action", "response"}


def parse_schema(text: str) -> TaskSchema:
    """Parse a schema file; rejects invalid input with a position-bearing error."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaSyntaxError(e.msg, e.lineno, e.colno) from e
    if not isinstance(raw, dict):
        raise SchemaSyntaxError("schema file must be a JSON object", 1, 1)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise SchemaSyntaxError(f"unknown keys: {sorted(unknown)}", 1, 1)
    for key in ("domain", "slots", "skeleton"):
        if key not in raw:
            raise SchemaSyntaxError(f"missing required key {key!r}", 1, 1)

    domain = normalize_value(_expect_str(raw["domain"], "domain"))
    slots = tuple(_parse_slot(s, i) for i, s in enumerate(_expect_list(raw["slots"], "slots")))
    requestable = tuple(
        normalize_value(_expect_str(r, "requestable_slots[]"))
        for r in _expect_list(raw.get("requestable_slots", []), "requestable_slots")
    )
    turns = tuple(
        _parse_turn(t, i) for i, t in enumerate(_expect_list(raw["skeleton"], "skeleton"))
    )
    schema = TaskSchema(
        ontology=DomainOntology(domain=domain, slots=slots, requestable_slots=requestable),
        skeleton=PolicySkeleton(domain=domain, turns=turns),
        task_instruction_dst=str(raw.get("task_instruction_dst", DEFAULT_DST_INSTRUCTION)),
        task_instruction_policy=str(
            raw.get("task_instruction_policy", DEFAULT_POLICY_INSTRUCTION)
        ),
    )
    _raise_on_errors(validate_schema(schema))
    return schema


def _expect_str(v, where: str) -> str:
    if not isinstance(v, str):
        raise SchemaSyntaxError(f"{where}: expected string, got {type(v).__name__}", 1, 1)
    return v


def _expect_list(v, where: str) -> list:
    if not isinstance(v, list):
        raise SchemaSyntaxError(f"{where}: expected list, got {type(v).__name__}", 1, 1)
    return v


def _parse_slot(raw, index: int) -> SlotDef:
    where = f"slots[{index}]"
    if not isinstance(raw, dict):
        raise SchemaSyntaxError(f"{where}: expected object", 1, 1)
    unknown = set(raw) - _SLOT_KEYS
    if unknown:
        raise SchemaSyntaxError(f"{where}: unknown keys {sorted(unknown)}", 1, 1)
    for key in ("name", "kind", "values", "delex_token"):
        if key not in raw:
            raise SchemaSyntaxError(f"{where}: missing key {key!r}", 1, 1)
    return SlotDef(
        name=normalize_value(_expect_str(raw["name"], f"{where}.name")),
        kind=_expect_str(raw["kind"], f"{where}.kind"),
        values=tuple(
            normalize_value(_expect_str(v, f"{where}.values[]"))
            for v in _expect_list(raw["values"], f"{where}.values")
        ),
        delex_token=_expect_str(raw["delex_token"], f"{where}.delex_token"),
        description=raw.get("description"),
    )


def _parse_turn(raw, index: int) -> TemplateTurn:
    where = f"skeleton[{index}]"
    if not isinstance(raw, dict):
        raise SchemaSyntaxError(f"{where}: expected object", 1, 1)
    unknown = set(raw) - _TURN_KEYS
    if unknown:
        raise SchemaSyntaxError(f"{where}: unknown keys {sorted(unknown)}", 1, 1)
    for key in _TURN_KEYS:
        if key not in raw:
            raise SchemaSyntaxError(f"{where}: missing key {key!r}", 1, 1)
    trig = raw["trigger"]
    if not isinstance(trig, dict) or len(trig) != 1 or not {"user", "db"} >= set(trig):
        raise SchemaSyntaxError(f"{where}.trigger: expected exactly one of user/db", 1, 1)
    act = raw["action"]
    if not isinstance(act, dict) or "name" not in act:
        raise SchemaSyntaxError(f"{where}.action: expected object with name", 1, 1)
    args = tuple(
        (normalize_value(str(a[0])), str(a[1]))
        for a in _expect_list(act.get("args", []), f"{where}.action.args")
    )
    return TemplateTurn(
        user=trig.get("user"),
        db=trig.get("db"),
        action=ActionLabel(name=normalize_value(str(act["name"])), args=args),
        response=_expect_str(raw["response"], f"{where}.response"),
    )


def serialize_schema(schema: TaskSchema) -> str:
    """Canonical writer: fixed key order, 2-space indentation."""
    slots = []
    for s in schema.ontology.slots:
        d: dict = {
            "name": s.name,
            "kind": s.kind,
            "values": list(s.values),
            "delex_token": s.delex_token,
        }
        if s.description is not None:
            d["description"] = s.description
        slots.append(d)
    turns = []
    for t in schema.skeleton.turns:
        trigger = {"user": t.user} if t.user is not None else {"db": t.db}
        turns.append(
            {
                "trigger": trigger,
                "action": {"name": t.action.name, "args": [list(a) for a in t.action.args]},
                "response": t.response,
            }
        )
    doc = {
        "domain": schema.domain,
        "slots": slots,
        "requestable_slots": list(schema.ontology.requestable_slots),
        "skeleton": turns,
        "task_instruction_dst": schema.task_instruction_dst,
        "task_instruction_policy": schema.task_instruction_policy,
    }
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# prompt-section rendering


def render_belief_instruction(schemas: list[TaskSchema], mode: str = "multi") -> str:
    """List each domain's slots and allowed/example values, in input order."""
    if mode == "single" and len(schemas) != 1:
        raise InvariantViolation(f"mode=single requires exactly one schema, got {len(schemas)}")
    blocks = []
    for schema in schemas:
        lines = [f"domain: {schema.domain}"]
        for s in schema.ontology.slots:
            if s.kind == "categorical":
                lines.append(f"{s.name}: {' | '.join(s.values)}")
            elif s.values:
                lines.append(f"{s.name}: e.g. {' | '.join(s.values)}")
            else:
                lines.append(f"{s.name}: (free text)")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def render_policy_skeleton_text(schema: TaskSchema) -> str:
    """Render each template turn as trigger / action / response lines."""
    lines = []
    for t in schema.skeleton.turns:
        lines.append(t.trigger_text())
        lines.append(f"System Action: {t.action.render()}")
        lines.append(f"Response: {t.response}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# editing


def apply_schema_edit(schema: TaskSchema, edit: SchemaEdit) -> TaskSchema:
    """Apply a pure edit and revalidate; the input schema is left untouched."""
    turns = list(schema.skeleton.turns)
    n = len(turns)
    for tid, _ in edit.amend_turns:
        if not 0 <= tid < n:
            raise InvariantViolation(f"amend_turns: no turn with id {tid}")
    for tid in edit.remove_turn_ids:
        if not 0 <= tid < n:
            raise InvariantViolation(f"remove_turn_ids: no turn with id {tid}")
    for tid, new_turn in edit.amend_turns:
        turns[tid] = new_turn
    removed = set(edit.remove_turn_ids)
    turns = [t for i, t in enumerate(turns) if i not in removed]
    turns.extend(edit.add_turns)

    slots = list(schema.ontology.slots)
    existing = {s.name for s in slots}
    for s in edit.add_slots:
        if s.name in existing:
            raise InvariantViolation(f"add_slots: slot {s.name!r} already exists")
        slots.append(s)
        existing.add(s.name)
    gone = set(edit.remove_slot_names)
    missing = gone - existing
    if missing:
        raise InvariantViolation(f"remove_slot_names: unknown slots {sorted(missing)}")
    slots = [s for s in slots if s.name not in gone]
    requestable = tuple(
        r for r in schema.ontology.requestable_slots if r not in gone
    )

    edited = TaskSchema(
        ontology=replace(schema.ontology, slots=tuple(slots), requestable_slots=requestable),
        skeleton=replace(schema.skeleton, turns=tuple(turns)),
        task_instruction_dst=schema.task_instruction_dst,
        task_instruction_policy=schema.task_instruction_policy,
    )
    diags = validate_schema(edited)
    errors = [d.message for d in diags if d.severity == "error"]
    # an edit must not remove db coverage the schema previously had
    before = {t.db for t in schema.skeleton.turns if t.db is not None}
    after = {t.db for t in edited.skeleton.turns if t.db is not None}
    for k in ("zero", "one"):
        if k in before and k not in after:
            errors.append(f"edit removes the only db-triggered turn for class {k}")
    if errors:
        raise InvariantViolation("; ".join(errors))
    return edited
