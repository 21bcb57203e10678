"""Dialog-state tracking surface: the DST prompt and the SQL belief format.

The belief state travels between the engine and the LLM as a single line
``select * from <domain> where <slot> = <value> ; ...``. Parsing is tolerant
of chatter around the statement; serialization is canonical and bit-exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DuplicateSlot, InvalidHistory, InvariantViolation, ParseFailure
from .schema import FormattingExample, TaskSchema, render_belief_instruction
from .text import normalize_value

SECTION_TASK = "### Task instruction"
SECTION_BELIEF = "### Belief instructions"
SECTION_EXAMPLE = "### Formatting example"
SECTION_INPUT = "### Test input"


@dataclass(frozen=True)
class Utterance:
    speaker: str  # "user" | "system"
    text: str


@dataclass(frozen=True)
class DialogHistory:
    turns: tuple[Utterance, ...] = ()

    def append(self, speaker: str, text: str) -> "DialogHistory":
        return DialogHistory(self.turns + (Utterance(speaker, text),))

    def validate(self) -> None:
        """Speakers must strictly alternate starting (and ending) with the user."""
        if not self.turns:
            raise InvalidHistory("history is empty")
        for i, u in enumerate(self.turns):
            expected = "user" if i % 2 == 0 else "system"
            if u.speaker != expected:
                raise InvalidHistory(f"turn {i}: expected {expected}, got {u.speaker}")
            if not u.text.strip():
                raise InvalidHistory(f"turn {i}: empty utterance")
        if self.turns[-1].speaker != "user":
            raise InvalidHistory("last utterance must be the user's")

    def render(self) -> str:
        labels = {"user": "User", "system": "System"}
        return "\n".join(f"{labels[u.speaker]}: {u.text}" for u in self.turns)


@dataclass(frozen=True)
class BeliefState:
    domain: str
    constraints: tuple[tuple[str, str], ...] = ()  # ordered (slot, value) pairs

    def value_of(self, slot: str) -> str | None:
        for s, v in self.constraints:
            if s == slot:
                return v
        return None


@dataclass(frozen=True)
class DstPrompt:
    task_instruction: str
    belief_instructions: str
    formatting_example: str
    test_input: str
    full_text: str


def build_dst_prompt(
    schemas: list[TaskSchema],
    example: FormattingExample,
    history: DialogHistory,
    mode: str = "multi",
) -> DstPrompt:
    """Assemble the four-section state-tracking prompt, deterministically."""
    history.validate()
    for schema in schemas:
        if example.source_domain == schema.domain:
            raise InvariantViolation(
                f"formatting example domain {example.source_domain!r} collides with "
                f"an active schema (must come from a different domain)"
            )
    if not schemas:
        raise InvariantViolation("at least one schema is required")
    task_instruction = schemas[0].task_instruction_dst
    belief_instructions = render_belief_instruction(schemas, mode=mode)
    formatting = example.render_dst()
    test_input = history.render()
    full = "\n".join(
        [
            SECTION_TASK,
            task_instruction,
            SECTION_BELIEF,
            belief_instructions,
            SECTION_EXAMPLE,
            formatting,
            SECTION_INPUT,
            test_input,
            "",
        ]
    )
    return DstPrompt(task_instruction, belief_instructions, formatting, test_input, full)


_SELECT = re.compile(r"select\s+\*\s+from\s+([A-Za-z0-9_]+)", re.IGNORECASE)


def parse_belief_sql(text: str) -> BeliefState:
    """Extract the first belief statement from raw model output.

    Grammar: ``select * from <domain> [where <slot> = <value> (; ...)*]``.
    Values may span several words; ";" and "=" are reserved separators. The
    where-clause runs to the end of its line; anything after the statement
    (same line after a bare domain, or later lines) is ignored.
    """
    m = _SELECT.search(text)
    if m is None:
        raise ParseFailure("no 'select * from' statement found")
    domain = normalize_value(m.group(1))
    rest = text[m.end() :]
    line = rest.splitlines()[0] if rest.splitlines() else ""
    where_match = re.match(r"\s*where\b", line, re.IGNORECASE)
    where_part = line[where_match.end() :] if where_match else None

    constraints: list[tuple[str, str]] = []
    if where_part is not None:
        seen: set[str] = set()
        for clause in where_part.split(";"):
            if not clause.strip():
                raise ParseFailure("empty constraint in where-clause")
            if "=" not in clause:
                raise ParseFailure(f"constraint without '=': {clause.strip()!r}")
            slot_raw, value_raw = clause.split("=", 1)
            if "=" in value_raw:
                raise ParseFailure(f"multiple '=' in constraint: {clause.strip()!r}")
            slot = normalize_value(slot_raw)
            value = normalize_value(value_raw)
            if not slot or not value:
                raise ParseFailure(f"incomplete constraint: {clause.strip()!r}")
            if slot in seen:
                raise DuplicateSlot(f"slot {slot!r} repeats in where-clause")
            seen.add(slot)
            constraints.append((slot, value))
    return BeliefState(domain=domain, constraints=tuple(constraints))


def serialize_belief_sql(state: BeliefState) -> str:
    """Canonical form: lowercase, single spaces, " ; " separators."""
    if not state.constraints:
        return f"select * from {state.domain}"
    clauses = " ; ".join(f"{s} = {v}" for s, v in state.constraints)
    return f"select * from {state.domain} where {clauses}"
