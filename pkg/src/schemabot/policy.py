"""Policy prompt assembly and parsing of the model's action/response output."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .database import DbState, render_db_state
from .dst import (
    SECTION_EXAMPLE,
    SECTION_INPUT,
    SECTION_TASK,
    BeliefState,
    DialogHistory,
    serialize_belief_sql,
)
from .errors import DomainMismatch, ParseFailure
from .schema import ActionLabel, FormattingExample, TaskSchema, render_policy_skeleton_text
from .text import DELEX_TOKEN, normalize_value

SECTION_SKELETON = "### Policy skeleton"

# fixed fallback used after the retry budget is exhausted (see engine)
FALLBACK_ACTION = ActionLabel("nomatch")
FALLBACK_RESPONSE = "i am sorry, i did not understand that. could you rephrase your request?"


@dataclass(frozen=True)
class PolicyPrompt:
    task_instruction: str
    formatting_example: str
    policy_skeleton: str
    test_input: str
    full_text: str


@dataclass(frozen=True)
class SystemAction:
    label: ActionLabel

    def render(self) -> str:
        return self.label.render()


@dataclass(frozen=True)
class PolicyOutput:
    action: SystemAction
    delex_response: str

    def unknown_tokens(self, schema: TaskSchema) -> list[str]:
        """Bracketed tokens in the response that no slot declares (diagnostic-level)."""
        known = set(schema.delex_tokens())
        return [f"[{t}]" for t in DELEX_TOKEN.findall(self.delex_response) if f"[{t}]" not in known]


def build_policy_prompt(
    schema: TaskSchema,
    example: FormattingExample,
    history: DialogHistory,
    belief: BeliefState | None,
    db_state: DbState | None,
    include_skeleton: bool = True,
) -> PolicyPrompt:
    """Assemble the four-section action/response prompt.

    ``belief`` / ``db_state`` may be None (ablation runs): the corresponding
    test-input line is omitted. ``include_skeleton=False`` drops the skeleton
    section body and header entirely.
    """
    history.validate()
    if belief is not None and belief.domain != schema.domain:
        raise DomainMismatch(
            f"belief domain {belief.domain!r} != schema domain {schema.domain!r}"
        )
    skeleton_text = render_policy_skeleton_text(schema) if include_skeleton else ""
    example_text = example.render_policy(
        include_belief=belief is not None, include_db=db_state is not None
    )
    input_lines = [history.render()]
    if belief is not None:
        input_lines.append(f"Belief: {serialize_belief_sql(belief)}")
    if db_state is not None:
        input_lines.append(f"DB: {render_db_state(db_state)}")
    test_input = "\n".join(input_lines)

    parts = [SECTION_TASK, schema.task_instruction_policy, SECTION_EXAMPLE, example_text]
    if include_skeleton:
        parts += [SECTION_SKELETON, skeleton_text]
    parts += [SECTION_INPUT, test_input, ""]
    full = "\n".join(parts)
    return PolicyPrompt(
        task_instruction=schema.task_instruction_policy,
        formatting_example=example_text,
        policy_skeleton=skeleton_text,
        test_input=test_input,
        full_text=full,
    )


_ACTION_LINE = re.compile(
    r"^\s*System Action:\s*(?P<name>[A-Za-z_][A-Za-z0-9_ ]*?)\s*(?:\((?P<args>.*)\))?\s*$"
)
_RESPONSE_LINE = re.compile(r"^\s*Response:\s*(?P<text>.+?)\s*$")


def parse_policy_output(text: str) -> PolicyOutput:
    """Pick the first "System Action:" line and the first "Response:" after it.

    Chatter before, between, or after the two marker lines is ignored.
    """
    lines = text.splitlines()
    action: ActionLabel | None = None
    for i, line in enumerate(lines):
        m = _ACTION_LINE.match(line)
        if m is None:
            continue
        action = ActionLabel(
            name=normalize_value(m.group("name")), args=_parse_args(m.group("args"))
        )
        for rest in lines[i + 1 :]:
            r = _RESPONSE_LINE.match(rest)
            if r is not None:
                return PolicyOutput(action=SystemAction(action), delex_response=r.group("text"))
        raise ParseFailure("found 'System Action:' but no subsequent 'Response:' line")
    raise ParseFailure("no 'System Action:' line in model output")


def _parse_args(raw: str | None) -> tuple[tuple[str, str], ...]:
    if not raw or not raw.strip():
        return ()
    args = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            slot, token = part.split("=", 1)
            args.append((normalize_value(slot), token.strip()))
        else:
            args.append((normalize_value(part), ""))
    return tuple(args)
