"""Entity database: loading, belief-state queries, and (de)lexicalization.

Matching is exact on normalized strings; raw surface forms are kept alongside
and used when values are substituted back into a delexicalized response.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import DomainMismatch, DuplicateEntityName, SchemaSyntaxError
from .text import DONTCARE, normalize_value

if TYPE_CHECKING:
    from .dst import BeliefState
    from .schema import TaskSchema


@dataclass(frozen=True)
class Entity:
    attributes: dict[str, str]  # raw surface forms, as loaded
    normalized: dict[str, str]  # lowercased/collapsed copies used for matching

    @property
    def name(self) -> str:
        return self.attributes["name"]

    def raw(self, slot: str) -> str | None:
        return self.attributes.get(slot)


def make_entity(attributes: dict[str, str]) -> Entity:
    return Entity(
        attributes=dict(attributes),
        normalized={k: normalize_value(v) for k, v in attributes.items()},
    )


@dataclass(frozen=True)
class Database:
    domain: str
    entities: tuple[Entity, ...]


@dataclass(frozen=True)
class DbState:
    count: int
    selected: Entity | None = None

    @property
    def klass(self) -> str:
        if self.count == 0:
            return "zero"
        return "one" if self.count == 1 else "many"


def load_database(text: str) -> Database:
    """Load a DB file: {"domain": str, "entities": [{slot: value, ...}]}.

    Non-string attribute values (e.g. coordinate arrays) are carried opaquely
    as their JSON rendering.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaSyntaxError(e.msg, e.lineno, e.colno) from e
    if not isinstance(raw, dict) or "domain" not in raw or "entities" not in raw:
        raise SchemaSyntaxError("db file must be an object with domain and entities", 1, 1)
    if not isinstance(raw["entities"], list):
        raise SchemaSyntaxError("entities must be a list", 1, 1)
    entities = []
    seen_names: set[str] = set()
    for i, item in enumerate(raw["entities"]):
        if not isinstance(item, dict):
            raise SchemaSyntaxError(f"entities[{i}]: expected object", 1, 1)
        attrs = {
            normalize_value(str(k)): (v if isinstance(v, str) else json.dumps(v))
            for k, v in item.items()
        }
        if "name" not in attrs:
            raise SchemaSyntaxError(f"entities[{i}]: missing name attribute", 1, 1)
        entity = make_entity(attrs)
        key = entity.normalized["name"]
        if key in seen_names:
            raise DuplicateEntityName(f"duplicate entity name {entity.name!r}")
        seen_names.add(key)
        entities.append(entity)
    return Database(domain=normalize_value(str(raw["domain"])), entities=tuple(entities))


def entity_matches(entity: Entity, belief: "BeliefState") -> bool:
    """An entity matches iff every non-dontcare constraint equals its value."""
    for slot, value in belief.constraints:
        if value == DONTCARE:
            continue
        if entity.normalized.get(slot) != value:
            return False
    return True


def query_database(db: Database, belief: "BeliefState") -> DbState:
    """c = DB(b): count matching entities; the first match in file order is selected."""
    if belief.domain != db.domain:
        raise DomainMismatch(f"belief domain {belief.domain!r} != db domain {db.domain!r}")
    matches = [e for e in db.entities if entity_matches(e, belief)]
    return DbState(count=len(matches), selected=matches[0] if matches else None)


def render_db_state(state: DbState) -> str:
    if state.count == 0:
        return "zero matches"
    if state.count == 1:
        return f"one match: name = {state.selected.name}"
    return f"{state.count} matches: first name = {state.selected.name}"


def lexicalize(
    delex_response: str,
    db_state: "DbState | None",
    belief: "BeliefState | None",
    schema: "TaskSchema",
) -> tuple[str, list[str]]:
    """Substitute real values for delex tokens, in one simultaneous pass.

    Resolution order per token: selected entity's raw attribute, then the
    belief-state value for the owning slot; unresolved tokens stay in place
    and produce a diagnostic.
    """
    token_to_slot = schema.delex_tokens()
    if not token_to_slot:
        return delex_response, []
    entity = db_state.selected if db_state is not None else None
    diagnostics: list[str] = []
    pattern = re.compile(
        "|".join(re.escape(t) for t in sorted(token_to_slot, key=len, reverse=True))
    )

    def substitute(m: "re.Match[str]") -> str:
        token = m.group(0)
        slot = token_to_slot[token]
        if entity is not None:
            raw = entity.raw(slot)
            if raw is not None:
                return raw
        if belief is not None:
            value = belief.value_of(slot)
            if value is not None:
                return value
        diagnostics.append(f"unresolved delex token {token}")
        return token

    return pattern.sub(substitute, delex_response), diagnostics
