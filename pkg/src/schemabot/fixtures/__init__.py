"""Shipped fixtures: restaurant schema, entity database, a small eval corpus,
default formatting examples, and the delivery-service domain extension edit."""

from __future__ import annotations

from importlib import resources

from ..database import Database, load_database
from ..evaluate import CorpusDialog, load_corpus
from ..schema import (
    ActionLabel,
    FormattingExample,
    SchemaEdit,
    SlotDef,
    TaskSchema,
    TemplateTurn,
    parse_schema,
)


def _read(name: str) -> str:
    return (resources.files(__package__) / name).read_text(encoding="utf-8")


def restaurant_schema() -> TaskSchema:
    return parse_schema(_read("restaurant_schema.json"))


def restaurant_db() -> Database:
    return load_database(_read("restaurant_db.json"))


def restaurant_corpus(schemas: list[TaskSchema] | None = None) -> list[CorpusDialog]:
    schemas = schemas if schemas is not None else [restaurant_schema()]
    return load_corpus(_read("restaurant_corpus.jsonl"), schemas)


# Built-in formatting examples come from a synthetic flight domain so they
# never collide with the active schemas (the exemplar must be cross-domain).
DEFAULT_DST_EXAMPLE = FormattingExample(
    source_domain="flight",
    dst_history=(
        "User: i need a flight to oslo on friday\n"
        "System: what time would you like to depart?\n"
        "User: in the morning, economy class please"
    ),
    dst_belief_line="select * from flight where destination = oslo ; day = friday ; "
    "departure = morning ; class = economy",
)

DEFAULT_POLICY_EXAMPLE = FormattingExample(
    source_domain="flight",
    policy_skeleton_snippet=(
        "User: i need a flight to [flight_destination]\n"
        "System Action: request(day=[flight_day])\n"
        "Response: what day would you like to fly?"
    ),
    policy_history="User: i need a flight to oslo",
    policy_belief_line="select * from flight where destination = oslo",
    policy_db_line="3 matches: first name = sk4715",
    policy_action="request(day=[flight_day])",
    policy_response="what day would you like to fly?",
)


def restaurant_ext_edit() -> SchemaEdit:
    """Extend the restaurant schema with the delivery service: four new slots
    plus four template turns covering them."""
    return SchemaEdit(
        add_slots=(
            SlotDef(
                name="dish",
                kind="open",
                values=("beef wellington",),
                delex_token="[restaurant_dish]",
            ),
            SlotDef(
                name="delivery fee",
                kind="open",
                values=("6 pounds",),
                delex_token="[value_price]",
            ),
            SlotDef(name="start_time", kind="open", values=(), delex_token="[start_time]"),
            SlotDef(name="end_time", kind="open", values=(), delex_token="[end_time]"),
        ),
        add_turns=(
            TemplateTurn(
                user="does the restaurant offer delivery service? what is the delivery fee?",
                action=ActionLabel("inform", (("delivery fee", "[value_price]"),)),
                response="yes, they offer delivery service and the delivery charge is [value_price].",
            ),
            TemplateTurn(
                user="which dish of theirs can be delivered?",
                action=ActionLabel("inform", (("dish", "[restaurant_dish]"),)),
                response="they deliver [restaurant_dish].",
            ),
            TemplateTurn(
                user="when does the delivery service start?",
                action=ActionLabel("inform", (("start_time", "[start_time]"),)),
                response="delivery starts at [start_time].",
            ),
            TemplateTurn(
                user="until what time do they deliver?",
                action=ActionLabel("inform", (("end_time", "[end_time]"),)),
                response="they deliver until [end_time].",
            ),
        ),
    )
