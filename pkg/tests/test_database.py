from __future__ import annotations

import json
import random

import pytest

from oracles import db_filter_bruteforce
from schemabot.database import (
    DbState,
    lexicalize,
    load_database,
    make_entity,
    query_database,
    render_db_state,
)
from schemabot.dst import BeliefState
from schemabot.errors import DomainMismatch, DuplicateEntityName, SchemaSyntaxError


def test_load_table_fixture_entry(db):
    chop_house = db.entities[0]
    assert chop_house.name == "saint johns chop house"
    assert chop_house.raw("address") == "21 - 24 Northampton Street"
    assert chop_house.raw("phone") == "01223353110"
    assert chop_house.raw("delivery fee") == "6 pounds"
    # non-string values are carried opaquely as their JSON rendering
    assert chop_house.raw("location") == "[52.21031, 0.11381]"


def test_load_empty_entity_list():
    assert load_database('{"domain": "hotel", "entities": []}').entities == ()


def test_load_rejects_duplicate_names():
    doc = {"domain": "restaurant", "entities": [{"name": "golden wok"}, {"name": "Golden Wok"}]}
    with pytest.raises(DuplicateEntityName):
        load_database(json.dumps(doc))


def test_load_rejects_missing_name():
    with pytest.raises(SchemaSyntaxError, match="name"):
        load_database('{"domain": "x", "entities": [{"area": "west"}]}')


def test_query_single_match_from_dialog_goal(db):
    belief = BeliefState(
        "restaurant",
        (("area", "west"), ("food", "british"), ("pricerange", "moderate")),
    )
    state = query_database(db, belief)
    assert state.count == 1
    assert state.selected.name == "saint johns chop house"
    assert state.klass == "one"


def test_query_zero_matches_for_unavailable_cuisine(db):
    state = query_database(db, BeliefState("restaurant", (("food", "tuscan"),)))
    assert state.count == 0
    assert state.selected is None
    assert state.klass == "zero"


def test_query_dontcare_ignores_constraint(db):
    state = query_database(db, BeliefState("restaurant", (("pricerange", "dontcare"),)))
    assert state.count == len(db.entities)


def test_query_empty_constraints_selects_first(db):
    state = query_database(db, BeliefState("restaurant"))
    assert state.count == len(db.entities)
    assert state.selected == db.entities[0]


def test_query_domain_mismatch(db):
    with pytest.raises(DomainMismatch):
        query_database(db, BeliefState("hotel"))


def test_query_missing_slot_never_matches(db):
    # only the chop house has a "dish" attribute
    state = query_database(db, BeliefState("restaurant", (("dish", "beef wellington"),)))
    assert state.count == 1
    assert state.selected.name == "saint johns chop house"


def test_query_matches_bruteforce_filter_on_random_cases(db):
    rng = random.Random(1234)
    slots = ["area", "food", "pricerange", "name", "phone", "dish"]
    values = ["west", "centre", "north", "british", "korean", "italian", "moderate",
              "cheap", "expensive", "dontcare", "saint johns chop house", "nope"]
    for _ in range(300):
        n = rng.randint(0, 4)
        chosen = rng.sample(slots, n)
        constraints = tuple((s, rng.choice(values)) for s in chosen)
        belief = BeliefState("restaurant", constraints)
        got = query_database(db, belief)
        count, matching, first = db_filter_bruteforce(db.entities, constraints)
        assert got.count == count
        assert got.selected == (db.entities[first] if first is not None else None)


def test_query_monotone_under_entity_addition(db):
    from schemabot.database import Database

    belief = BeliefState("restaurant", (("food", "korean"),))
    before = query_database(db, belief).count
    extra = make_entity({"name": "seoul kitchen", "food": "korean"})
    bigger = Database(domain="restaurant", entities=db.entities + (extra,))
    assert query_database(bigger, belief).count >= before


def test_render_db_state_fixed_table(db):
    chop_house = db.entities[0]
    assert render_db_state(DbState(0)) == "zero matches"
    assert (
        render_db_state(DbState(1, chop_house))
        == "one match: name = saint johns chop house"
    )
    little_seoul = db.entities[1]
    assert render_db_state(DbState(3, little_seoul)) == "3 matches: first name = little seoul"


def test_lexicalize_fills_from_selected_entity(schema, db):
    chop_house = db.entities[0]
    text, diags = lexicalize(
        "[value_name]'s address is [value_address], their phone number is [value_phone].",
        DbState(1, chop_house),
        BeliefState("restaurant"),
        schema,
    )
    assert text == (
        "saint johns chop house's address is 21 - 24 Northampton Street, "
        "their phone number is 01223353110."
    )
    assert diags == []


def test_lexicalize_without_tokens_is_identity(schema, db):
    text, diags = lexicalize("no tokens here.", DbState(1, db.entities[0]), None, schema)
    assert text == "no tokens here."
    assert diags == []


def test_lexicalize_falls_back_to_belief_value(schema):
    belief = BeliefState("restaurant", (("food", "korean"),))
    text, diags = lexicalize("you asked for [value_food] food", None, belief, schema)
    assert text == "you asked for korean food"
    assert diags == []


def test_lexicalize_unresolved_token_left_with_diagnostic(schema):
    text, diags = lexicalize("call [value_phone]", None, None, schema)
    assert text == "call [value_phone]"
    assert diags == ["unresolved delex token [value_phone]"]


def test_lexicalize_is_simultaneous_no_rescan(schema, db):
    # substituted text containing a token-like string must not be re-expanded
    tricky = make_entity({"name": "[value_phone]", "phone": "123"})
    text, _ = lexicalize("[value_name]", DbState(1, tricky), None, schema)
    assert text == "[value_phone]"


def test_lexicalize_idempotent_when_fully_resolved(schema, db):
    state = DbState(1, db.entities[0])
    once, diags = lexicalize("[value_name] in the west", state, None, schema)
    assert diags == []
    twice, _ = lexicalize(once, state, None, schema)
    assert twice == once
