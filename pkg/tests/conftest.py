from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from schemabot.engine import AblationFlags, EngineConfig
from schemabot.fixtures import (
    DEFAULT_DST_EXAMPLE,
    DEFAULT_POLICY_EXAMPLE,
    restaurant_corpus,
    restaurant_db,
    restaurant_schema,
)
from schemabot.llm import ScriptedBackend, ScriptTable


@pytest.fixture(scope="session")
def schema():
    return restaurant_schema()


@pytest.fixture(scope="session")
def db():
    return restaurant_db()


@pytest.fixture(scope="session")
def corpus(schema):
    return restaurant_corpus([schema])


@pytest.fixture
def make_cfg(schema, db):
    """Engine config factory bound to the restaurant fixtures."""

    def _make(backend=None, schemas=None, ablation=AblationFlags(), **kwargs):
        return EngineConfig(
            schemas=tuple(schemas) if schemas is not None else (schema,),
            databases={"restaurant": db},
            dst_example=DEFAULT_DST_EXAMPLE,
            policy_example=DEFAULT_POLICY_EXAMPLE,
            backend=backend if backend is not None else ScriptedBackend(ScriptTable()),
            ablation=ablation,
            **kwargs,
        )

    return _make
