"""Value normalization shared by schema parsing, belief states, and DB matching."""

from __future__ import annotations

import re

# Canonical wildcard value; matching treats it as "any value is fine".
DONTCARE = "dontcare"

_DONTCARE_SPELLINGS = {
    "dontcare",
    "dont care",
    "don't care",
    "do nt care",
    "do n't care",
}

_WS = re.compile(r"\s+")

# slot names / domains: lowercase words separated by single spaces or underscores
IDENTIFIER = re.compile(r"[a-z0-9_]+(?: [a-z0-9_]+)*")
DELEX_TOKEN = re.compile(r"\[([a-z0-9_]+(?: [a-z0-9_]+)*)\]")


def normalize_value(value: str) -> str:
    """Lowercase, trim, collapse internal whitespace, canonicalize dontcare."""
    v = _WS.sub(" ", value.strip().lower())
    if v in _DONTCARE_SPELLINGS:
        return DONTCARE
    return v


def is_identifier(name: str) -> bool:
    return bool(IDENTIFIER.fullmatch(name))


def is_delex_token(token: str) -> bool:
    return bool(DELEX_TOKEN.fullmatch(token))
