"""Exception types shared across the package."""

from __future__ import annotations


class SchemabotError(Exception):
    """Base class for all errors raised by this package."""


class SchemaSyntaxError(SchemabotError):
    """Malformed schema/database/corpus file; carries the source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})" if line else message)
        self.line = line
        self.col = col


class InvariantViolation(SchemabotError):
    """A structural invariant does not hold (duplicate slots, unknown tokens, ...)."""


class ParseFailure(SchemabotError):
    """Raw model output does not contain the expected statement or markers."""


class DuplicateSlot(ParseFailure):
    """A slot name repeats inside one belief-state where-clause."""


class InvalidHistory(SchemabotError):
    """Dialog history violates the user/system alternation invariant."""


class DomainMismatch(SchemabotError):
    """Belief-state domain differs from the schema or database domain."""


class DuplicateEntityName(SchemabotError):
    """Two database entities share a name within one domain."""


class ConfigInvalid(SchemabotError):
    """Engine or backend configuration is inconsistent."""


class BackendError(SchemabotError):
    """LLM backend failed after the retry budget was exhausted."""


class MissingApiKey(BackendError):
    """The configured API-key environment variable is not set."""


class HttpError(BackendError):
    """Non-success HTTP status from the completion endpoint."""

    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class CompletionTimeout(BackendError):
    """The completion request timed out (after one retry)."""


class EmptyCorpus(SchemabotError):
    """Corpus-level metric requested over zero dialogs/pairs."""


class GoalInvalid(SchemabotError):
    """A corpus goal references slots unknown to the schema."""
