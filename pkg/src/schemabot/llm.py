"""The frozen-LLM boundary: one completion contract, two backends.

The HTTP backend speaks the OpenAI-compatible chat-completions shape with the
whole assembled prompt as a single user message. The scripted backend replays
a deterministic rule table and exists so every pipeline test can run offline.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Protocol

import httpx

from .errors import CompletionTimeout, ConfigInvalid, HttpError, MissingApiKey, SchemaSyntaxError

DEFAULT_TEMPERATURE = 0.5
DEFAULT_MAX_TOKENS = 256


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop_sequences: tuple[str, ...] = ()


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http" | "scripted"
    base_url: str = ""
    model_name: str = ""
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 30.0
    script_path: str = ""

    def validate(self) -> None:
        if self.kind == "http":
            if not self.base_url or not self.model_name:
                raise ConfigInvalid("http backend requires base_url and model_name")
        elif self.kind == "scripted":
            if not self.script_path:
                raise ConfigInvalid("scripted backend requires script_path")
        else:
            raise ConfigInvalid(f"unknown backend kind {self.kind!r}")


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


@dataclass(frozen=True)
class ScriptRule:
    matcher: str  # "exact_prompt_hash" | "contains_substring"
    pattern: str
    completion: str

    def matches(self, prompt: str) -> bool:
        if self.matcher == "exact_prompt_hash":
            return hashlib.sha256(prompt.encode()).hexdigest() == self.pattern
        return self.pattern in prompt


@dataclass(frozen=True)
class ScriptTable:
    rules: tuple[ScriptRule, ...] = ()
    default_completion: str = ""


class ScriptedBackend:
    """Deterministic rule-table backend: first matching rule wins."""

    def __init__(self, table: ScriptTable):
        self.table = table

    def complete(self, request: CompletionRequest) -> str:
        for rule in self.table.rules:
            if rule.matches(request.prompt):
                return rule.completion
        return self.table.default_completion


def load_script_table(text: str) -> ScriptTable:
    """Script file: {"rules": [...], "default_completion": str} or a bare rule list."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaSyntaxError(e.msg, e.lineno, e.colno) from e
    if isinstance(raw, list):
        rules_raw, default = raw, ""
    elif isinstance(raw, dict):
        rules_raw = raw.get("rules", [])
        default = str(raw.get("default_completion", ""))
    else:
        raise SchemaSyntaxError("script file must be a list or object", 1, 1)
    rules = []
    for i, r in enumerate(rules_raw):
        if not isinstance(r, dict) or "pattern" not in r or "completion" not in r:
            raise SchemaSyntaxError(f"rules[{i}]: expected object with pattern/completion", 1, 1)
        matcher = r.get("matcher", "contains_substring")
        if matcher not in ("exact_prompt_hash", "contains_substring"):
            raise SchemaSyntaxError(f"rules[{i}]: unknown matcher {matcher!r}", 1, 1)
        rules.append(ScriptRule(matcher, str(r["pattern"]), str(r["completion"])))
    return ScriptTable(rules=tuple(rules), default_completion=default)


class HttpBackend:
    """OpenAI-compatible chat-completions client with one retry on 5xx/timeout."""

    def __init__(self, config: BackendConfig, client: httpx.Client | None = None):
        config.validate()
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)

    def complete(self, request: CompletionRequest) -> str:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise MissingApiKey(f"environment variable {self.config.api_key_env} is not set")
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stop": list(request.stop_sequences),
        }
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {key}"}
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                resp = self._client.post(url, json=body, headers=headers)
            except httpx.TimeoutException as e:
                last_exc = CompletionTimeout(str(e))
                continue
            if resp.status_code >= 500:
                last_exc = HttpError(resp.status_code, resp.text)
                continue
            if resp.status_code != 200:
                raise HttpError(resp.status_code, resp.text)
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        raise last_exc  # type: ignore[misc]


def make_backend(config: BackendConfig) -> Backend:
    config.validate()
    if config.kind == "scripted":
        with open(config.script_path, encoding="utf-8") as f:
            return ScriptedBackend(load_script_table(f.read()))
    return HttpBackend(config)


def complete(config: BackendConfig, request: CompletionRequest) -> str:
    """One-shot completion against a freshly constructed backend."""
    return make_backend(config).complete(request)
