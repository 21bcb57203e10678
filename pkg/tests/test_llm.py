from __future__ import annotations

import json

import httpx
import pytest

from schemabot.errors import ConfigInvalid, HttpError, MissingApiKey
from schemabot.llm import (
    BackendConfig,
    CompletionRequest,
    HttpBackend,
    ScriptedBackend,
    ScriptRule,
    ScriptTable,
    load_script_table,
    make_backend,
)


def _req(prompt: str) -> CompletionRequest:
    return CompletionRequest(prompt=prompt)


def test_scripted_first_matching_rule_wins():
    table = ScriptTable(
        rules=(
            ScriptRule("contains_substring", "select * from", "narrow"),
            ScriptRule("contains_substring", "select", "broad"),
        ),
        default_completion="default",
    )
    backend = ScriptedBackend(table)
    assert backend.complete(_req("... select * from restaurant ...")) == "narrow"
    assert backend.complete(_req("select something")) == "broad"
    assert backend.complete(_req("nothing matches")) == "default"


def test_scripted_prepending_specific_rule_only_affects_its_matches():
    base = ScriptTable(
        rules=(ScriptRule("contains_substring", "alpha", "A"),), default_completion="D"
    )
    extended = ScriptTable(
        rules=(ScriptRule("contains_substring", "alpha beta", "AB"),) + base.rules,
        default_completion="D",
    )
    assert ScriptedBackend(extended).complete(_req("alpha beta")) == "AB"
    assert ScriptedBackend(extended).complete(_req("alpha only")) == "A"
    assert ScriptedBackend(extended).complete(_req("gamma")) == "D"


def test_scripted_exact_prompt_hash_matcher():
    import hashlib

    prompt = "the exact prompt"
    digest = hashlib.sha256(prompt.encode()).hexdigest()
    table = ScriptTable(
        rules=(ScriptRule("exact_prompt_hash", digest, "pinned"),), default_completion="d"
    )
    backend = ScriptedBackend(table)
    assert backend.complete(_req(prompt)) == "pinned"
    assert backend.complete(_req(prompt + " ")) == "d"


def test_scripted_is_deterministic_across_calls():
    table = ScriptTable(
        rules=(ScriptRule("contains_substring", "x", "y"),), default_completion="z"
    )
    backend = ScriptedBackend(table)
    outs = {backend.complete(_req("x marks the spot")) for _ in range(50)}
    assert outs == {"y"}


def test_load_script_table_object_form(tmp_path):
    doc = {
        "rules": [{"matcher": "contains_substring", "pattern": "p", "completion": "c"}],
        "default_completion": "d",
    }
    table = load_script_table(json.dumps(doc))
    assert table.rules[0].pattern == "p"
    assert table.default_completion == "d"


def test_load_script_table_bare_list_form():
    table = load_script_table('[{"pattern": "p", "completion": "c"}]')
    assert table.rules[0].matcher == "contains_substring"
    assert table.default_completion == ""


def test_make_backend_scripted_reads_file(tmp_path):
    path = tmp_path / "script.json"
    path.write_text(json.dumps({"rules": [], "default_completion": "hi"}))
    backend = make_backend(BackendConfig(kind="scripted", script_path=str(path)))
    assert backend.complete(_req("anything")) == "hi"


def test_backend_config_validation():
    with pytest.raises(ConfigInvalid):
        BackendConfig(kind="http").validate()
    with pytest.raises(ConfigInvalid):
        BackendConfig(kind="scripted").validate()
    with pytest.raises(ConfigInvalid):
        BackendConfig(kind="magic").validate()


def _http_backend(handler, monkeypatch) -> HttpBackend:
    monkeypatch.setenv("LLM_API_KEY", "test-key")
    transport = httpx.MockTransport(handler)
    return HttpBackend(
        BackendConfig(kind="http", base_url="http://llm.test/v1", model_name="m"),
        client=httpx.Client(transport=transport),
    )


def test_http_backend_requires_api_key(monkeypatch):
    monkeypatch.delenv("LLM_API_KEY", raising=False)
    backend = HttpBackend(
        BackendConfig(kind="http", base_url="http://llm.test/v1", model_name="m"),
        client=httpx.Client(transport=httpx.MockTransport(lambda r: None)),
    )
    with pytest.raises(MissingApiKey):
        backend.complete(_req("hello"))


def test_http_backend_sends_openai_shape_and_returns_content(monkeypatch):
    captured = {}

    def handler(request: httpx.Request) -> httpx.Response:
        captured["url"] = str(request.url)
        captured["auth"] = request.headers.get("authorization")
        captured["body"] = json.loads(request.content)
        return httpx.Response(
            200, json={"choices": [{"message": {"content": "select * from hotel"}}]}
        )

    backend = _http_backend(handler, monkeypatch)
    out = backend.complete(
        CompletionRequest(prompt="the prompt", temperature=0.5, stop_sequences=("###",))
    )
    assert out == "select * from hotel"
    assert captured["url"] == "http://llm.test/v1/chat/completions"
    assert captured["auth"] == "Bearer test-key"
    assert captured["body"]["messages"] == [{"role": "user", "content": "the prompt"}]
    assert captured["body"]["temperature"] == 0.5
    assert captured["body"]["stop"] == ["###"]


def test_http_backend_retries_once_on_5xx(monkeypatch):
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        if calls["n"] == 1:
            return httpx.Response(503, text="overloaded")
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    backend = _http_backend(handler, monkeypatch)
    assert backend.complete(_req("p")) == "ok"
    assert calls["n"] == 2


def test_http_backend_surfaces_after_second_5xx(monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(500, text="boom")

    backend = _http_backend(handler, monkeypatch)
    with pytest.raises(HttpError) as err:
        backend.complete(_req("p"))
    assert err.value.status == 500


def test_http_backend_4xx_fails_fast(monkeypatch):
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        return httpx.Response(401, text="bad key")

    backend = _http_backend(handler, monkeypatch)
    with pytest.raises(HttpError):
        backend.complete(_req("p"))
    assert calls["n"] == 1
