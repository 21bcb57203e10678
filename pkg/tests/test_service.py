from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from schemabot.evaluate import DialogGoal
from schemabot.llm import ScriptedBackend, ScriptRule, ScriptTable
from schemabot.service import create_app

PHONE_TABLE = ScriptTable(
    rules=(
        ScriptRule(
            "contains_substring",
            "Belief: select * from restaurant",
            "System Action: inform(phone=[value_phone])\n"
            "Response: the phone number of [value_name] is [value_phone].",
        ),
        ScriptRule(
            "contains_substring",
            "### Test input",
            "select * from restaurant where food = korean",
        ),
    ),
    default_completion="",
)

GOALS = {
    "g-korean": DialogGoal(
        domain="restaurant", informable=(("food", "korean"),), requested=("phone",)
    ),
    "g-british": DialogGoal(
        domain="restaurant", informable=(("food", "british"),), requested=("address",)
    ),
}


@pytest.fixture
def client(make_cfg):
    cfg = make_cfg(backend=ScriptedBackend(PHONE_TABLE))
    app = create_app(cfg, goals=GOALS, seed=7)
    return TestClient(app)


def _rate(client, session_id, claimed=True, und=5, app_=5):
    return client.post(
        f"/sessions/{session_id}/rating",
        json={"success_claimed": claimed, "understanding": und, "appropriateness": app_},
    )


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_create_session_with_explicit_goal(client):
    response = client.post("/sessions", json={"goal_id": "g-korean"})
    assert response.status_code == 200
    body = response.json()
    assert body["goal"]["id"] == "g-korean"
    assert body["goal"]["informable"] == [["food", "korean"]]
    assert body["session_id"]


def test_create_session_unknown_goal_404(client):
    response = client.post("/sessions", json={"goal_id": "nope"})
    assert response.status_code == 404
    assert response.json()["error"] == "unknown goal"


def test_seeded_goal_sampling_is_deterministic(make_cfg):
    cfg = make_cfg(backend=ScriptedBackend(PHONE_TABLE))

    def pick():
        app = create_app(cfg, goals=GOALS, seed=7)
        with TestClient(app) as c:
            return [c.post("/sessions", json={}).json()["goal"]["id"] for _ in range(4)]

    assert pick() == pick()


def test_message_round_trip_with_trace(client):
    session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    response = client.post(f"/sessions/{session_id}/messages", json={"text": "phone number?"})
    assert response.status_code == 200
    body = response.json()
    assert "01223308681" in body["response"]
    trace = body["trace"]
    assert trace["belief"] == "select * from restaurant where food = korean"
    assert trace["db"] == "one match: name = little seoul"
    assert trace["action"] == "inform(phone=[value_phone])"
    assert trace["final_response"] == body["response"]


def test_message_unknown_session_404(client):
    assert client.post("/sessions/nope/messages", json={"text": "hi"}).status_code == 404


def test_message_empty_text_422(client):
    session_id = client.post("/sessions", json={}).json()["session_id"]
    response = client.post(f"/sessions/{session_id}/messages", json={"text": "  "})
    assert response.status_code == 422


def test_rating_grounded_success(client):
    session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "phone number for korean?"})
    response = _rate(client, session_id)
    assert response.status_code == 200
    assert response.json() == {"accepted": True, "success_w_g": True}


def test_rating_ungrounded_when_value_never_mentioned(client):
    # goal requests the address but the bot only ever gives the phone
    session_id = client.post("/sessions", json={"goal_id": "g-british"}).json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "korean phone please"})
    response = _rate(client, session_id)
    assert response.json() == {"accepted": True, "success_w_g": False}


def test_rating_not_grounded_unless_claimed(client):
    session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "phone number?"})
    response = _rate(client, session_id, claimed=False)
    assert response.json()["success_w_g"] is False


def test_rating_twice_409(client):
    session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "phone?"})
    assert _rate(client, session_id).status_code == 200
    assert _rate(client, session_id).status_code == 409


def test_rating_out_of_range_422(client):
    session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "phone?"})
    assert _rate(client, session_id, und=6).status_code == 422
    assert _rate(client, session_id, app_=0).status_code == 422


def test_rating_before_any_turn_422(client):
    session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    assert _rate(client, session_id).status_code == 422


def test_report_requires_rated_sessions(client):
    assert client.get("/reports/human-eval").status_code == 409


def test_report_aggregates(client):
    # session 1: 2 exchanges, claimed + grounded
    s1 = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    client.post(f"/sessions/{s1}/messages", json={"text": "korean phone?"})
    client.post(f"/sessions/{s1}/messages", json={"text": "thanks again"})
    _rate(client, s1, claimed=True, und=5, app_=4)
    # session 2: 4 exchanges, claimed but not grounded (address never given)
    s2 = client.post("/sessions", json={"goal_id": "g-british"}).json()["session_id"]
    for text in ["hello", "korean?", "phone?", "ok bye"]:
        client.post(f"/sessions/{s2}/messages", json={"text": text})
    _rate(client, s2, claimed=True, und=4, app_=4)
    # session 3: 1 exchange, not claimed
    s3 = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
    client.post(f"/sessions/{s3}/messages", json={"text": "hi"})
    _rate(client, s3, claimed=False, und=3, app_=2)

    report = client.get("/reports/human-eval").json()
    assert report["n_sessions"] == 3
    assert report["success_wo_g_pct"] == pytest.approx(66.67, abs=0.01)
    assert report["success_w_g_pct"] == pytest.approx(33.33, abs=0.01)
    assert report["success_w_g_pct"] <= report["success_wo_g_pct"]
    assert report["mean_understanding"] == pytest.approx(4.0)
    assert report["mean_appropriateness"] == pytest.approx(10 / 3)
    # mean turns over success-w/o-g sessions only: (2 + 4) / 2
    assert report["mean_turns_successful"] == pytest.approx(3.0)


def test_persistence_appends_jsonl(make_cfg, tmp_path):
    cfg = make_cfg(backend=ScriptedBackend(PHONE_TABLE))
    path = tmp_path / "events.jsonl"
    app = create_app(cfg, goals=GOALS, seed=1, persist_path=path)
    with TestClient(app) as client:
        session_id = client.post("/sessions", json={"goal_id": "g-korean"}).json()["session_id"]
        client.post(f"/sessions/{session_id}/messages", json={"text": "phone?"})
        _rate(client, session_id)
    events = [line for line in path.read_text().splitlines() if line]
    kinds = [__import__("json").loads(e)["event"] for e in events]
    assert kinds == ["session", "message", "rating"]
