"""HTTP service: live sessions, traces, and the human-evaluation protocol.

Raters get a goal, converse with the bot, and submit one end-of-session
rating. The grounded-success verdict is computed server-side by checking the
requested slot values mentioned in system responses against the database
record of the offered entity. Sessions are in-memory with optional
append-only JSON-lines persistence.
"""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .database import entity_matches
from .engine import EngineConfig, Session, TurnTrace, new_session, step_turn
from .errors import BackendError
from .evaluate import DialogGoal, _goal_belief
from .text import normalize_value

log = logging.getLogger("schemabot.service")


@dataclass(frozen=True)
class HumanEvalRating:
    session_id: str
    success_claimed: bool
    understanding: int
    appropriateness: int
    submitted_at: float
    success_w_g: bool


@dataclass
class LiveSession:
    session: Session
    goal: DialogGoal | None
    goal_id: str | None
    lock: threading.Lock = field(default_factory=threading.Lock)
    rating: HumanEvalRating | None = None


def _error(status: int, error: str, detail: str = "") -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


def _goal_to_dict(goal: DialogGoal | None, goal_id: str | None) -> dict | None:
    if goal is None:
        return None
    return {
        "id": goal_id,
        "domain": goal.domain,
        "informable": [list(pair) for pair in goal.informable],
        "requested": list(goal.requested),
    }


def _trace_to_dict(trace: TurnTrace) -> dict:
    return {
        "user_text": trace.user_text,
        "dst_prompt": trace.dst_prompt,
        "belief": _belief_to_str(trace),
        "db": _db_to_str(trace),
        "policy_prompt": trace.policy_prompt,
        "action": trace.action.render(),
        "delex_response": trace.delex_response,
        "final_response": trace.final_response,
        "diagnostics": list(trace.diagnostics),
        "latency_ms": trace.latency_ms,
    }


def _belief_to_str(trace: TurnTrace) -> str | None:
    from .dst import serialize_belief_sql

    return serialize_belief_sql(trace.belief) if trace.belief is not None else None


def _db_to_str(trace: TurnTrace) -> str | None:
    from .database import render_db_state

    return render_db_state(trace.db_state) if trace.db_state is not None else None


def create_app(
    cfg: EngineConfig,
    goals: dict[str, DialogGoal] | None = None,
    seed: int | None = None,
    persist_path: str | Path | None = None,
) -> FastAPI:
    cfg.validate()
    app = FastAPI(title="schemabot", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    sessions: dict[str, LiveSession] = {}
    store_lock = threading.Lock()
    rng = random.Random(seed)
    goal_pool = goals or {}
    persist_file = Path(persist_path) if persist_path else None

    def persist(event: dict) -> None:
        if persist_file is None:
            return
        with store_lock:
            with persist_file.open("a", encoding="utf-8") as f:
                f.write(json.dumps(event) + "\n")

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        response = await call_next(request)
        log.info("%s %s -> %s", request.method, request.url.path, response.status_code)
        return response

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await _json_body(request)
        goal_id = body.get("goal_id")
        if goal_id is not None:
            if goal_id not in goal_pool:
                return _error(404, "unknown goal", f"no goal with id {goal_id!r}")
            goal = goal_pool[goal_id]
        elif goal_pool:
            goal_id = rng.choice(sorted(goal_pool))
            goal = goal_pool[goal_id]
        else:
            goal = None
        session = new_session(cfg)
        with store_lock:
            sessions[session.id] = LiveSession(session=session, goal=goal, goal_id=goal_id)
        persist({"event": "session", "session_id": session.id, "goal_id": goal_id})
        return {"session_id": session.id, "goal": _goal_to_dict(goal, goal_id)}

    @app.post("/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        live = sessions.get(session_id)
        if live is None:
            return _error(404, "unknown session", session_id)
        body = await _json_body(request)
        text = body.get("text", "")
        if not isinstance(text, str) or not text.strip():
            return _error(422, "empty text", "body must contain non-empty 'text'")
        with live.lock:  # serialize messages within one session
            try:
                trace = step_turn(cfg, live.session, text)
            except BackendError as e:
                return _error(502, "backend failure", str(e))
        persist({"event": "message", "session_id": session_id, "text": text,
                 "response": trace.final_response})
        return {"response": trace.final_response, "trace": _trace_to_dict(trace)}

    @app.post("/sessions/{session_id}/rating")
    async def post_rating(session_id: str, request: Request):
        live = sessions.get(session_id)
        if live is None:
            return _error(404, "unknown session", session_id)
        body = await _json_body(request)
        with live.lock:
            if live.rating is not None:
                return _error(409, "already rated", "a session is rated at most once")
            if not live.session.traces:
                return _error(422, "no turns", "rate after at least one exchange")
            try:
                claimed = bool(body["success_claimed"])
                understanding = int(body["understanding"])
                appropriateness = int(body["appropriateness"])
            except (KeyError, TypeError, ValueError):
                return _error(422, "bad rating", "need success_claimed, understanding, appropriateness")
            if understanding not in range(1, 6) or appropriateness not in range(1, 6):
                return _error(422, "out of range", "scores must be integers in 1..5")
            grounded = claimed and _grounding_check(cfg, live)
            live.rating = HumanEvalRating(
                session_id=session_id,
                success_claimed=claimed,
                understanding=understanding,
                appropriateness=appropriateness,
                submitted_at=time.time(),
                success_w_g=grounded,
            )
        persist({"event": "rating", **asdict(live.rating)})
        return {"accepted": True, "success_w_g": grounded}

    @app.get("/reports/human-eval")
    def human_eval_report():
        rated = [s for s in sessions.values() if s.rating is not None]
        if not rated:
            return _error(409, "no rated sessions", "submit at least one rating first")
        n = len(rated)
        claimed = [s for s in rated if s.rating.success_claimed]
        grounded = [s for s in rated if s.rating.success_w_g]
        mean_turns = (
            sum(len(s.session.traces) for s in claimed) / len(claimed) if claimed else 0.0
        )
        return {
            "n_sessions": n,
            "success_wo_g_pct": 100.0 * len(claimed) / n,
            "success_w_g_pct": 100.0 * len(grounded) / n,
            "mean_understanding": sum(s.rating.understanding for s in rated) / n,
            "mean_appropriateness": sum(s.rating.appropriateness for s in rated) / n,
            "mean_turns_successful": mean_turns,
        }

    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        return {}
    return body if isinstance(body, dict) else {}


def _grounding_check(cfg: EngineConfig, live: LiveSession) -> bool:
    """Every goal-requested slot value mentioned must match the offered entity's record."""
    goal = live.goal
    if goal is None or not goal.requested:
        return True
    db = cfg.databases.get(goal.domain)
    if db is None:
        return False
    goal_belief = _goal_belief(goal)
    offered = [
        t.db_state.selected
        for t in live.session.traces
        if t.db_state is not None and t.db_state.selected is not None
    ]
    candidates = [e for e in offered if entity_matches(e, goal_belief)] or offered
    responses = " ".join(
        normalize_value(t.final_response) for t in live.session.traces
    )
    for entity in candidates:
        if all(
            entity.normalized.get(slot) is not None
            and entity.normalized[slot] in responses
            for slot in goal.requested
        ):
            return True
    return False
