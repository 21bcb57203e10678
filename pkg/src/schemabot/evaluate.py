"""Corpus-level evaluation: Inform, Success, corpus BLEU, and the combined score.

A dialog counts as informed when the bot offered an entity consistent with
every goal constraint; successful when, additionally, every requested slot
value shows up in some system response. BLEU is corpus-level BLEU-4 with
pooled modified precisions and no smoothing. Combined is
(Inform + Success) * 0.5 + BLEU.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .database import Database, entity_matches
from .dst import BeliefState, serialize_belief_sql
from .engine import EngineConfig, Session, TurnTrace, new_session, step_turn
from .errors import EmptyCorpus, GoalInvalid, SchemaSyntaxError
from .llm import CompletionRequest
from .schema import TaskSchema
from .text import normalize_value


@dataclass(frozen=True)
class DialogGoal:
    domain: str
    informable: tuple[tuple[str, str], ...] = ()
    requested: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorpusTurn:
    user_text: str
    gold_response: str
    gold_belief: str | None = None


@dataclass(frozen=True)
class CorpusDialog:
    id: str
    goal: DialogGoal
    turns: tuple[CorpusTurn, ...]


@dataclass(frozen=True)
class EvalReport:
    inform_pct: float
    success_pct: float
    bleu_pct: float
    combined_pct: float
    n_dialogs: int
    per_dialog: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "inform_pct": self.inform_pct,
            "success_pct": self.success_pct,
            "bleu_pct": self.bleu_pct,
            "combined_pct": self.combined_pct,
            "n_dialogs": self.n_dialogs,
            "per_dialog": list(self.per_dialog),
        }


# ---------------------------------------------------------------------------
# corpus loading


def load_corpus(text: str, schemas: list[TaskSchema] | None = None) -> list[CorpusDialog]:
    """Load a JSON-lines corpus, validating goals against the given schemas."""
    dialogs: list[CorpusDialog] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaSyntaxError(e.msg, lineno, e.colno) from e
        try:
            goal_raw = raw["goal"]
            goal = DialogGoal(
                domain=normalize_value(str(goal_raw["domain"])),
                informable=tuple(
                    (normalize_value(str(s)), normalize_value(str(v)))
                    for s, v in goal_raw.get("informable", [])
                ),
                requested=tuple(
                    normalize_value(str(s)) for s in goal_raw.get("requested", [])
                ),
            )
            turns = tuple(
                CorpusTurn(
                    user_text=str(t["user"]),
                    gold_response=str(t["gold_response"]),
                    gold_belief=t.get("gold_belief"),
                )
                for t in raw["turns"]
            )
            dialog = CorpusDialog(id=str(raw["id"]), goal=goal, turns=turns)
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaSyntaxError(f"malformed dialog: {e}", lineno, 1) from e
        if not dialog.turns:
            raise SchemaSyntaxError("dialog has no turns", lineno, 1)
        if any(not t.gold_response for t in dialog.turns):
            raise SchemaSyntaxError("empty gold_response", lineno, 1)
        if schemas:
            _validate_goal(dialog, schemas)
        dialogs.append(dialog)
    return dialogs


def _validate_goal(dialog: CorpusDialog, schemas: list[TaskSchema]) -> None:
    schema = next((s for s in schemas if s.domain == dialog.goal.domain), None)
    if schema is None:
        raise GoalInvalid(f"dialog {dialog.id}: unknown goal domain {dialog.goal.domain!r}")
    slot_names = {s.name for s in schema.ontology.slots}
    for slot, _ in dialog.goal.informable:
        if slot not in slot_names:
            raise GoalInvalid(f"dialog {dialog.id}: informable slot {slot!r} not in schema")
    requestable = set(schema.ontology.requestable_slots)
    for slot in dialog.goal.requested:
        if slot not in requestable:
            raise GoalInvalid(f"dialog {dialog.id}: requested slot {slot!r} not requestable")


# ---------------------------------------------------------------------------
# inform / success


def _goal_belief(goal: DialogGoal) -> BeliefState:
    return BeliefState(domain=goal.domain, constraints=goal.informable)


def _offered_entities(traces: list[TurnTrace], db: Database) -> list:
    """Entities the bot offered: DB selections plus names mentioned verbatim."""
    offered = []
    seen: set[str] = set()
    for trace in traces:
        if trace.db_state is not None and trace.db_state.selected is not None:
            entity = trace.db_state.selected
            if entity.normalized["name"] not in seen:
                seen.add(entity.normalized["name"])
                offered.append(entity)
    responses = " ".join(normalize_value(t.final_response) for t in traces)
    for entity in db.entities:
        key = entity.normalized["name"]
        if key not in seen and key in responses:
            seen.add(key)
            offered.append(entity)
    return offered


def eval_inform(dialog: CorpusDialog, traces: list[TurnTrace], db: Database) -> bool:
    """Did the bot offer an entity satisfying every goal constraint?"""
    goal_belief = _goal_belief(dialog.goal)
    return any(entity_matches(e, goal_belief) for e in _offered_entities(traces, db))


def eval_success(dialog: CorpusDialog, traces: list[TurnTrace], db: Database) -> bool:
    """Informed, and every requested slot's value appears in some response."""
    goal_belief = _goal_belief(dialog.goal)
    candidates = [e for e in _offered_entities(traces, db) if entity_matches(e, goal_belief)]
    if not candidates:
        return False
    responses = " ".join(normalize_value(t.final_response) for t in traces)
    for entity in candidates:
        ok = True
        for slot in dialog.goal.requested:
            value = entity.normalized.get(slot)
            if value is None or value not in responses:
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# BLEU

_PUNCT = re.compile(r"([^\w\s])")


def bleu_tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation into separate tokens, whitespace-split."""
    return _PUNCT.sub(r" \1 ", text.lower()).split()


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def corpus_bleu(pairs: list[tuple[str, str]]) -> float:
    """Corpus BLEU-4 in [0, 100]: pooled clipped precisions, standard brevity penalty.

    Any pooled precision of zero yields 0 (no smoothing).
    """
    if not pairs:
        raise EmptyCorpus("corpus_bleu needs at least one (hypothesis, reference) pair")
    clipped = [0, 0, 0, 0]
    totals = [0, 0, 0, 0]
    hyp_len = 0
    ref_len = 0
    for hyp, ref in pairs:
        h = bleu_tokenize(hyp)
        r = bleu_tokenize(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, 5):
            h_counts = Counter(_ngrams(h, n))
            r_counts = Counter(_ngrams(r, n))
            for gram, count in h_counts.items():
                clipped[n - 1] += min(count, r_counts.get(gram, 0))
                totals[n - 1] += count
    if any(t == 0 for t in totals) or any(c == 0 for c in clipped):
        return 0.0
    log_precision = sum(0.25 * math.log(clipped[i] / totals[i]) for i in range(4))
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision) * 100.0


def combined_score(inform: float, success: float, bleu: float) -> float:
    return (inform + success) * 0.5 + bleu


# ---------------------------------------------------------------------------
# corpus replay


class GoldReplayBackend:
    """Oracle backend: answers every prompt with the dialog's gold annotation.

    DST prompts (recognized by the belief-instruction section) get the gold
    belief line for the current turn; policy prompts get an action/response
    pair wrapping the gold delexicalized response. The turn index is the
    number of user lines in the prompt's test-input section.
    """

    def __init__(self, dialog: CorpusDialog):
        self.dialog = dialog

    def complete(self, request: CompletionRequest) -> str:
        from .dst import SECTION_BELIEF, SECTION_INPUT

        prompt = request.prompt
        test_input = prompt.split(SECTION_INPUT, 1)[-1]
        turn_index = max(0, sum(1 for ln in test_input.splitlines() if ln.startswith("User:")) - 1)
        turn_index = min(turn_index, len(self.dialog.turns) - 1)
        if SECTION_BELIEF in prompt:
            return self._gold_belief(turn_index)
        gold = self.dialog.turns[turn_index].gold_response
        return f"System Action: inform()\nResponse: {gold}"

    def _gold_belief(self, turn_index: int) -> str:
        for i in range(turn_index, -1, -1):
            line = self.dialog.turns[i].gold_belief
            if line:
                return line
        return serialize_belief_sql(BeliefState(domain=self.dialog.goal.domain))


def run_corpus_eval(
    cfg: EngineConfig,
    corpus: list[CorpusDialog],
    backend_factory=None,
    jobs: int = 1,
) -> EvalReport:
    """Replay every dialog through the engine and score the corpus.

    ``backend_factory``, when given, builds a per-dialog backend (used for the
    gold-replay oracle); otherwise the configured backend serves all dialogs.
    """
    if not corpus:
        raise EmptyCorpus("corpus is empty")
    cfg.validate()

    def replay(dialog: CorpusDialog) -> tuple[CorpusDialog, list[TurnTrace]]:
        run_cfg = cfg
        if backend_factory is not None:
            run_cfg = replace(cfg, backend=backend_factory(dialog))
        session: Session = new_session(run_cfg)
        for turn in dialog.turns:
            step_turn(run_cfg, session, turn.user_text)
        return dialog, session.traces

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(replay, corpus))
    else:
        results = [replay(d) for d in corpus]

    per_dialog = []
    pairs: list[tuple[str, str]] = []
    informed_count = 0
    success_count = 0
    for dialog, traces in results:
        db = cfg.databases.get(dialog.goal.domain)
        if db is None:
            raise GoalInvalid(f"dialog {dialog.id}: no database for {dialog.goal.domain!r}")
        informed = eval_inform(dialog, traces, db)
        successful = informed and eval_success(dialog, traces, db)
        informed_count += informed
        success_count += successful
        per_dialog.append({"id": dialog.id, "informed": informed, "successful": successful})
        for turn, trace in zip(dialog.turns, traces):
            pairs.append((trace.delex_response, turn.gold_response))

    n = len(corpus)
    inform_pct = 100.0 * informed_count / n
    success_pct = 100.0 * success_count / n
    bleu_pct = corpus_bleu(pairs)
    return EvalReport(
        inform_pct=inform_pct,
        success_pct=success_pct,
        bleu_pct=bleu_pct,
        combined_pct=combined_score(inform_pct, success_pct, bleu_pct),
        n_dialogs=n,
        per_dialog=tuple(per_dialog),
    )
