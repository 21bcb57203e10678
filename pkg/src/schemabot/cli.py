"""Command-line entry points: interactive chat, corpus evaluation, service.

Exit codes: 0 success, 2 configuration error, 3 backend failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .database import Database, load_database, render_db_state
from .dst import serialize_belief_sql
from .engine import AblationFlags, EngineConfig, new_session, step_turn
from .errors import BackendError, SchemabotError
from .evaluate import GoldReplayBackend, load_corpus, run_corpus_eval
from .fixtures import DEFAULT_DST_EXAMPLE, DEFAULT_POLICY_EXAMPLE
from .llm import BackendConfig, make_backend
from .schema import SchemaWarning, TaskSchema, parse_schema


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schemabot")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--schema", action="append", default=[], help="schema JSON path (repeatable)")
        p.add_argument("--db", action="append", default=[], help="database JSON path (repeatable)")
        p.add_argument("--backend", choices=["scripted", "http", "gold-replay"], default="scripted")
        p.add_argument("--script", default="", help="script table JSON for the scripted backend")
        p.add_argument("--model", default="", help="model name for the http backend")
        p.add_argument("--base-url", default="", help="base URL for the http backend")
        p.add_argument("--temperature", type=float, default=0.5)
        p.add_argument("--no-policy", action="store_true", help="drop the policy skeleton section")
        p.add_argument("--no-db", action="store_true", help="drop database grounding")
        p.add_argument("--no-belief", action="store_true", help="drop the state-tracking stage")
        p.add_argument("--seed", type=int, default=None)

    chat = sub.add_parser("chat", help="interactive terminal chat")
    add_common(chat)
    chat.add_argument("--debug", action="store_true", help="print belief/DB/action after each reply")

    ev = sub.add_parser("eval", help="corpus evaluation (Inform/Success/BLEU/Combined)")
    add_common(ev)
    ev.add_argument("--corpus", required=True, help="JSON-lines corpus path")
    ev.add_argument("--out", default="", help="report JSON path (CSV + PNG written alongside)")
    ev.add_argument("--jobs", type=int, default=1, help="parallel dialog replays")

    serve = sub.add_parser("serve", help="run the HTTP service")
    add_common(serve)
    serve.add_argument("--corpus", default="", help="goal pool for the human-eval protocol")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--persist", default="", help="append-only JSON-lines event log")

    return parser


def _load_config(args: argparse.Namespace) -> EngineConfig:
    if not args.schema:
        raise SchemabotError("at least one --schema is required")
    schemas: list[TaskSchema] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SchemaWarning)
        for path in args.schema:
            schemas.append(parse_schema(Path(path).read_text(encoding="utf-8")))
    databases: dict[str, Database] = {}
    for path in args.db:
        db = load_database(Path(path).read_text(encoding="utf-8"))
        databases[db.domain] = db

    if args.backend == "http":
        backend_cfg = BackendConfig(kind="http", base_url=args.base_url, model_name=args.model)
        backend = make_backend(backend_cfg)
    elif args.backend == "scripted":
        if not args.script:
            raise SchemabotError("--backend scripted requires --script")
        backend = make_backend(BackendConfig(kind="scripted", script_path=args.script))
    else:  # gold-replay resolves per dialog inside run_corpus_eval
        backend = _NullBackend()

    return EngineConfig(
        schemas=tuple(schemas),
        databases=databases,
        dst_example=DEFAULT_DST_EXAMPLE,
        policy_example=DEFAULT_POLICY_EXAMPLE,
        backend=backend,
        ablation=AblationFlags(
            use_policy=not args.no_policy,
            use_db=not args.no_db,
            use_belief=not args.no_belief,
        ),
        temperature=args.temperature,
    )


class _NullBackend:
    def complete(self, request):
        raise BackendError("gold-replay backend is only available under 'eval'")


def cmd_chat(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        session = new_session(cfg)
    except (SchemabotError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    print("schemabot ready. type /quit to exit.")
    for line in sys.stdin:
        text = line.strip()
        if not text:
            continue
        if text == "/quit":
            return 0
        try:
            trace = step_turn(cfg, session, text)
        except BackendError as e:
            print(f"backend failure: {e}", file=sys.stderr)
            return 3
        print(trace.final_response)
        if args.debug:
            belief = serialize_belief_sql(trace.belief) if trace.belief else "(none)"
            db_line = render_db_state(trace.db_state) if trace.db_state else "(none)"
            print(f"  belief: {belief}")
            print(f"  db: {db_line}")
            print(f"  action: {trace.action.render()}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        corpus = load_corpus(
            Path(args.corpus).read_text(encoding="utf-8"), list(cfg.schemas)
        )
    except (SchemabotError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    factory = GoldReplayBackend if args.backend == "gold-replay" else None
    try:
        report = run_corpus_eval(cfg, corpus, backend_factory=factory, jobs=args.jobs)
    except BackendError as e:
        print(f"backend failure: {e}", file=sys.stderr)
        return 3
    print(f"{'Inform':>10} {'Success':>10} {'BLEU':>10} {'Combined':>10}")
    print(
        f"{report.inform_pct:>10.2f} {report.success_pct:>10.2f} "
        f"{report.bleu_pct:>10.2f} {report.combined_pct:>10.2f}"
    )
    if args.out:
        from .report import write_report_files

        paths = write_report_files(report, args.out)
        print(f"report written to {paths['json']} (+ {paths['csv'].name}, {paths['figure'].name})")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        goals = None
        if args.corpus:
            corpus = load_corpus(
                Path(args.corpus).read_text(encoding="utf-8"), list(cfg.schemas)
            )
            goals = {d.id: d.goal for d in corpus}
    except (SchemabotError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    import uvicorn

    from .service import create_app

    app = create_app(cfg, goals=goals, seed=args.seed, persist_path=args.persist or None)
    try:
        uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="info")
    except (OSError, SystemExit) as e:
        print(f"bind failure: {e}", file=sys.stderr)
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"chat": cmd_chat, "eval": cmd_eval, "serve": cmd_serve}
    return handlers[args.subcommand](args)


if __name__ == "__main__":
    sys.exit(main())
