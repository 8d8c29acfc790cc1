"""Command line entry points: chat REPL, scenario runner, datagen, server."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .contract import ChartSpec, Modality, ResponsePayload, SpeakerRole
from .dataquery import generate_dataset, oracle_evaluate, write_dataset
from .dataquery.queries import ast_from_doc
from .gateway import SessionManager, create_app
from .orchestrator import ConfigError, OrchestratorConfig
from .process import LogicalClock
from .resources import load_json, resource_path
from .runtime import DEFAULT_SEED, DEFAULT_SIZE, build_stack
from .scenarios import ScenarioError, run_scenarios

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_CONFIG = 2


def _render_table(payload) -> str:
    names = payload.column_names
    rows = [[str(c) for c in row] for row in payload.rows]
    widths = [len(n) for n in names]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    header = "  ".join(n.ljust(widths[i]) for i, n in enumerate(names))
    ruler = "  ".join("-" * w for w in widths)
    body = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row))
        for row in rows
    ]
    return "\n".join([header, ruler] + body)


def _render_chart(chart: ChartSpec) -> str:
    pairs = ", ".join(f"{c}={v}" for c, v in zip(chart.categories, chart.values))
    return f"[{chart.kind} chart: {chart.title}; {pairs}]"


def _render_payload(payload: ResponsePayload, out_dir: str) -> List[str]:
    if payload.modality is Modality.TEXT:
        return [payload.text or ""]
    if payload.modality is Modality.TABLE:
        return [_render_table(payload.table)]
    if payload.modality is Modality.CHART:
        return [_render_chart(payload.chart)]
    if payload.modality is Modality.FILE:
        att = payload.attachment
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, att.filename)
        with open(path, "wb") as fh:
            fh.write(att.data)
        return [f"[attachment saved to {path}]"]
    lines: List[str] = []
    for part in payload.parts or ():
        lines.extend(_render_payload(part, out_dir))
    return lines


def repl(config: OrchestratorConfig, seed: int, size: int, out_dir: str,
         stdin=None, stdout=None) -> int:
    """Interactive chat against an in-process stack."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stack = build_stack(seed=seed, size=size, config=config, clock=LogicalClock())
    manager = SessionManager(stack)
    role = SpeakerRole.LOAN_OFFICER
    session_id = manager.create_session(role)

    def say(text: str) -> None:
        print(text, file=stdout)

    say(f"procbot ready (role {role.value}; /role, /context, /trace, /quit)")
    while True:
        try:
            print("> ", end="", file=stdout, flush=True)
            line = stdin.readline()
        except KeyboardInterrupt:
            break
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line.startswith("/"):
            parts = line.split()
            command = parts[0]
            if command == "/quit":
                break
            if command == "/role":
                if len(parts) != 2:
                    say("usage: /role <Employee|Manager|Director|LoanOfficer>")
                    continue
                try:
                    role = SpeakerRole.parse(parts[1])
                except Exception as exc:
                    say(str(exc))
                    continue
                session_id = manager.create_session(role)
                say(f"switched to role {role.value} (new session)")
                continue
            if command == "/context":
                ctx = manager.context_of(session_id)
                say(json.dumps(
                    {k: str(v) for k, v in sorted(ctx.shared.items())}, indent=2))
                continue
            if command == "/trace":
                traces = manager.traces_of(session_id)
                if not traces:
                    say("no turns yet")
                    continue
                last = traces[-1]
                say(f"utterance: {last.utterance}")
                for aid, conf, sticky, score_value, timed_out in sorted(
                        last.previews, key=lambda p: -p[3]):
                    flags = " timeout" if timed_out else ""
                    say(f"  {aid:18s} c={conf:0.2f} k={sticky} s={score_value:0.2f}{flags}")
                say(f"selected: {', '.join(last.selected) or '(fallback)'}")
                continue
            say("commands: /role <role>, /context, /trace, /quit")
            continue
        view = manager.post_message(session_id, line)
        for agent_id, payload in view.responses:
            for rendered in _render_payload(payload, out_dir):
                say(f"{rendered}  [{agent_id}]")
        for seq, notification in manager.poll_notifications(session_id):
            say(f"(notification {seq}) {notification.rendered_text}")
    say("bye")
    return EXIT_OK


def datagen(seed: int, size: int, out_dir: str) -> int:
    """Write the synthetic dataset plus an oracle-computed answer file."""
    bundle = generate_dataset(seed, size)
    written = write_dataset(bundle, out_dir)
    corpus = load_json("corpus/queries.json")
    answers = []
    for entry in corpus["queries"]:
        table = bundle.loans if entry["table"] == "loans" else bundle.travel
        result = oracle_evaluate(ast_from_doc(entry["ast"]), table)
        answers.append({
            "utterance": entry["utterance"],
            "totalCount": result.total_count,
            "rows": [list(r) for r in result.rows],
        })
    answers_path = os.path.join(out_dir, "answers.json")
    with open(answers_path, "w", encoding="utf-8") as fh:
        json.dump({"seed": seed, "size": size, "answers": answers}, fh, indent=2)
        fh.write("\n")
    written.append(answers_path)
    for path in written:
        print(path)
    return EXIT_OK


def serve(config: OrchestratorConfig, seed: int, size: int, host: str, port: int,
          journal: Optional[str], static_dir: Optional[str],
          model_dir: Optional[str], documents_dir: Optional[str]) -> int:
    import uvicorn

    stack = build_stack(seed=seed, size=size, config=config, journal_path=journal,
                        model_dir=model_dir, documents_dir=documents_dir)
    stack.matcher.start_background(interval_s=0.5)
    app = create_app(stack, static_dir=static_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        stack.matcher.stop_background()
    return EXIT_OK


def default_corpus_dir() -> str:
    return str(resource_path("corpus/scenarios"))


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="procbot",
        description="Conversational assistant for loan and travel processes.")
    parser.add_argument("--config", help="orchestrator config file (JSON)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--size", type=int, default=DEFAULT_SIZE)
    sub = parser.add_subparsers(dest="command", required=True)

    p_repl = sub.add_parser("repl", help="interactive chat")
    p_repl.add_argument("--out", default="exports", help="directory for saved files")

    p_run = sub.add_parser("run", help="run scripted scenarios")
    p_run.add_argument("--corpus", default=None,
                       help="scenario file, glob, or directory")

    p_gen = sub.add_parser("datagen", help="write the synthetic dataset")
    p_gen.add_argument("--out", default="dataset", help="output directory")

    p_serve = sub.add_parser("serve", help="start the HTTP gateway")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--journal", default=None,
                         help="append-only process journal file")
    p_serve.add_argument("--static", default=None,
                         help="directory of web UI assets to serve")
    p_serve.add_argument("--models", default=None,
                         help="directory of per-agent NLU model files")
    p_serve.add_argument("--documents", default=None,
                         help="directory of documents for the content analyzer")

    args = parser.parse_args(argv)

    try:
        config = (OrchestratorConfig.from_file(args.config)
                  if args.config else OrchestratorConfig())
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "repl":
        return repl(config, args.seed, args.size, args.out)
    if args.command == "datagen":
        if args.size < 0:
            print("configuration error: size must be >= 0", file=sys.stderr)
            return EXIT_CONFIG
        return datagen(args.seed, args.size, args.out)
    if args.command == "serve":
        return serve(config, args.seed, args.size, args.host, args.port,
                     args.journal, args.static, args.models, args.documents)
    if args.command == "run":
        corpus = args.corpus or default_corpus_dir()
        try:
            passed, lines = run_scenarios(corpus)
        except ScenarioError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for line in lines:
            print(line)
        return EXIT_OK if passed else EXIT_FAILURES
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
