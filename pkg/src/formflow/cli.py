"""Command-line entry points: chat REPL, service, scenario runs, debugging tools."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .backends import RuleOracleBackend, ScriptedStubBackend, demo_script, load_script
from .catalog import adapter_for
from .evaluation import (
    compare_modes,
    generate_corpus,
    load_scenario_file,
    run_scenario,
)
from .orchestrator import Orchestrator
from .prompts import DEFAULT_REGISTRY, render_prompt
from .session import Domain, Mode, new_session
from .tags import extract_decision

_DOMAIN_ALIASES = {
    "customer": Domain.CUSTOMER_MGMT,
    "customers": Domain.CUSTOMER_MGMT,
    "CustomerMgmt": Domain.CUSTOMER_MGMT,
    "hotel": Domain.HOTEL_BOOKING,
    "hotels": Domain.HOTEL_BOOKING,
    "HotelBooking": Domain.HOTEL_BOOKING,
}


def _parse_domain(value: str) -> Domain:
    try:
        return _DOMAIN_ALIASES[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"unknown domain {value!r}; use customer or hotel"
        ) from None


def _build_backend(kind: str, domain: Domain, script_path: str | None):
    adapter = adapter_for(domain)
    if kind == "stub":
        script = load_script(script_path) if script_path else demo_script()
        return adapter, ScriptedStubBackend(script)
    if kind == "oracle":
        task = DEFAULT_REGISTRY.get(adapter.confirmation_task_name)
        return adapter, RuleOracleBackend(task, adapter.display_names())
    from .backends import HttpBackend

    return adapter, HttpBackend()


def cmd_chat(args: argparse.Namespace) -> int:
    adapter, backend = _build_backend(args.backend, args.domain, args.script)
    orchestrator = Orchestrator(adapter, backend)
    session = new_session(args.domain, mode=Mode(args.mode))
    print(f"formflow chat — domain={args.domain.value} mode={args.mode} backend={args.backend}")
    print("Ctrl-D to exit.")
    while True:
        try:
            utterance = input("you> ").strip()
        except EOFError:
            print()
            return 0
        if not utterance:
            continue
        result = orchestrator.handle_turn(session, utterance)
        print(f"bot> {result.reply_text}")
        if args.show_cot and result.decision and result.decision.chain_of_thought:
            print(f"cot> {result.decision.chain_of_thought}")


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, cors_origin=args.cors_origin)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_run_scenario(args: argparse.Namespace) -> int:
    scenario = load_scenario_file(args.file)
    report, session = run_scenario(scenario, Mode(args.mode))
    print(json.dumps(report.to_dict(), indent=2))
    if args.transcript:
        for event in session.transcript:
            print(f"[{event.seq}] {event.kind.value}: {json.dumps(event.payload)}")
    return 0


def _load_corpus(source: str):
    if source.startswith("generate:"):
        params = source[len("generate:"):]
        try:
            n_str, seed_str = params.split(",", 1)
            return generate_corpus(int(n_str), int(seed_str))
        except ValueError as exc:
            raise SystemExit(f"bad --corpus generate argument {source!r}: {exc}")
    if not os.path.isdir(source):
        raise FileNotFoundError(f"corpus directory {source!r} does not exist")
    corpus = []
    for name in sorted(os.listdir(source)):
        if name.endswith(".json"):
            corpus.append(load_scenario_file(os.path.join(source, name)))
    if not corpus:
        raise FileNotFoundError(f"no scenario files in {source!r}")
    return corpus


def cmd_compare(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    report = compare_modes(corpus, out_path=args.out)
    header = f"{'mode':<10}{'misaligned':>12}{'clarifying':>12}{'corrective':>12}{'turns':>8}"
    print(header)
    print("-" * len(header))
    for mode_name, totals in (("tagged", report.tagged), ("baseline", report.baseline)):
        print(
            f"{mode_name:<10}{totals.misaligned_turns:>12}{totals.clarifying_turns:>12}"
            f"{totals.corrective_user_turns:>12}{totals.total_turns:>8}"
        )
    if report.reduction_ratio is not None:
        print(f"\nmisalignment reduction: {report.reduction_ratio:.4f}")
    else:
        print("\nmisalignment reduction: undefined (baseline has no misalignments)")
    if report.incomplete:
        print(f"WARNING: comparison incomplete: {report.error}", file=sys.stderr)
    print(f"report written to {args.out}")
    return 1 if report.incomplete else 0


def cmd_extract(args: argparse.Namespace) -> int:
    raw = sys.stdin.buffer.read()
    if args.decision_tag:
        from .prompts import PromptTask

        task = PromptTask(
            task_name="adhoc",
            decision_tag=args.decision_tag,
            cot_tag=args.cot_tag,
            template="{user_question}{current_entity_name}{history_json}",
        )
    else:
        task = DEFAULT_REGISTRY.get(args.task)
    result = extract_decision(raw, task)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    task = DEFAULT_REGISTRY.get(args.task)
    print(render_prompt(task, args.question, args.entity, args.history or []))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formflow",
        description="Conversational form-state engine with explicit commit/reset decisions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    chat = sub.add_parser("chat", help="interactive REPL against a local session")
    chat.add_argument("--domain", type=_parse_domain, default=Domain.CUSTOMER_MGMT)
    chat.add_argument("--mode", choices=[m.value for m in Mode], default="tagged")
    chat.add_argument("--backend", choices=["stub", "oracle", "http"], default="oracle")
    chat.add_argument("--script", help="script file for the stub backend")
    chat.add_argument("--show-cot", action="store_true", help="print stored chain of thought")
    chat.set_defaults(func=cmd_chat)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--port", type=int, default=int(os.environ.get("FORMFLOW_PORT", "8099"))
    )
    serve.add_argument("--data-dir", default=None, help="session snapshot directory")
    serve.add_argument("--cors-origin", default=None, help="allowed browser origin")
    serve.set_defaults(func=cmd_serve)

    run = sub.add_parser("run-scenario", help="replay one scenario file")
    run.add_argument("file")
    run.add_argument("--mode", choices=[m.value for m in Mode], default="tagged")
    run.add_argument("--transcript", action="store_true", help="dump transcript events")
    run.set_defaults(func=cmd_run_scenario)

    compare = sub.add_parser("compare", help="A/B comparison over a scenario corpus")
    compare.add_argument(
        "--corpus",
        required=True,
        help="scenario directory, or generate:N,SEED for a synthetic corpus",
    )
    compare.add_argument("--out", default="report.json")
    compare.set_defaults(func=cmd_compare)

    extract = sub.add_parser("extract", help="parse decision tags from stdin")
    extract.add_argument("--task", default="IsCustomerConfirmed")
    extract.add_argument("--decision-tag", help="override: explicit decision tag name")
    extract.add_argument("--cot-tag", default="chainOfThought")
    extract.set_defaults(func=cmd_extract)

    render = sub.add_parser("render", help="render a task prompt for inspection")
    render.add_argument("--task", required=True)
    render.add_argument("--question", required=True)
    render.add_argument("--entity", default="none")
    render.add_argument("--history", action="append", default=[])
    render.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary: message, not traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
