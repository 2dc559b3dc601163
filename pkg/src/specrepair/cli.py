"""Command-line entry point: ``specrepair <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .analysis import TOOL_NAMES, build_index, build_registry
from .bench import (
    RunConfig,
    build_report,
    config_from_dict,
    evaluate,
    find_bug,
    ingest,
    load_annotations,
    load_config,
    load_run_store,
    make_embedder,
    overlap,
    override,
    plausible_ids,
    read_sessions,
    render_report,
    replay_script_for,
    run_one,
    scenario_labels,
    write_report,
)
from .errors import RepairError
from .llm import HTTPBackend, ReplayBackend, open_session
from .model import dump_json, load_corpus
from .orchestrator import SessionResult
from .transformer import build_transform_prompt, read_function_source, transform

EXIT_CODES = {SessionResult.PLAUSIBLE: 0, SessionResult.EXHAUSTED: 1, SessionResult.ABORTED: 3}
USAGE_ERROR = 2


def demo_dir() -> Path:
    return Path(str(resources.files("specrepair") / "demo"))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.demo:
        data = json.loads((demo_dir() / "config.json").read_text(encoding="utf-8"))
        data["output_dir"] = str(Path(args.output or "demo-out").resolve())
        config = config_from_dict(data, demo_dir())
    elif args.config:
        config = load_config(args.config)
    else:
        raise RepairError("give --config FILE or --demo")
    return override(
        config,
        strategy=getattr(args, "strategy", None),
        max_attempts=getattr(args, "max_attempts", None),
        max_rounds=getattr(args, "max_rounds", None),
        replay=Path(args.replay) if getattr(args, "replay", None) else None,
        adapter_kind=getattr(args, "adapter", None),
        output_dir=Path(args.output) if getattr(args, "output", None) and not args.demo else None,
        example_store=Path(args.example_store) if getattr(args, "example_store", None) else None,
        no_retrieval=True if getattr(args, "no_retrieval", False) else None,
        parallelism=getattr(args, "parallel", None),
        annotations=Path(args.annotations) if getattr(args, "annotations", None) else None,
    )


def cmd_repair(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    bug = find_bug(config, args.bug)
    session = run_one(config, bug, load_run_store(config))
    led = session.to_dict()["ledger"]
    print(
        f"{bug.bug_id}: {session.result.value} after {len(session.attempts)} attempt(s), "
        f"{led['generation_calls']} generation call(s), ${led['cost']:.4f}"
    )
    print(f"session written to {config.output_dir / 'sessions' / (bug.bug_id + '.json')}")
    return EXIT_CODES[session.result]


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    report = evaluate(config)
    print(render_report(report), end="")
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    bug = find_bug(config, args.bug)
    if config.replay is not None:
        backend = ReplayBackend.from_file(replay_script_for(config.replay, bug.bug_id, config.strategy))
    else:
        backend = HTTPBackend()
    prompt = build_transform_prompt(config.templates_dir)
    session = open_session(config.model, prompt.system_prompt(), backend, f"{bug.bug_id}/transform", "transform")
    sources = [read_function_source(bug.workspace_root, l) for l in bug.target_functions]
    info = transform(bug, sources, session, prompt)
    print(dump_json(info.to_dict()), end="")
    return 0


def _tool_args(pairs: Sequence[str], raw_json: str | None) -> dict[str, Any]:
    if raw_json:
        return json.loads(raw_json)
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise RepairError(f"tool arguments are key=value pairs, got {pair!r}")
        out[key] = value
    return out


def cmd_tool(args: argparse.Namespace) -> int:
    if args.tool_command == "list":
        for name in TOOL_NAMES:
            print(name)
        return 0
    if args.name not in TOOL_NAMES:
        print(f"error: unknown tool {args.name!r}; choose from: {', '.join(TOOL_NAMES)}", file=sys.stderr)
        return USAGE_ERROR
    registry = build_registry(build_index(args.workspace))
    result = registry.dispatch(args.name, _tool_args(args.pairs, args.json))
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    settings: dict[str, Any] = {"kind": args.embedder, "dimension": args.dimension}
    if args.model:
        settings["model"] = args.model
    store = ingest(args.triples, make_embedder(settings), args.out, args.threshold)
    print(f"wrote {len(store)} example(s) of dimension {store.dimension} to {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    runs = {Path(d).resolve().name: read_sessions(d) for d in args.results}
    sessions = next(iter(runs.values()))
    scenarios = scenario_labels(load_corpus(args.corpus)) if args.corpus else None
    annotations = load_annotations(args.annotations) if args.annotations else None
    report = build_report(sessions, scenarios, annotations)
    if len(runs) > 1:
        report["overlap"] = overlap({name: plausible_ids(s) for name, s in runs.items()})
    write_report(Path(args.out or args.results[0]), report)
    print(render_report(report), end="")
    return 0


def _run_options(p: argparse.ArgumentParser, bug: bool) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="run configuration (JSON)")
    src.add_argument("--demo", action="store_true", help="use the bundled three-bug demo corpus")
    if bug:
        p.add_argument("--bug", required=True, help="bug id from the corpus")
    p.add_argument("--strategy", choices=["none", "minir", "maxr"])
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--replay", help="replay script file or directory of <bug>[.<strategy>].json")
    p.add_argument("--adapter", choices=["scripted", "command"])
    p.add_argument("--example-store", help="example database (JSON Lines)")
    p.add_argument("--no-retrieval", action="store_true", help="allow reasoning without an example database")
    p.add_argument("--output", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specrepair", description="Specification-centred program repair.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repair", help="repair one bug")
    _run_options(p, bug=True)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("evaluate", help="repair every bug in the corpus and write a report")
    _run_options(p, bug=False)
    p.add_argument("--parallel", type=int, help="worker threads")
    p.add_argument("--annotations", help="correctness annotations (JSON)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("transform", help="print the flawed specification of one bug")
    _run_options(p, bug=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("tool", help="run one code-analysis tool")
    tool_sub = p.add_subparsers(dest="tool_command", required=True)
    tool_sub.add_parser("list", help="list tool names")
    run = tool_sub.add_parser("run", help="run a tool against a source tree")
    run.add_argument("name")
    run.add_argument("pairs", nargs="*", help="arguments as key=value")
    run.add_argument("--workspace", required=True)
    run.add_argument("--json", help="arguments as one JSON object")
    p.set_defaults(func=cmd_tool)

    p = sub.add_parser("ingest", help="build an example database from raw triples")
    p.add_argument("triples", help="JSON array or JSON Lines of {buggy_code, fix_code, root_cause}")
    p.add_argument("--out", required=True)
    p.add_argument("--embedder", choices=["hashing", "http"], default="hashing")
    p.add_argument("--dimension", type=int, default=256)
    p.add_argument("--model", help="embedding model (http embedder)")
    p.add_argument("--threshold", type=float, default=0.6)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="rebuild the report from result directories")
    p.add_argument("results", nargs="+", help="result directories; several give an overlap table")
    p.add_argument("--corpus", help="corpus manifests, for scenario labels")
    p.add_argument("--annotations")
    p.add_argument("--out", help="where to write report.json/report.txt (default: first result dir)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RepairError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
