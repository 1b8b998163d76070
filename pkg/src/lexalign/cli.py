"""Command-line interface.

Stage commands (segment/align/extract/standardize/evaluate) run the pipeline
up to and including that stage; `run` executes everything. All of them create
a new run directory unless --run-id names an existing one to resume. `ingest`
only validates a corpus and prints a summary. `serve` starts the HTTP API;
`export` converts a finished run's termbase.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import ConfigError, PipelineConfig, default_config, load_config
from .exporters import EXPORT_FORMATS, EXTENSIONS, UnsupportedField, export_termbase
from .model import load_termbase
from .parser import NoMarkersFound, compute_corpus_stats, format_stats_rows, segment_statute
from .pipeline import (STAGES, CorpusError, PipelineRun, RunLocked, StageError,
                       load_corpus)

_STAGE_COMMANDS = {
    "segment": "preprocess",
    "align": "align",
    "extract": "extract",
    "standardize": "standardize",
    "evaluate": "evaluate",
    "run": None,
}


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="pipeline config JSON (see docs/schema.md)")
    parser.add_argument("--corpus", type=Path, default=None,
                        help="corpus directory (overrides config)")
    parser.add_argument("--output", type=Path, default=None,
                        help="output directory for run folders (overrides config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for sampling and the mock provider")
    parser.add_argument("--mock", action="store_true", default=None,
                        help="use the deterministic offline provider for every role")
    parser.add_argument("--strict-review", action="store_true", default=None,
                        help="pause after each stage until its gate task is approved")


def _load_effective_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        config = load_config(args.config)
    elif args.corpus is not None:
        config = default_config(str(args.corpus))
    else:
        raise ConfigError("either --config or --corpus is required")
    updates: dict[str, object] = {}
    if args.corpus is not None:
        updates["corpus_dir"] = str(args.corpus)
    if args.output is not None:
        updates["output_dir"] = str(args.output)
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.mock:
        updates["mock"] = True
    if args.strict_review:
        updates["strict_review"] = True
    if updates:
        from dataclasses import replace
        config = replace(config, **updates)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexalign",
        description="build, standardize, and score a trilingual legal termbase",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser(
        "ingest", help="validate a corpus directory and print per-language stats")
    _add_config_options(ingest)

    for name, stage in _STAGE_COMMANDS.items():
        help_text = ("execute the full pipeline" if stage is None
                     else f"run the pipeline through the {stage} stage")
        sub = commands.add_parser(name, help=help_text)
        _add_config_options(sub)
        sub.add_argument("--run-id", default=None,
                         help="run id; an existing id resumes that run")

    serve = commands.add_parser("serve", help="start the HTTP API")
    _add_config_options(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8400)
    serve.add_argument("--frontend", type=Path, default=None,
                       help="directory of built UI assets to serve at /")
    serve.add_argument("--token", default=None,
                       help="bearer token (default: LEXALIGN_TOKEN env if set)")

    export = commands.add_parser("export", help="export a run's termbase")
    export.add_argument("--run-dir", type=Path, required=True,
                        help="run directory containing the termbase artifact")
    export.add_argument("--format", choices=EXPORT_FORMATS, default="jsonl")
    export.add_argument("--out", type=Path, default=None,
                        help="output file (default: stdout)")
    export.add_argument("--raw", action="store_true",
                        help="export the pre-standardization termbase")
    return parser


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    documents, laws = load_corpus(config.corpus_dir)
    print(f"corpus: {config.corpus_dir}")
    print(f"laws: {len(laws)}; documents: {len(documents)}")
    segments = []
    failures = 0
    for doc in documents:
        try:
            result = segment_statute(doc)
        except NoMarkersFound:
            print(f"  ! {doc.id} ({doc.language}): no article markers "
                  "(the pipeline will fall back to model refinement)")
            failures += 1
            continue
        segments.extend(result.segments)
        for warning in result.warnings:
            print(f"  ! {doc.id} ({doc.language}) line {warning.line_number}: "
                  f"{warning.message}")
    stats = []
    for language in ("zh", "ja", "en"):
        in_language = [s for s in segments if s.language == language]
        if in_language:
            stats.append(compute_corpus_stats(in_language))
    for row in format_stats_rows(stats):
        print(row)
    return 0 if failures == 0 else 1


def _cmd_stage(args: argparse.Namespace, until: str | None) -> int:
    config = _load_effective_config(args)
    run_dir = Path(config.output_dir) / args.run_id if args.run_id else None
    if run_dir is not None and run_dir.exists():
        run = PipelineRun.open(run_dir)
    else:
        run = PipelineRun.create(config, run_id=args.run_id)
    status = run.execute(until=until)
    print(f"run {run.run_id}: {status}")
    for stage in STAGES:
        entry = run.manifest["stages"][stage]
        marker = {"complete": "done", "awaiting_review": "WAITING",
                  "pending": "-"}.get(entry["status"], entry["status"])
        artifacts = ", ".join(entry["artifacts"]) if entry["artifacts"] else ""
        print(f"  {stage:<12} {marker:<8} {artifacts}")
    open_tasks = run.queue.open_tasks()
    if open_tasks:
        print(f"open review tasks: {len(open_tasks)}")
        for task in open_tasks:
            print(f"  [{task.id}] ({task.stage}) {task.title}")
    if status == "awaiting_review":
        print("strict review: approve or reject the gate task, then re-run "
              "the same command with --run-id to continue")
    return 0 if status in ("complete", "partial", "awaiting_review") else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app
    config = _load_effective_config(args)
    app = create_app(config, frontend_dir=args.frontend, token=args.token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    name = "raw.termbase.json" if args.raw else "standardized.termbase.json"
    path = args.run_dir / name
    if not path.exists():
        print(f"error: {path} does not exist (has the run reached that stage?)",
              file=sys.stderr)
        return 1
    termbase = load_termbase(path)
    try:
        text = export_termbase(termbase, args.format)
    except UnsupportedField as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out is None:
        sys.stdout.write(text)
    else:
        out = args.out
        if out.suffix == "":
            out = out.with_suffix(EXTENSIONS[args.format])
        out.write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command in _STAGE_COMMANDS:
            return _cmd_stage(args, _STAGE_COMMANDS[args.command])
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "export":
            return _cmd_export(args)
    except (ConfigError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunLocked as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
