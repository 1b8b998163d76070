#!/usr/bin/env python3
"""Run the whole pipeline offline against the demo corpus and print a digest.

Everything is deterministic for a given seed: the offline provider derives
embeddings, extraction output, and judge scores from content hashes, so two
runs with the same seed produce byte-identical termbases and reports.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from lexalign.config import default_config
from lexalign.pipeline import run_pipeline
from lexalign.synthetic import write_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", type=Path, default=None,
                        help="corpus directory (default: regenerate the demo corpus)")
    parser.add_argument("--output", type=Path, default=Path("runs"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--strict-review", action="store_true")
    args = parser.parse_args()

    corpus = args.corpus
    if corpus is None:
        corpus = args.output / "demo-corpus"
        write_corpus(corpus)
        print(f"demo corpus written to {corpus}")

    config = default_config(str(corpus), output_dir=str(args.output),
                            seed=args.seed, mock=True,
                            strict_review=args.strict_review)
    run = run_pipeline(config)
    print(f"run {run.run_id}: {run.manifest['status']} (dir: {run.run_dir})")

    if run.manifest["status"] == "awaiting_review":
        gates = [t for t in run.queue.open_tasks() if t.kind == "gate"]
        print("strict review is on; open gate tasks:")
        for task in gates:
            print(f"  [{task.id}] {task.title}")
        return

    report = json.loads((run.run_dir / "evaluation_report.json").read_text("utf-8"))
    print(f"overall score: {report['display']['overall_score']} "
          f"(grade {report['grade']})")
    for dimension, score in report["dimension_scores"].items():
        print(f"  {dimension:<22} {score}")
    for key in report["metrics"]:
        print(f"  {key:<22} {report['display'][key]}")
    open_tasks = run.queue.open_tasks()
    print(f"open review tasks: {len(open_tasks)}")
    for task in open_tasks:
        print(f"  [{task.id}] ({task.stage}) {task.title}")


if __name__ == "__main__":
    main()
