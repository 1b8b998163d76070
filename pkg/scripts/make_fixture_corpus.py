#!/usr/bin/env python3
"""Regenerate the checked-in demo corpus under fixtures/corpus.

The corpus is three small statutes rendered in zh/ja/en with parallel article
structure. Marked spans drive the offline extraction provider: 《...》 spans
are picked up by both translation streams, 〈...〉 spans only by the
Chinese→English stream (so Japanese coverage gaps and auto-completion get
exercised), and one article carries a diverging Japanese payload to force a
genuine variant-standardization decision.
"""
from __future__ import annotations

import argparse
from pathlib import Path

from lexalign.synthetic import write_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent / "fixtures" / "corpus")
    args = parser.parse_args()
    paths = write_corpus(args.out)
    for path in paths:
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
