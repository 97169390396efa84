#!/usr/bin/env python3
"""Run the standard synthetic suite and print the summary table.

Equivalent to ``opalfield suite`` with timing per scene logged to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys

from opalfield.suite import run_suite, summary_table


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--output", default="suite_out")
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--n", type=int, default=9)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--scenes", default=None, help="comma separated subset")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    scenes = args.scenes.split(",") if args.scenes else None
    report = run_suite(args.output, n=args.n, size=args.size, scenes=scenes, threads=args.threads)
    print(summary_table(report))
    return 0 if report["passed"] else 4


if __name__ == "__main__":
    sys.exit(main())
