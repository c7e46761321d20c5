#!/usr/bin/env python3
"""Rebuild every named scenario, assert its published figures, and print
the full markdown report for each one.

Usage:
    python3 scripts/run_scenarios.py            # all scenarios, markdown
    python3 scripts/run_scenarios.py --format json
    python3 scripts/run_scenarios.py compas_synthetic stride_height
"""
import argparse
import sys

from fairaudit import SCENARIO_NAMES
from fairaudit.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "names", nargs="*", default=list(SCENARIO_NAMES),
        help="scenario names (default: all)",
    )
    parser.add_argument("--format", choices=("json", "md"), default="md")
    args = parser.parse_args()

    worst = 0
    for name in args.names or SCENARIO_NAMES:
        print(f"{'=' * 72}\n== scenario: {name}\n{'=' * 72}")
        code = cli_main(["scenario", name, "--format", args.format])
        if code != 0:
            print(f"!! scenario {name} exited {code}", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
