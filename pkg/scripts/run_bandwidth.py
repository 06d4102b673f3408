#!/usr/bin/env python3
"""Data-driven bandwidth selection demo.

Runs the pilot-matching selection rule on one drawn sample and writes the
objective curve plus the selected h* as JSON.  Append CLI flags to
override the defaults, e.g. ``python scripts/run_bandwidth.py --n 500``.
"""

import sys

from mirrorsobol.cli import main

DEFAULTS = [
    "bandwidth",
    "--model", "linear3",
    "--n", "2000",
    "--seed", "0",
    "--mask", "1",
    "--auto",
    "--output", "bandwidth.json",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
