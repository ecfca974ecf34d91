#!/usr/bin/env python3
"""Discretization accuracy/time trade-off sweep (CSV). Can take a while at
the default sizes; pass e.g. --sizes 4x3 for a quick run."""

import sys

sys.path.insert(0, "src")

from cvarbp.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["exp-tradeoff"] + sys.argv[1:]))
