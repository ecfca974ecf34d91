#!/usr/bin/env python3
"""Posterior-entropy sweep on the advisory instance (CSV)."""

import sys

sys.path.insert(0, "src")

from cvarbp.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["exp-entropy"] + sys.argv[1:]))
