#!/usr/bin/env python3
"""CVaR-aware vs risk-neutral sender utility across risk levels (CSV)."""

import sys

sys.path.insert(0, "src")

from cvarbp.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["exp-comparison"] + sys.argv[1:]))
