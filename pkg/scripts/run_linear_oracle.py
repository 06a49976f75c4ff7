#!/usr/bin/env python3
"""Deterministic sanity model against its closed-form curve e^t."""

import sys
from pathlib import Path

from mvsgd.cli import main

CONFIG = Path(__file__).resolve().parent / "configs" / "linear_oracle.yaml"

if __name__ == "__main__":
    sys.exit(main(["run", "--config", str(CONFIG), "--strict-tol", *sys.argv[1:]]))
