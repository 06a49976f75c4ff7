#!/usr/bin/env python3
"""Polynomial-drift experiment: 20 runs, mean iterations to 1% error."""

import sys
from pathlib import Path

from mvsgd.cli import main

CONFIG = Path(__file__).resolve().parent / "configs" / "polydrift.yaml"

if __name__ == "__main__":
    sys.exit(main(["run", "--config", str(CONFIG), *sys.argv[1:]]))
