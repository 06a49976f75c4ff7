#!/usr/bin/env python3
"""Mean-field oscillator experiment: 20 runs, mean iterations to 1% error.

Extra CLI flags pass through, e.g. `scripts/run_kuramoto.py --out-dir /tmp/k`.
"""

import sys
from pathlib import Path

from mvsgd.cli import main

CONFIG = Path(__file__).resolve().parent / "configs" / "kuramoto.yaml"

if __name__ == "__main__":
    sys.exit(main(["run", "--config", str(CONFIG), *sys.argv[1:]]))
