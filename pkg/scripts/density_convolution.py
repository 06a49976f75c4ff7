#!/usr/bin/env python3
"""Convolution model: SGD density vs particle density on [-3, 4]."""

import sys
from pathlib import Path

from mvsgd.cli import main

CONFIG = Path(__file__).resolve().parent / "configs" / "convolution_density.yaml"

if __name__ == "__main__":
    sys.exit(main(["density", "--config", str(CONFIG), *sys.argv[1:]]))
