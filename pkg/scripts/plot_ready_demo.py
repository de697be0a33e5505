#!/usr/bin/env python3
"""Small demonstration run: solve the shipped pulse config, print the
diagnostics, and dump plot-ready snapshot CSVs under out/demo.

    python3 scripts/plot_ready_demo.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gaslab.cli import main as gaslab_main

root = os.path.join(os.path.dirname(__file__), "..")
sys.exit(gaslab_main(["solve", os.path.join(root, "configs", "pulse.json"),
                      "--out", "out/demo", "--stride", "4"]))
