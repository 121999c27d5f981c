#!/usr/bin/env python3
"""Run the full pore-vs-effective homogenization study for a config file.

Usage: python scripts/run_study.py [config.yaml] [out_dir]
"""

import sys
from pathlib import Path

from korteweg.cli import main

if __name__ == "__main__":
    cfg = sys.argv[1] if len(sys.argv) > 1 else str(
        Path(__file__).resolve().parents[1] / "configs" / "study_two_well.yaml"
    )
    out = sys.argv[2] if len(sys.argv) > 2 else "out/study"
    sys.exit(main(["compare", "--config", cfg, "--out", out]))
