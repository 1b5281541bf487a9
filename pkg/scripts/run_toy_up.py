#!/usr/bin/env python3
"""Run the shipped two-block example end to end and print the summary.

Equivalent to:  halo-lab run configs/toy_up_p3.json --out halo_out
"""

import sys
from pathlib import Path

from halo_lab.cli import main

HERE = Path(__file__).resolve().parent.parent
CONFIG = HERE / "configs" / "toy_up_p3.json"

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "halo_out"
    sys.exit(main(["run", str(CONFIG), "--out", out]))
