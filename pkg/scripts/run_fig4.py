#!/usr/bin/env python3
"""Reproduce the error-probability curves for varied (N_rls, lambda, x_thr).

Writes one CSV per curve plus an overlay plot into results/.
"""

import os
import sys
from pathlib import Path

from mixsense.cli import cli_main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    outdir = ROOT / "results"
    outdir.mkdir(exist_ok=True)
    threads = str(os.cpu_count() or 1)
    sys.exit(
        cli_main(
            [
                "sweep",
                "--config", str(ROOT / "configs" / "paper_fig4.cfg"),
                "--out", str(outdir / "fig4.csv"),
                "--plot", str(outdir / "fig4.svg"),
                "--threads", threads,
            ]
        )
    )
