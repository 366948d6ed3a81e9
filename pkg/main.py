#!/usr/bin/env python3
"""
SPARSEADD command-line interface
================================

Sparse additive decomposition of functions and joint sparsification of
symmetric matrix sets by an orthogonal change of variables.

Usage:
    python main.py gen matrices --d 4 --J-size 7 --N 10 --seed 7
    python main.py gen function --d 10 --seed 3 --noisy
    python main.py gen builtin --which f1 --rotate --seed 11
    python main.py sparsify --input inst.json --init grid --h 0.25 --method rgd
    python main.py anova --which f1 --orders 1,2
    python main.py report data/sparseadd/trials_d4_seed0 --table dim4
    python main.py trials --d 4 --trials 20

Exit codes:
    0    success
    2    invalid input (bad flags, malformed files, budget exceeded)
    3    a pipeline stage failed
"""

import sys

from src.cli import run


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
