"""Correlated simulation designs ex1..ex4: median beta-MSE, FP and FN, plus
the distribution of the selected number of components.

    python scripts/run_table2.py --reps 100 --jobs 4 --suites ex2b ex4
"""

import argparse
import time
from pathlib import Path

from complasso.bench import run_suite
from complasso.cli import write_bench

SUITES = ("ex1", "ex2a", "ex2b", "ex3", "ex4")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--suites", nargs="+", choices=SUITES, default=list(SUITES))
    ap.add_argument("--out", default="results/table2")
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in a.suites:
        t = time.perf_counter()
        rows = run_suite(s, a.reps, a.seed, a.jobs)
        print(write_bench(out, s, rows, a.seed))
        print(f"{s}: {time.perf_counter() - t:.1f}s\n")


if __name__ == "__main__":
    main()
