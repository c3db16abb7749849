"""Orthogonal-design comparison: median beta-MSE over Monte Carlo replicates.

    python scripts/run_table1.py --reps 100 --out results/table1
"""

import argparse
import time
from pathlib import Path

from complasso.bench import run_suite
from complasso.cli import write_bench


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/table1")
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    t = time.perf_counter()
    rows = run_suite("orthogonal", a.reps, a.seed, a.jobs)
    print(write_bench(out, "orthogonal", rows, a.seed))
    print(f"elapsed {time.perf_counter() - t:.1f}s")


if __name__ == "__main__":
    main()
