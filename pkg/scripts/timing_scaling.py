"""Wall time of fit + predict on marker designs.

Runs the genotype-panel shape (599 x 1279, 5-fold CV) and a sweep over p at
fixed n to show how the cost grows with the number of predictors.

    python scripts/timing_scaling.py --n 300 --p 250 500 1000 2000
"""

import argparse
import time

import numpy as np

from complasso.data import split_indices, standardize
from complasso.pipeline import KFold, SelectionGrid, predict, select_model
from complasso.simgen import marker_design


def fit_predict(raw, folds):
    sp = split_indices(raw.n, (0.5, 0, 0.5), 0)
    t = time.perf_counter()
    rep = select_model(standardize(raw.subset(sp.train)), SelectionGrid(), KFold(folds, 0))
    y_hat = predict(rep, raw.X[sp.test])
    dt = time.perf_counter() - t
    return dt, rep, float(np.mean((raw.y[sp.test] - y_hat) ** 2)), float(np.var(raw.y[sp.test]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--p", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--folds", type=int, default=3)
    ap.add_argument("--skip-panel", action="store_true")
    a = ap.parse_args()
    fit_predict(marker_design(100, 50, seed=1), 2)  # jit warm-up
    if not a.skip_panel:
        dt, rep, mse, var = fit_predict(marker_design(599, 1279, seed=0), 5)
        print(f"599 x 1279, 5-fold: {dt:.1f}s  K={rep.params['K']}  test mse {mse:.3f} (var {var:.3f})")
    prev = None
    for p in a.p:
        dt, *_ = fit_predict(marker_design(a.n, p, seed=1), a.folds)
        ratio = f"  x{dt / prev:.2f}" if prev else ""
        print(f"n={a.n} p={p:5d}: {dt:7.1f}s{ratio}")
        prev = dt


if __name__ == "__main__":
    main()
