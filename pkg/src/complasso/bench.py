"""Monte Carlo benchmark harness over the simulated designs."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cluster import misclassification
from .data import standardize
from .metrics import evaluate
from .pipeline import Holdout, SelectionGrid, predict, select_model
from .simgen import SimSpec, generate

SUITES = ("orthogonal", "ex1", "ex2a", "ex2b", "ex3", "ex4")
RESULT_FIELDS = (
    "estimator", "replicate", "beta_mse", "test_mse", "fp", "fn",
    "K", "alpha", "lambda", "misclassification",
)
SUMMARY_FIELDS = (
    "estimator", "median_beta_mse", "se_beta_mse", "median_fp", "se_fp",
    "median_fn", "se_fn", "median_test_mse", "se_test_mse", "n_reps",
)
N_BOOT = 1000

LABELS = {
    "lasso": "Lasso",
    "rescaled_lasso": "Rescaled Lasso",
    "lasso_ols_hybrid": "Lasso-OLS Hybrid",
    "naive_enet": "Naive Elastic Net",
    "enet": "Elastic Net",
    "ridge": "Ridge",
    "component_lasso_k2": "Component Lasso (2 components)",
    "component_lasso": "Component Lasso",
}


@dataclass(frozen=True)
class Method:
    label: str
    estimator: str
    K_values: Optional[tuple[int, ...]] = None


def methods_for(suite: str) -> list[Method]:
    rows = [
        Method("lasso", "lasso"),
        Method("rescaled_lasso", "rescaled_lasso"),
        Method("lasso_ols_hybrid", "lasso_ols_hybrid"),
        Method("naive_enet", "naive_enet"),
        Method("enet", "enet"),
        Method("ridge", "ridge"),
    ]
    if suite == "orthogonal":
        rows.append(Method("component_lasso_k2", "component_lasso", (2,)))
    rows.append(Method("component_lasso", "component_lasso"))
    return rows


def run_replicate(suite: str, r: int, seed: int, grid: SelectionGrid = SelectionGrid()) -> list[dict]:
    spec = SimSpec.named(suite, seed=seed).replicate(r)
    raw, split, beta_true, truth = generate(spec)
    train = standardize(raw.subset(split.train))
    hold = Holdout.from_split(raw, split)
    X_test, y_test = raw.X[split.test], raw.y[split.test]
    signal = np.flatnonzero(beta_true)
    out = []
    for m in methods_for(suite):
        g = grid if m.K_values is None else SelectionGrid(
            m.K_values, grid.alpha_values, grid.linkage, grid.n_lambda, grid.lambda_eps
        )
        rep = select_model(train, g, hold, m.estimator)
        slope, _ = rep.raw_coef()
        ev = evaluate(beta_true, slope, X_test, y_test, predict(rep, X_test))
        row = {
            "estimator": m.label,
            "replicate": r,
            "beta_mse": ev.beta_mse,
            "test_mse": ev.test_mse,
            "fp": ev.fp_rate,
            "fn": ev.fn_rate,
            "K": rep.params.get("K", ""),
            "alpha": rep.params.get("alpha", ""),
            "lambda": rep.params.get("lambda", rep.params.get("lambda2")),
            "misclassification": "",
        }
        if rep.component is not None and signal.size >= 2:
            row["misclassification"] = misclassification(rep.component.partition, truth, signal)
        out.append(row)
    return out


def _run_one(args):
    return run_replicate(*args)


def run_suite(
    suite: str, n_reps: int, seed: int = 0, jobs: int = 1,
    grid: SelectionGrid = SelectionGrid(),
) -> list[dict]:
    """All replicates of one suite, merged in replicate order."""
    tasks = [(suite, r, seed, grid) for r in range(n_reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_run_one, tasks))
    else:
        chunks = [_run_one(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def bootstrap_median_se(x, n_boot: int = N_BOOT, seed: int = 0) -> float:
    """Bootstrap standard error of the median; NaN for fewer than 2 values."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float("nan")
    rng = np.random.Generator(np.random.Philox(seed))
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    return float(np.std(np.median(x[idx], axis=1), ddof=1))


def summarize(rows: list[dict], seed: int = 0) -> list[dict]:
    labels = list(dict.fromkeys(r["estimator"] for r in rows))
    out = []
    for i, lab in enumerate(labels):
        sub = [r for r in rows if r["estimator"] == lab]
        rec = {"estimator": lab, "n_reps": len(sub)}
        for j, key in enumerate(("beta_mse", "fp", "fn", "test_mse")):
            vals = np.array([r[key] for r in sub], dtype=float)
            rec[f"median_{key}"] = float(np.median(vals))
            rec[f"se_{key}"] = bootstrap_median_se(vals, seed=seed + 97 * i + j)
        out.append(rec)
    return out


def noc_table(rows: list[dict], label: str = "component_lasso") -> list[dict]:
    """Histogram of the selected number of components with the mean signal
    misclassification rate in each bucket."""
    sub = [r for r in rows if r["estimator"] == label]
    ks = sorted({int(r["K"]) for r in sub})
    table = []
    for k in ks:
        bucket = [r for r in sub if int(r["K"]) == k]
        mis = [float(r["misclassification"]) for r in bucket if r["misclassification"] != ""]
        table.append({
            "K": k,
            "n_datasets": len(bucket),
            "misclassification": float(np.mean(mis)) if mis else float("nan"),
        })
    return table


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path, rows: list[dict], fields) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r[f]) for f in fields])


def render_table(suite: str, summary: list[dict], noc: list[dict]) -> str:
    def cell(m, se):
        se_txt = "n/a" if np.isnan(se) else f"{se:.2f}"
        return f"{m:.2f} ({se_txt})"

    buf = io.StringIO()
    buf.write(f"Suite: {suite}\n")
    head = f"{'Method':<32}{'Median MSE':>18}{'Median FP':>16}{'Median FN':>16}\n"
    buf.write(head)
    buf.write("-" * (len(head) - 1) + "\n")
    for s in summary:
        buf.write(
            f"{LABELS.get(s['estimator'], s['estimator']):<32}"
            f"{cell(s['median_beta_mse'], s['se_beta_mse']):>18}"
            f"{cell(s['median_fp'], s['se_fp']):>16}"
            f"{cell(s['median_fn'], s['se_fn']):>16}\n"
        )
    if noc:
        buf.write("\nNumber of components selected by the component lasso\n")
        buf.write("K            " + " ".join(f"{r['K']:>5d}" for r in noc) + "\n")
        buf.write("datasets     " + " ".join(f"{r['n_datasets']:>5d}" for r in noc) + "\n")
        buf.write("mis. rate    " + " ".join(
            "    -" if np.isnan(r["misclassification"]) else f"{r['misclassification']:>5.2f}"
            for r in noc) + "\n")
    return buf.getvalue()
