"""``complasso`` command line.

Subcommands::

    fit         tune an estimator on a CSV and write model.json/report.json
    predict     apply a saved model to a CSV
    paths       long-format coefficient paths (naive/non-naive elastic net,
                component lasso before and after the NNLS step)
    components  dendrogram merges and a partition for a CSV
    simulate    write replicates of a simulated design to disk
    bench       Monte Carlo benchmark tables for the simulated designs

Every command writes a ``manifest.json`` next to its outputs.  Outputs are a
pure function of the arguments: no timestamps, seeded RNG only.  Exit code 2
signals bad arguments or unreadable data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, bench
from .cluster import LINKAGES, Partition, build_dendrogram, cut_dendrogram
from .data import DataError, load_csv, sample_covariance, split_indices, standardize
from .pipeline import (
    ESTIMATORS,
    Holdout,
    KFold,
    SelectionGrid,
    _Engine,
    load_model,
    predict,
    rescale_factor,
    save_model,
    select_model,
)
from .simgen import NAMES, SimSpec, generate
from .solve import lambda_grid

PATH_METHODS = ("naive_enet", "enet", "component_lasso_pre_nnls", "component_lasso")
RNG_NAME = "numpy.random.Philox"


class UsageError(ValueError):
    """Bad flag value; the message names the flag."""


def _fmt(v) -> str:
    return format(float(v), ".17g")


def parse_k_grid(text: str) -> tuple[int, ...]:
    """``"1..8"``, ``"1,3,5"``, ``"1..37:4"`` or comma-joined mixtures."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                rng, _, step = part.partition(":")
                lo, hi = rng.split("..")
                out.extend(range(int(lo), int(hi) + 1, int(step) if step else 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"--k-grid: cannot parse {part!r}") from None
    if not out or min(out) < 1:
        raise UsageError(f"--k-grid: need positive integers, got {text!r}")
    return tuple(sorted(set(out)))


def parse_alpha_grid(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"--alpha-grid: cannot parse {text!r}") from None
    if not vals or any(not 0.0 <= a <= 1.0 for a in vals):
        raise UsageError(f"--alpha-grid: values must lie in [0, 1], got {text!r}")
    return vals


def write_manifest(out_dir: Path, command: str, args: argparse.Namespace) -> None:
    clean = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func"
    }
    manifest = {
        "package": "complasso",
        "version": __version__,
        "command": command,
        "args": clean,
        "seed": clean.get("seed"),
        "rng": RNG_NAME,
        "numpy": np.__version__,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _response(args):
    r = args.response
    return int(r) if r.lstrip("-").isdigit() else r


def _load(args):
    return load_csv(args.data, _response(args))


def _grid(args) -> SelectionGrid:
    ks = parse_k_grid(args.k_grid) if args.k_grid else None
    alphas = parse_alpha_grid(args.alpha_grid) if args.alpha_grid else SelectionGrid().alpha_values
    return SelectionGrid(ks, alphas, args.linkage, args.n_lambda, args.lambda_eps)


def _lam_scale(args, n: int) -> float:
    # (1/2n)||r||^2 + lam P has the same minimizer as 0.5||r||^2 + n lam P
    return 1.0 / n if getattr(args, "per_sample_loss", False) else 1.0


def _report_params(params: dict, scale: float) -> dict:
    out = dict(params)
    for key in ("lambda", "lambda2"):
        if key in out and out[key] is not None:
            out[key] = float(out[key]) * scale
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    raw = _load(args)
    grid = _grid(args)
    if args.holdout is not None:
        if not 0.0 < args.holdout < 1.0:
            raise UsageError("--holdout: fraction must lie in (0, 1)")
        split = split_indices(raw.n, (1.0 - args.holdout, args.holdout), args.seed)
        if split.validation.size == 0 or split.train.size < 2:
            raise UsageError("--holdout: too few rows for a split")
        d = standardize(raw.subset(split.train))
        scheme = Holdout.from_split(raw, split)
        scheme_info = {"holdout": args.holdout, "n_train": int(split.train.size),
                       "n_validation": int(split.validation.size)}
    else:
        if not 2 <= args.folds <= raw.n:
            raise UsageError(f"--folds: need 2 <= folds <= {raw.n}")
        d = standardize(raw)
        scheme = KFold(args.folds, args.seed)
        scheme_info = {"folds": args.folds, "n_train": raw.n}
    rep = select_model(d, grid, scheme, args.estimator)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(rep, out / "model.json")
    slope, intercept = rep.raw_coef()
    resid = d.y - d.X @ rep.beta_hat
    report = {
        "estimator": rep.estimator,
        "params": _report_params(rep.params, _lam_scale(args, d.n)),
        "loss": "per_sample" if args.per_sample_loss else "sum",
        "validation_mse": rep.validation_mse,
        "train_mse": float(resid @ resid / d.n),
        "n_nonzero": rep.n_nonzero,
        "selected_features": [
            (rep.feature_names[j] if rep.feature_names else j)
            for j in np.flatnonzero(rep.beta_hat)
        ],
        "raw_coef": slope.tolist(),
        "intercept": intercept,
        "scheme": scheme_info,
        "flags": rep.flags,
    }
    if rep.component is not None:
        report["K"] = rep.component.partition.K
        report["weights"] = rep.component.weights.c.tolist()
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    write_manifest(out, "fit", args)
    print(f"{rep.estimator}: {json.dumps(report['params'])} n_nonzero={rep.n_nonzero}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    raw = _load(args)
    y_hat = predict(model, raw.X, raw.feature_names)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("y_hat\n")
        fh.writelines(_fmt(v) + "\n" for v in y_hat)
    resid = raw.y - y_hat
    print(f"mse={float(resid @ resid / raw.n):.6g}")
    return 0


def path_rows(X, y, alpha: float, K: int, linkage: str, n_lambda: int, lambda_eps=None):
    """Coefficient paths of :data:`PATH_METHODS` over one shared lambda grid.

    Returns ``(lams, {method: (L, p) array})`` on the standardized scale.
    """
    lams = lambda_grid(X, y, alpha, n_lambda, lambda_eps)
    p = X.shape[1]
    engine = _Engine(X, y)
    if K > 1:
        part = cut_dendrogram(build_dendrogram(X.T @ X / X.shape[0], linkage), k=K)
    else:
        part = Partition.single_block(p)
    naive = engine.enet(alpha, lams).betas
    enet = naive * np.array([rescale_factor(X @ b, y) for b in naive])[:, None]
    pre, post, _, _ = engine.cl_path(part, alpha, lams)
    return lams, {
        "naive_enet": naive,
        "enet": enet,
        "component_lasso_pre_nnls": pre,
        "component_lasso": post,
    }


def cmd_paths(args) -> int:
    raw = _load(args)
    d = standardize(raw)
    if not 1 <= args.k <= d.p:
        raise UsageError(f"--k: need 1 <= K <= {d.p}")
    if not 0.0 < args.alpha <= 1.0:
        raise UsageError("--alpha: must lie in (0, 1]")
    lams, paths = path_rows(d.X, d.y, args.alpha, args.k, args.linkage, args.n_lambda, args.lambda_eps)
    names = d.feature_names or [str(j) for j in range(d.p)]
    scale = _lam_scale(args, d.n)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("method,lambda,feature,coefficient\n")
        for m in PATH_METHODS:
            B = paths[m]
            for l, lam in enumerate(lams):
                lam_s = _fmt(lam * scale)
                for j in range(d.p):
                    fh.write(f"{m},{lam_s},{names[j]},{_fmt(B[l, j])}\n")
    write_manifest(out.parent, "paths", args)
    print(f"wrote {len(PATH_METHODS) * lams.size * d.p} rows to {out}")
    return 0


def cmd_components(args) -> int:
    raw = _load(args)
    d = standardize(raw)
    dend = build_dendrogram(sample_covariance(d), args.linkage)
    if (args.k is None) == (args.tau is None):
        raise UsageError("--k/--tau: give exactly one")
    if args.k is not None:
        if not 1 <= args.k <= d.p:
            raise UsageError(f"--k: need 1 <= K <= {d.p}")
        part = cut_dendrogram(dend, k=args.k)
    else:
        part = cut_dendrogram(dend, height=1.0 - args.tau)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dend.write_csv(out / "dendrogram.csv")
    with open(out / "partition.json", "w") as fh:
        rec = part.to_dict()
        rec["feature_names"] = d.feature_names
        json.dump(rec, fh, indent=1)
        fh.write("\n")
    write_manifest(out, "components", args)
    print(f"K={part.K}")
    return 0


def _write_matrix(path, M, header) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(M):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = SimSpec.named(args.suite, seed=args.seed)
    for r in range(args.reps):
        spec = base.replicate(r)
        raw, split, beta, truth = generate(spec)
        rdir = out / f"rep_{r:03d}"
        rdir.mkdir(exist_ok=True)
        _write_matrix(rdir / "X.csv", raw.X, raw.feature_names)
        _write_matrix(rdir / "y.csv", raw.y[:, None], ["y"])
        with open(rdir / "split.json", "w") as fh:
            json.dump(split.to_dict(), fh)
        with open(rdir / "truth.json", "w") as fh:
            json.dump({
                "design": spec.name,
                "seed": spec.seed,
                "sigma": spec.sigma,
                "beta_true": beta.tolist(),
                "partition": truth.to_dict(),
            }, fh, indent=1)
    write_manifest(out, "simulate", args)
    print(f"wrote {args.reps} replicates of {args.suite} to {out}")
    return 0


def write_bench(out: Path, suite: str, rows: list[dict], seed: int) -> str:
    summary = bench.summarize(rows, seed)
    noc = bench.noc_table(rows)
    bench.write_csv(out / f"results_{suite}.csv", rows, bench.RESULT_FIELDS)
    bench.write_csv(out / f"bench_{suite}.csv", summary, bench.SUMMARY_FIELDS)
    bench.write_csv(out / f"noc_{suite}.csv", noc, ("K", "n_datasets", "misclassification"))
    text = bench.render_table(suite, summary, noc)
    with open(out / f"bench_{suite}.txt", "w") as fh:
        fh.write(text)
    return text


def cmd_bench(args) -> int:
    suites = bench.SUITES if args.suite == "all" else (args.suite,)
    if args.reps < 1:
        raise UsageError("--reps: need at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs: need at least 1")
    grid = _grid(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in suites:
        rows = bench.run_suite(s, args.reps, args.seed, args.jobs, grid)
        print(write_bench(out, s, rows, args.seed))
    write_manifest(out, "bench", args)
    return 0


# ---------------------------------------------------------------------------


def _add_data(p) -> None:
    p.add_argument("data", help="numeric CSV, optional header row")
    p.add_argument("--response", default="y",
                   help="response column: header name or 0-based index (default y)")


def _add_grid(p, with_linkage: bool = True) -> None:
    p.add_argument("--alpha-grid", help="comma-separated alphas (default 0.05,0.5,1)")
    p.add_argument("--k-grid", help="component counts, e.g. 1..8, 1,3,5 or 1..37:4")
    if with_linkage:
        p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--n-lambda", type=int, default=100)
    p.add_argument("--lambda-eps", type=float, default=None,
                   help="lambda_min / lambda_max (default 1e-3, 1e-2 when p > n)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="complasso", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="tune and fit an estimator")
    _add_data(p)
    p.add_argument("--estimator", choices=ESTIMATORS, default="component_lasso")
    _add_grid(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--folds", type=int, default=5)
    g.add_argument("--holdout", type=float, default=None,
                   help="validation fraction instead of k-fold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-sample-loss", action="store_true",
                   help="report lambda for the (1/2n)||r||^2 loss")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("model")
    _add_data(p)
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("paths", help="coefficient paths as long-format CSV")
    _add_data(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2, help="components for the component lasso")
    p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--n-lambda", type=int, default=100)
    p.add_argument("--lambda-eps", type=float, default=None)
    p.add_argument("--per-sample-loss", action="store_true")
    p.add_argument("--out", default="paths.csv")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("components", help="dendrogram and partition export")
    _add_data(p)
    p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("simulate", help="write simulated replicates")
    p.add_argument("suite", choices=NAMES)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="sim")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="Monte Carlo benchmark tables")
    p.add_argument("suite", choices=bench.SUITES + ("all",))
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_grid(p)
    p.add_argument("--out", default="bench_out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DataError, ValueError, OSError) as e:
        print(f"complasso {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
