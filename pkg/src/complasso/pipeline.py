"""Component lasso and comparator estimators with validation-based tuning.

The component lasso:

1. cluster the predictors on ``1 - |S|`` and cut the dendrogram into K
   components;
2. run an elastic-net path separately on each component;
3. regress y on the K componentwise predictions by non-negative least
   squares and scale each component's coefficients by its weight;
4. pick (K, alpha, lambda) by validation error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .cluster import Dendrogram, Partition, build_dendrogram, cut_dendrogram
from .data import (
    Dataset,
    DimensionMismatch,
    RawDataset,
    Split,
    Standardization,
    sample_covariance,
    standardize,
)
from .solve import (
    EnetConfig,
    NnlsResult,
    enet_path,
    lambda_grid,
    least_squares,
    nnls,
    nnls_path,
    nnls_kkt_residual,
    ridge_path,
)

ESTIMATORS = (
    "lasso",
    "rescaled_lasso",
    "lasso_ols_hybrid",
    "ridge",
    "naive_enet",
    "enet",
    "component_lasso",
)
DEFAULT_ALPHAS = (0.05, 0.5, 1.0)
RIDGE_EPS = 1e-6


class UnknownEstimator(ValueError):
    pass


class EmptyGrid(ValueError):
    pass


class NegativeWeight(ValueError):
    pass


def default_k_values(p: int) -> tuple[int, ...]:
    if p <= 50:
        return tuple(range(1, p + 1))
    ks = {1} | {int(round(v)) for v in np.geomspace(2, 50, 9)}
    return tuple(sorted(k for k in ks if k <= p))


@dataclass(frozen=True)
class SelectionGrid:
    """Search space.  ``K_values=None`` means :func:`default_k_values`."""

    K_values: Optional[tuple[int, ...]] = None
    alpha_values: tuple[float, ...] = DEFAULT_ALPHAS
    linkage: str = "average"
    n_lambda: int = 100
    lambda_eps: Optional[float] = None

    def ks(self, p: int) -> list[int]:
        ks = default_k_values(p) if self.K_values is None else self.K_values
        ks = sorted({int(k) for k in ks})
        bad = [k for k in ks if not 1 <= k <= p]
        if bad:
            raise ValueError(f"K values {bad} outside 1..{p}")
        return ks

    def alphas(self) -> list[float]:
        al = sorted({float(a) for a in self.alpha_values})
        if any(not 0.0 <= a <= 1.0 for a in al):
            raise ValueError("alpha values must lie in [0, 1]")
        return al


@dataclass(frozen=True)
class Holdout:
    """Validation data on the raw scale."""

    X: np.ndarray
    y: np.ndarray

    @classmethod
    def from_split(cls, raw: RawDataset, split: Split) -> "Holdout":
        return cls(raw.X[split.validation], raw.y[split.validation])


@dataclass(frozen=True)
class KFold:
    k: int = 5
    seed: int = 0


@dataclass
class ComponentModel:
    partition: Partition
    per_component: list[np.ndarray]  # coefficients restricted to each component
    weights: NnlsResult
    beta_hat: np.ndarray
    selected: dict
    paths: Optional[list] = None  # per-component EnetPath objects, not serialized

    @property
    def pre_nnls(self) -> np.ndarray:
        beta = np.zeros(self.partition.p)
        for idx, b in zip(self.partition.members(), self.per_component):
            beta[idx] = b
        return beta

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "per_component": [b.tolist() for b in self.per_component],
            "weights": self.weights.c.tolist(),
            "kkt_residual": self.weights.kkt_residual,
            "beta_hat": self.beta_hat.tolist(),
            "selected": self.selected,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ComponentModel":
        return cls(
            Partition.from_dict(d["partition"]),
            [np.asarray(b, dtype=float) for b in d["per_component"]],
            NnlsResult(np.asarray(d["weights"], dtype=float), float(d["kkt_residual"])),
            np.asarray(d["beta_hat"], dtype=float),
            dict(d["selected"]),
        )


@dataclass
class FitReport:
    """A fitted estimator.  ``beta_hat`` is on the standardized scale."""

    estimator: str
    beta_hat: np.ndarray
    validation_mse: float
    params: dict
    transform: Standardization
    feature_names: Optional[list[str]] = None
    component: Optional[ComponentModel] = None
    flags: dict = field(default_factory=dict)

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.beta_hat))

    def raw_coef(self) -> tuple[np.ndarray, float]:
        return self.transform.raw_coef(self.beta_hat)

    def to_dict(self) -> dict:
        slope, intercept = self.raw_coef()
        return {
            "estimator": self.estimator,
            "params": self.params,
            "validation_mse": self.validation_mse,
            "n_nonzero": self.n_nonzero,
            "beta_hat": self.beta_hat.tolist(),
            "raw_coef": slope.tolist(),
            "intercept": intercept,
            "standardization": self.transform.to_dict(),
            "feature_names": self.feature_names,
            "component": None if self.component is None else self.component.to_dict(),
            "flags": self.flags,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        comp = d.get("component")
        return cls(
            d["estimator"],
            np.asarray(d["beta_hat"], dtype=float),
            float(d["validation_mse"]) if d["validation_mse"] is not None else float("nan"),
            dict(d["params"]),
            Standardization.from_dict(d["standardization"]),
            d.get("feature_names"),
            None if comp is None else ComponentModel.from_dict(comp),
            dict(d.get("flags", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "FitReport":
        return cls.from_dict(json.loads(text))


def save_model(report: FitReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(report.to_json(indent=1))


def load_model(path) -> FitReport:
    with open(path) as fh:
        return FitReport.from_json(fh.read())


# ---------------------------------------------------------------------------
# path computations shared by fitting and selection


def rescale_factor(yhat: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of ``y`` on ``yhat``; 1 when ``yhat`` is zero."""
    den = float(yhat @ yhat)
    return float(yhat @ y) / den if den > 0 else 1.0


class _Engine:
    """Caches dendrogram cuts and per-component elastic-net paths for one
    design so that overlapping (K, alpha) cells reuse work."""

    def __init__(self, X, y, dendrogram: Optional[Dendrogram] = None):
        self.X = np.ascontiguousarray(X)
        self.y = np.ascontiguousarray(y)
        self.dendrogram = dendrogram
        self._parts: dict = {}
        self._comp: dict = {}
        self.flags: dict = {}

    def partition(self, K: int) -> Partition:
        if K not in self._parts:
            if K == 1 or self.dendrogram is None:
                self._parts[K] = Partition.single_block(self.X.shape[1])
            else:
                self._parts[K] = cut_dendrogram(self.dendrogram, k=K)
        return self._parts[K]

    def component_path(self, idx: np.ndarray, alpha: float, lams: np.ndarray):
        key = (idx.tobytes(), alpha, lams.tobytes())
        if key not in self._comp:
            Xk = self.X[:, idx]
            path = enet_path(Xk, self.y, EnetConfig(alpha, lams))
            if not path.converged.all():
                self.flags["max_iter"] = True
            yhat = path.betas @ Xk.T  # (L, n)
            self._comp[key] = (path, yhat)
        return self._comp[key]

    def enet(self, alpha, lams):
        return self.component_path(np.arange(self.X.shape[1]), alpha, lams)[0]

    def cl_path(self, partition: Partition, alpha: float, lams: np.ndarray):
        """Pre- and post-recombination coefficients and weights along ``lams``."""
        L = lams.shape[0]
        p = self.X.shape[1]
        members = partition.members()
        pre = np.zeros((L, p))
        yhats = []
        paths = []
        for idx in members:
            path, yhat = self.component_path(idx, alpha, lams)
            pre[:, idx] = path.betas
            yhats.append(yhat)
            paths.append(path)
        Yh = np.stack(yhats, axis=2)  # (L, n, K)
        weights = nnls_path(Yh, self.y)
        post = pre * weights[:, partition.assignment]
        return pre, post, weights, paths

    def hybrid(self, betas: np.ndarray) -> np.ndarray:
        out = np.zeros_like(betas)
        cache = {}
        for l, b in enumerate(betas):
            sup = np.flatnonzero(b)
            key = sup.tobytes()
            if key not in cache:
                res = least_squares(self.X[:, sup], self.y)
                if res.singular:
                    self.flags["singular_refit"] = True
                cache[key] = res.beta
            out[l, sup] = cache[key]
        return out

    def rescale(self, betas: np.ndarray) -> np.ndarray:
        yh = betas @ self.X.T
        s = np.array([rescale_factor(v, self.y) for v in yh])
        return betas * s[:, None]


def _grid_for(X, y, estimator: str, alpha: float, grid: SelectionGrid) -> np.ndarray:
    if estimator == "ridge":
        return lambda_grid(X, y, 0.0, grid.n_lambda, RIDGE_EPS)
    return lambda_grid(X, y, alpha, grid.n_lambda, grid.lambda_eps)


def _cells(estimator: str, grid: SelectionGrid, p: int) -> list[tuple[int, float]]:
    if estimator not in ESTIMATORS:
        raise UnknownEstimator(estimator)
    if estimator in ("lasso", "rescaled_lasso", "lasso_ols_hybrid"):
        return [(1, 1.0)]
    if estimator == "ridge":
        return [(1, 0.0)]
    alphas = grid.alphas()
    if not alphas:
        raise EmptyGrid("no alpha values")
    if estimator == "component_lasso":
        ks = grid.ks(p)
        if not ks:
            raise EmptyGrid("no K values")
        return [(K, a) for K in ks for a in alphas]
    return [(1, a) for a in alphas]


def _cell_betas(engine: _Engine, estimator: str, K: int, alpha: float, lams):
    """Coefficient path (L, p) of one cell; component fits also return the
    partition and weights."""
    if estimator == "ridge":
        return ridge_path(engine.X, engine.y, lams), None
    if estimator == "component_lasso":
        part = engine.partition(K)
        pre, post, w, paths = engine.cl_path(part, alpha, lams)
        return post, (part, pre, w, paths)
    betas = engine.enet(alpha, lams).betas
    if estimator in ("rescaled_lasso", "enet"):
        betas = engine.rescale(betas)
    elif estimator == "lasso_ols_hybrid":
        betas = engine.hybrid(betas)
    return betas, None


def _dendrogram_for(d: Dataset, estimator: str, linkage: str) -> Optional[Dendrogram]:
    if estimator != "component_lasso" or d.p == 1:
        return None
    return build_dendrogram(sample_covariance(d), linkage)


def _mse_path(X, y_centered_target, betas) -> np.ndarray:
    resid = y_centered_target[:, None] - X @ betas.T
    return np.mean(resid ** 2, axis=0)


def select_model(
    d: Dataset,
    grid: SelectionGrid = SelectionGrid(),
    scheme: Union[Holdout, KFold] = KFold(),
    estimator: str = "component_lasso",
) -> FitReport:
    """Tune ``estimator`` over ``grid`` and return the chosen fit.

    Each (K, alpha) cell scans its own lambda path.  The winner minimizes
    validation MSE; ties go to smaller K, then larger lambda, then smaller
    alpha.
    """
    cells = _cells(estimator, grid, d.p)
    engine = _Engine(d.X, d.y, _dendrogram_for(d, estimator, grid.linkage))
    grids = {
        (K, a): _grid_for(d.X, d.y, estimator, a, grid) for K, a in cells
    }

    scores: dict = {}
    fits: dict = {}
    if isinstance(scheme, Holdout):
        Xv = d.transform.transform_X(scheme.X)
        yv = np.asarray(scheme.y, dtype=float) - d.y_mean
        if yv.size == 0:
            raise EmptyGrid("validation set is empty")
        for cell in cells:
            betas, extra = _cell_betas(engine, estimator, *cell, grids[cell])
            fits[cell] = (betas, extra)
            scores[cell] = _mse_path(Xv, yv, betas)
    elif isinstance(scheme, KFold):
        folds = _fold_ids(d.n, scheme.k, scheme.seed)
        raw = d.raw()
        for cell in cells:
            scores[cell] = np.zeros(grids[cell].shape[0])
        for f in range(scheme.k):
            tr, te = folds != f, folds == f
            df = standardize(raw.subset(np.flatnonzero(tr)))
            eng_f = _Engine(df.X, df.y)
            eng_f._parts = engine._parts  # components come from the full data
            eng_f.dendrogram = engine.dendrogram
            Xv = df.transform.transform_X(raw.X[te])
            yv = raw.y[te] - df.y_mean
            for cell in cells:
                betas, _ = _cell_betas(eng_f, estimator, *cell, grids[cell])
                scores[cell] += _mse_path(Xv, yv, betas) * te.sum() / d.n
            engine.flags.update(eng_f.flags)
    else:
        raise TypeError(f"unknown validation scheme {scheme!r}")

    best = None
    for K, a in cells:
        lams = grids[(K, a)]
        for l, s in enumerate(scores[(K, a)]):
            key = (s, K, -lams[l], a)
            if best is None or key < best[0]:
                best = (key, (K, a), l)
    _, cell, l = best
    if cell not in fits:
        fits[cell] = _cell_betas(engine, estimator, *cell, grids[cell])
    betas, extra = fits[cell]
    lam = float(grids[cell][l])
    params = _params(estimator, cell, lam)
    comp = None
    if extra is not None:
        part, pre, w, paths = extra
        comp = _component_model(part, pre[l], w[l], betas[l], params, engine, paths)
    return FitReport(
        estimator,
        betas[l].copy(),
        float(scores[cell][l]),
        params,
        d.transform,
        d.feature_names,
        comp,
        dict(engine.flags),
    )


def _fold_ids(n: int, k: int, seed: int) -> np.ndarray:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= folds <= n, got {k}")
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    ids = np.empty(n, dtype=int)
    ids[perm] = np.arange(n) % k
    return ids


def _params(estimator: str, cell, lam: float) -> dict:
    K, a = cell
    if estimator in ("lasso", "rescaled_lasso", "lasso_ols_hybrid"):
        return {"lambda": lam}
    if estimator == "ridge":
        return {"lambda2": lam}
    if estimator == "component_lasso":
        return {"K": K, "alpha": a, "lambda": lam}
    return {"alpha": a, "lambda": lam}


def _component_model(part, pre_row, c, beta, params, engine, paths) -> ComponentModel:
    members = part.members()
    A = np.column_stack([engine.X[:, idx] @ pre_row[idx] for idx in members])
    res = NnlsResult(c.copy(), nnls_kkt_residual(A, engine.y, c))
    return ComponentModel(
        part, [pre_row[idx].copy() for idx in members], res, beta.copy(), params, paths
    )


# ---------------------------------------------------------------------------
# fixed-parameter fits


def component_lasso_fit(
    d: Dataset,
    partition: Partition,
    alpha: float,
    lam: float,
    iterate_once: bool = False,
) -> ComponentModel:
    """Component lasso at fixed (partition, alpha, lambda).

    With ``iterate_once`` the coefficients are re-solved once with the
    weights held fixed, followed by a second weight fit.
    """
    if partition.p != d.p:
        raise DimensionMismatch(f"partition over {partition.p} features, data has {d.p}")
    engine = _Engine(d.X, d.y)
    lams = np.array([float(lam)])
    pre, post, w, paths = engine.cl_path(partition, float(alpha), lams)
    params = {"K": partition.K, "alpha": float(alpha), "lambda": float(lam)}
    model = _component_model(partition, pre[0], w[0], post[0], params, engine, paths)
    if not iterate_once:
        return model
    # beta step with c fixed: the design columns carry their component weight
    scale = w[0][partition.assignment]
    on = scale > 0
    beta = np.zeros(d.p)
    if on.any():
        Xs = d.X[:, on] * scale[on]
        beta[on] = enet_path(Xs, d.y, EnetConfig(float(alpha), lams)).betas[0]
    members = partition.members()
    A = np.column_stack([d.X[:, idx] @ beta[idx] for idx in members])
    res = nnls(A, d.y)
    post2 = np.zeros(d.p)
    for k, idx in enumerate(members):
        post2[idx] = res.c[k] * beta[idx]
    return ComponentModel(
        partition, [beta[idx].copy() for idx in members], res, post2, params, None
    )


def objective_J(d: Dataset, partition: Partition, beta, c, alpha: float, lam: float) -> float:
    """Componentwise objective: for every component k, half the squared
    residual of ``y`` against that component's ``c_k``-scaled prediction,
    plus the elastic-net penalty on the component's coefficients."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise NegativeWeight("weights must be nonnegative")
    beta = np.asarray(beta, dtype=float)
    total = 0.0
    for k, idx in enumerate(partition.members()):
        r = d.y - c[k] * (d.X[:, idx] @ beta[idx])
        b = beta[idx]
        pen = alpha * np.abs(b).sum() + 0.5 * (1 - alpha) * (b @ b)
        total += 0.5 * float(r @ r) + lam * pen
    return total


def fit_estimator(name: str, d: Dataset, params: Optional[dict] = None) -> FitReport:
    """Fit one estimator at fixed parameters (no tuning).

    ``params`` keys: ``lambda`` (or ``lambda2`` for ridge), ``alpha`` for
    the elastic nets, and ``K`` or ``partition`` plus ``linkage`` for the
    component lasso.
    """
    if name not in ESTIMATORS:
        raise UnknownEstimator(name)
    params = dict(params or {})
    engine = _Engine(d.X, d.y)
    comp = None
    if name == "ridge":
        lam2 = float(params.get("lambda2", params.get("lambda", 0.0)))
        beta = ridge_path(d.X, d.y, [lam2])[0]
        out = {"lambda2": lam2}
    else:
        lam = float(params["lambda"])
        lams = np.array([lam])
        if name == "component_lasso":
            alpha = float(params.get("alpha", 1.0))
            part = params.get("partition")
            if part is None:
                K = int(params.get("K", 1))
                dend = _dendrogram_for(d, name, params.get("linkage", "average"))
                part = Partition.single_block(d.p) if dend is None else cut_dendrogram(dend, k=K)
            comp = component_lasso_fit(d, part, alpha, lam, params.get("iterate_once", False))
            beta = comp.beta_hat
            out = {"K": part.K, "alpha": alpha, "lambda": lam}
        else:
            alpha = 1.0 if name in ("lasso", "rescaled_lasso", "lasso_ols_hybrid") else float(params["alpha"])
            beta = _cell_betas(engine, name, 1, alpha, lams)[0][0]
            out = _params(name, (1, alpha), lam)
    return FitReport(name, beta, float("nan"), out, d.transform, d.feature_names, comp, dict(engine.flags))


def predict(model: FitReport, X_new, feature_names: Optional[list[str]] = None) -> np.ndarray:
    """Predict on the raw scale.  With ``feature_names`` the columns of
    ``X_new`` are aligned to the model's features by name."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim == 1:
        X_new = X_new[None, :]
    if feature_names is not None and model.feature_names is not None:
        pos = {name: j for j, name in enumerate(feature_names)}
        missing = [f for f in model.feature_names if f not in pos]
        if missing or len(feature_names) != X_new.shape[1]:
            raise DimensionMismatch(f"cannot align columns; missing {missing}")
        X_new = X_new[:, [pos[f] for f in model.feature_names]]
    if X_new.shape[1] != model.beta_hat.shape[0]:
        raise DimensionMismatch(
            f"model has {model.beta_hat.shape[0]} features, got {X_new.shape[1]}"
        )
    # a fixed memory layout keeps the product bit-reproducible across callers
    Z = np.ascontiguousarray(model.transform.transform_X(X_new))
    return Z @ model.beta_hat + model.transform.y_mean
