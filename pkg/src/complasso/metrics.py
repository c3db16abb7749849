"""Evaluation metrics and support-recovery diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .data import Covariance, DimensionMismatch

NONZERO_TOL = 1e-8


class EmptyTestSet(ValueError):
    pass


class SingularGram(ValueError):
    pass


@dataclass(frozen=True)
class EvalResult:
    beta_mse: float
    test_mse: float
    fp_rate: float
    fn_rate: float

    def to_dict(self) -> dict:
        return asdict(self)


def beta_mse(beta_true, beta_hat, S) -> float:
    """Quadratic form ``(b - b_hat)' S (b - b_hat)``."""
    S = S.S if isinstance(S, Covariance) else np.asarray(S, dtype=float)
    d = np.asarray(beta_true, dtype=float) - np.asarray(beta_hat, dtype=float)
    if d.ndim != 1 or S.shape != (d.size, d.size):
        raise DimensionMismatch(f"beta of length {d.size} vs S of shape {S.shape}")
    return float(d @ S @ d)


def raw_covariance(X) -> np.ndarray:
    """Covariance with the 1/n convention, centering each column."""
    Xc = np.asarray(X, dtype=float) - np.mean(X, axis=0)
    return Xc.T @ Xc / Xc.shape[0]


def test_mse(y, y_hat) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.size == 0:
        raise EmptyTestSet("empty test set")
    if y.shape != y_hat.shape:
        raise DimensionMismatch(f"{y.shape} vs {y_hat.shape}")
    return float(np.mean((y - y_hat) ** 2))


test_mse.__test__ = False  # not a pytest test when imported into test modules


def support(beta, tol: float = NONZERO_TOL) -> np.ndarray:
    return np.abs(np.asarray(beta, dtype=float)) > tol


def support_rates(beta_true, beta_hat, tol: float = NONZERO_TOL) -> tuple[float, float]:
    """False-discovery and false-omission proportions.

    fp = (# selected that are truly zero) / (# selected), 0 if none selected;
    fn = (# unselected that are truly nonzero) / (# unselected), 0 if all
    selected.
    """
    bt = np.asarray(beta_true, dtype=float)
    bh = np.asarray(beta_hat, dtype=float)
    if bt.shape != bh.shape:
        raise DimensionMismatch(f"{bt.shape} vs {bh.shape}")
    truth = bt != 0
    sel = support(bh, tol)
    n_sel = int(sel.sum())
    n_unsel = sel.size - n_sel
    fp = float(np.sum(sel & ~truth)) / n_sel if n_sel else 0.0
    fn = float(np.sum(~sel & truth)) / n_unsel if n_unsel else 0.0
    return fp, fn


def evaluate(beta_true, beta_hat_raw, X_test, y_test, y_pred, S=None) -> EvalResult:
    """Score a raw-scale fit.  ``S`` defaults to the test-set covariance; pass
    e.g. the training covariance to score against that instead."""
    fp, fn = support_rates(beta_true, beta_hat_raw)
    if S is None:
        S = raw_covariance(X_test)
    return EvalResult(
        beta_mse(beta_true, beta_hat_raw, S),
        test_mse(y_test, y_pred),
        fp,
        fn,
    )


def irrepresentability(X, support_idx, sign_vec) -> float:
    """``|| X_N' X_S (X_S' X_S)^{-1} sign ||_inf`` for signal set S, noise N.

    Values below 1 mean the noise columns are irrepresentable by the signal
    columns.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(support_idx, dtype=int)
    N = np.setdiff1d(np.arange(X.shape[1]), S)
    s = np.asarray(sign_vec, dtype=float)
    if s.shape != (S.size,):
        raise DimensionMismatch("sign vector must match the support size")
    if N.size == 0:
        return 0.0
    XS = X[:, S]
    G = XS.T @ XS
    if np.linalg.matrix_rank(G) < S.size:
        raise SingularGram("X_S is not of full column rank")
    v = np.linalg.solve(G, s)
    return float(np.max(np.abs(X[:, N].T @ (XS @ v))))
