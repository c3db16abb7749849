"""Elastic-net coordinate descent, non-negative least squares, ridge.

The elastic net minimizes the unnormalized criterion

    0.5 * ||y - X b||^2 + lam * (alpha * ||b||_1 + (1 - alpha) / 2 * ||b||^2)

with no 1/n factor on the loss.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

ALPHA_FLOOR = 0.001
TOL = 1e-7
MAX_ITER = 100_000
N_LAMBDA = 100
POLISH_MAX_ACTIVE = 256


class MaxIterExceeded(RuntimeWarning):
    pass


@dataclass(frozen=True)
class EnetConfig:
    alpha: float
    lambda_grid: np.ndarray
    tol: float = TOL
    max_iter: int = MAX_ITER

    def __post_init__(self):
        grid = np.atleast_1d(np.asarray(self.lambda_grid, dtype=float))
        object.__setattr__(self, "lambda_grid", grid)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} outside [0, 1]")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if grid.size > 1 and not np.all(np.diff(grid) < 0):
            raise ValueError("lambda grid must be strictly descending")
        if np.any(grid < 0):
            raise ValueError("lambda values must be nonnegative")

    @property
    def lambda_prime(self) -> np.ndarray:
        return self.lambda_grid * (1.0 - self.alpha) / 2.0


@dataclass(frozen=True)
class EnetPath:
    betas: np.ndarray  # (n_lambda, p)
    grid: np.ndarray
    alpha: float
    n_iters: np.ndarray
    converged: np.ndarray

    def to_csv(self, path, feature_names=None) -> None:
        p = self.betas.shape[1]
        names = feature_names or [str(j) for j in range(p)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "feature", "coefficient"])
            for lam, row in zip(self.grid, self.betas):
                for name, b in zip(names, row):
                    w.writerow([format(lam, ".17g"), name, format(b, ".17g")])


@dataclass(frozen=True)
class NnlsResult:
    c: np.ndarray
    kkt_residual: float
    n_iter: int = 0


@dataclass(frozen=True)
class LstsqResult:
    beta: np.ndarray
    singular: bool = False


def lambda_max(X, y, alpha: float) -> float:
    """Smallest penalty at which the elastic-net solution is all zero."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(X.T @ y)) / max(alpha, ALPHA_FLOOR))


def lambda_grid(
    X, y, alpha: float, n_lambda: int = N_LAMBDA, eps: Optional[float] = None
) -> np.ndarray:
    """Log-spaced descending grid from ``lambda_max`` to ``eps * lambda_max``.

    ``eps`` defaults to 1e-3, or 1e-2 when p > n.  A zero response gives the
    single-point grid ``[0]``.
    """
    n, p = np.shape(X)
    if eps is None:
        eps = 1e-2 if p > n else 1e-3
    lmax = lambda_max(X, y, alpha)
    if lmax <= 0:
        return np.zeros(1)
    return lmax * np.logspace(0.0, np.log10(eps), n_lambda)


def enet_objective(X, y, beta, lam: float, alpha: float) -> float:
    r = y - X @ beta
    pen = alpha * np.abs(beta).sum() + 0.5 * (1 - alpha) * (beta @ beta)
    return 0.5 * float(r @ r) + lam * pen


@numba.njit(cache=True)
def _soft(z, t):
    # margin keeps the solution exactly zero at lambda_max despite round-off
    if abs(z) <= t * (1.0 + 1e-12):
        return 0.0
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@numba.njit(cache=True)
def _sweep(X, r, beta, xsq, l1, l2, idx):
    """One pass of coordinate updates over ``idx``; returns the largest
    absolute coefficient change.  ``r`` is the residual, updated in place."""
    n = X.shape[0]
    dmax = 0.0
    for jj in range(idx.shape[0]):
        j = idx[jj]
        if xsq[j] == 0.0:
            continue
        bj = beta[j]
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        new = _soft(g + xsq[j] * bj, l1) / (xsq[j] + l2)
        d = new - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= d * X[i, j]
            beta[j] = new
            if abs(d) > dmax:
                dmax = abs(d)
    return dmax


@numba.njit(cache=True)
def _objective(X, y, beta, l1, l2):
    r = y - X @ beta
    return 0.5 * (r @ r) + l1 * np.abs(beta).sum() + 0.5 * l2 * (beta @ beta)


@numba.njit(cache=True)
def _polish(X, y, beta, l1, l2, max_active):
    """Solve the stationarity equations exactly on the current active set
    with signs held fixed.  Accepted only if the signs survive, the zero
    coordinates still satisfy their subgradient bound and the objective
    does not increase; returns whether ``beta`` was replaced."""
    A = np.flatnonzero(beta)
    m = A.shape[0]
    if m == 0 or m > max_active:
        return False
    XA = np.ascontiguousarray(X[:, A])
    G = XA.T @ XA
    for q in range(m):
        G[q, q] += l2
    s = np.sign(beta[A])
    rhs = XA.T @ y - l1 * s
    try:
        b = np.linalg.solve(G, rhs)
    except Exception:  # noqa: BLE001 - singular system, keep the CD iterate
        return False
    for q in range(m):
        if np.sign(b[q]) != s[q]:
            return False
    cand = np.zeros_like(beta)
    cand[A] = b
    g = X.T @ (y - X @ cand)
    slack = l1 + 1e-9 * (1.0 + np.abs(g).max())
    for j in range(beta.shape[0]):
        if cand[j] == 0.0 and abs(g[j]) > slack:
            return False
    f_old = _objective(X, y, beta, l1, l2)
    if _objective(X, y, cand, l1, l2) > f_old + 1e-12 * abs(f_old):
        return False
    beta[:] = cand
    return True


@numba.njit(cache=True)
def _cd_path(X, y, lambdas, alpha, tol, max_iter, beta0):
    n, p = X.shape
    L = lambdas.shape[0]
    xsq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        xsq[j] = s
    beta = beta0.copy()
    r = y - X @ beta
    betas = np.zeros((L, p))
    iters = np.zeros(L, dtype=np.int64)
    conv = np.zeros(L, dtype=np.bool_)
    full = np.arange(p)
    for l in range(L):
        l1 = lambdas[l] * alpha
        l2 = lambdas[l] * (1.0 - alpha)
        it = 0
        done = False
        while it < max_iter:
            dmax = _sweep(X, r, beta, xsq, l1, l2, full)
            it += 1
            if dmax < tol:
                done = True
                break
            active = np.flatnonzero(beta != 0.0)
            # slow contraction (near-collinear columns) is cut short by
            # exact solves at geometrically spaced sweep counts
            next_polish = 10
            inner = 0
            while it < max_iter:
                dmax = _sweep(X, r, beta, xsq, l1, l2, active)
                it += 1
                inner += 1
                if dmax < tol:
                    break
                if inner == next_polish:
                    next_polish *= 2
                    if _polish(X, y, beta, l1, l2, POLISH_MAX_ACTIVE):
                        r = y - X @ beta
        if done:
            _polish(X, y, beta, l1, l2, POLISH_MAX_ACTIVE)
        # exact residual refresh against drift
        r = y - X @ beta
        betas[l] = beta
        iters[l] = it
        conv[l] = done
    return betas, iters, conv


def enet_path(X, y, cfg: EnetConfig, beta0: Optional[np.ndarray] = None) -> EnetPath:
    """Warm-started coordinate descent along ``cfg.lambda_grid``.

    Points that hit ``max_iter`` are returned with ``converged=False`` and a
    :class:`MaxIterExceeded` warning.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    p = X.shape[1]
    b0 = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    betas, iters, conv = _cd_path(
        X, y, cfg.lambda_grid, float(cfg.alpha), float(cfg.tol), int(cfg.max_iter), b0
    )
    if not conv.all():
        bad = cfg.lambda_grid[~conv]
        warnings.warn(
            f"coordinate descent hit max_iter at lambda={bad[0]:.6g} "
            f"({bad.size} grid points)",
            MaxIterExceeded,
            stacklevel=2,
        )
    return EnetPath(betas, cfg.lambda_grid.copy(), float(cfg.alpha), iters, conv)


def enet_kkt_violation(X, y, beta, lam: float, alpha: float) -> float:
    """Largest violation of the elastic-net stationarity conditions."""
    g = X.T @ (y - X @ beta)
    nz = beta != 0
    viol = np.zeros_like(g)
    viol[~nz] = np.maximum(np.abs(g[~nz]) - lam * alpha, 0.0)
    viol[nz] = np.abs(
        g[nz] - lam * alpha * np.sign(beta[nz]) - lam * (1 - alpha) * beta[nz]
    )
    return float(viol.max()) if viol.size else 0.0


def kkt_tolerance(X, y) -> float:
    return 1e-6 * (1.0 + float(np.max(np.abs(X.T @ y), initial=0.0)))


def augmented_lasso_problem(X, y, lam: float, alpha: float):
    """Recast the naive elastic net at ``(lam, alpha)`` as a lasso.

    Returns ``(X_aug, y_aug, lam_aug, scale)``: the lasso solution ``b_aug``
    of ``0.5||y_aug - X_aug b||^2 + lam_aug ||b||_1`` maps back through
    ``beta = b_aug / scale``.  With the half-squared-error loss the ridge
    rows must be ``sqrt(2 * lam')`` with ``lam' = lam (1 - alpha) / 2``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    gamma = lam * (1.0 - alpha)
    scale = np.sqrt(1.0 + gamma)
    X_aug = np.vstack([X, np.sqrt(gamma) * np.eye(p)]) / scale
    y_aug = np.concatenate([np.asarray(y, dtype=float), np.zeros(p)])
    return X_aug, y_aug, lam * alpha / scale, scale


@numba.njit(cache=True)
def _nnls_core(A, y, tol, max_outer, init):
    n, K = A.shape
    x = np.zeros(K)
    passive = np.zeros(K, dtype=np.bool_)
    # warm start: accept the initial passive set only if its unconstrained
    # fit is strictly positive, which keeps the Lawson-Hanson invariant
    P0 = np.flatnonzero(init)
    if P0.shape[0] > 0:
        sol = np.linalg.lstsq(A[:, P0], y)[0]
        if (sol > 0.0).all():
            for q in range(P0.shape[0]):
                x[P0[q]] = sol[q]
                passive[P0[q]] = True
    w = A.T @ (y - A @ x)
    it = 0
    while it < max_outer:
        j = -1
        best = tol
        for k in range(K):
            if not passive[k] and w[k] > best:
                best = w[k]
                j = k
        if j < 0:
            break
        passive[j] = True
        it += 1
        while True:
            P = np.flatnonzero(passive)
            s = np.zeros(K)
            sol = np.linalg.lstsq(A[:, P], y)[0]
            for q in range(P.shape[0]):
                s[P[q]] = sol[q]
            feasible = True
            for q in range(P.shape[0]):
                if s[P[q]] <= 0.0:
                    feasible = False
            if feasible:
                x = s
                break
            step = np.inf
            for q in range(P.shape[0]):
                k = P[q]
                if s[k] <= 0.0:
                    t = x[k] / (x[k] - s[k])
                    if t < step:
                        step = t
            for k in range(K):
                x[k] = x[k] + step * (s[k] - x[k])
                if passive[k] and x[k] <= 1e-15:
                    passive[k] = False
                    x[k] = 0.0
            if not passive.any():
                break
        w = A.T @ (y - A @ x)
    return x, it


def nnls(A, y) -> NnlsResult:
    """Lawson-Hanson active-set non-negative least squares.

    Columns with norm below 1e-12 get weight 0 and are left out of the
    solve.  ``kkt_residual`` is the largest violation of the optimality
    conditions (g >= 0, g = 0 on the support, g = A'(Ac - y)).
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    K = A.shape[1]
    c = np.zeros(K)
    keep = np.flatnonzero(np.linalg.norm(A, axis=0) >= 1e-12)
    n_iter = 0
    if keep.size:
        Ak = np.ascontiguousarray(A[:, keep])
        tol = 1e-10 * (1.0 + float(np.max(np.abs(Ak.T @ y))))
        ck, n_iter = _nnls_core(
            Ak, y, tol, 3 * keep.size + 10, np.zeros(keep.size, dtype=np.bool_)
        )
        c[keep] = ck
    return NnlsResult(c, nnls_kkt_residual(A, y, c), int(n_iter))


@numba.njit(cache=True)
def _nnls_path(A, y):
    L, n, K = A.shape
    out = np.zeros((L, K))
    prev = np.zeros(K, dtype=np.bool_)
    for l in range(L):
        keep = np.zeros(K, dtype=np.bool_)
        for k in range(K):
            s = 0.0
            for i in range(n):
                s += A[l, i, k] * A[l, i, k]
            keep[k] = np.sqrt(s) >= 1e-12
        idx = np.flatnonzero(keep)
        if idx.shape[0] == 0:
            prev[:] = False
            continue
        Ak = np.ascontiguousarray(A[l][:, idx])
        tol = 1e-10 * (1.0 + np.abs(Ak.T @ y).max())
        ck, _ = _nnls_core(Ak, y, tol, 3 * idx.shape[0] + 10, prev[idx])
        prev[:] = False
        for q in range(idx.shape[0]):
            out[l, idx[q]] = ck[q]
            prev[idx[q]] = ck[q] > 0.0
    return out


def nnls_path(A, y) -> np.ndarray:
    """:func:`nnls` over a stack ``A`` of shape (L, n, K), each problem
    warm-started from the support of the one before."""
    A = np.ascontiguousarray(A, dtype=float)
    return _nnls_path(A, np.ascontiguousarray(y, dtype=float))


def nnls_kkt_residual(A, y, c) -> float:
    g = A.T @ (A @ c - y)
    viol = np.maximum(-g, 0.0)
    on = c > 0
    viol[on] = np.abs(g[on])
    return float(viol.max()) if viol.size else 0.0


def nnls_kkt_tolerance(A, y) -> float:
    return 1e-10 * (1.0 + float(np.max(np.abs(np.asarray(A).T @ y), initial=0.0)))


def ridge(X, y, lambda2: float) -> LstsqResult:
    """Solve ``(X'X + lambda2 I) beta = X'y``; min-norm fallback when singular."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]
    G = X.T @ X + lambda2 * np.eye(p)
    b = X.T @ y
    try:
        cond = np.linalg.cond(G)
    except np.linalg.LinAlgError:
        cond = np.inf
    if cond < 1e12:
        return LstsqResult(np.linalg.solve(G, b), False)
    return LstsqResult(np.linalg.pinv(G, rcond=1e-12, hermitian=True) @ b, True)


def least_squares(X, y) -> LstsqResult:
    X = np.asarray(X, dtype=float)
    if X.shape[1] == 0:
        return LstsqResult(np.zeros(0), False)
    sol, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    return LstsqResult(sol, bool(rank < X.shape[1]))


def ridge_path(X, y, lambdas) -> np.ndarray:
    """Ridge solutions for every value in ``lambdas`` via one SVD."""
    X = np.asarray(X, dtype=float)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    uy = U.T @ y
    lambdas = np.asarray(lambdas, dtype=float)
    d = s / (s[None, :] ** 2 + lambdas[:, None])
    return (d * uy) @ Vt
