"""Seeded generators for the simulated benchmark designs.

Designs (0-based feature indices):

``orthogonal``  p=8, two blocks of 4 with within-block correlation 0.8;
                block 2 is residualized on block 1 inside each of the
                train/validation/test subsets so cross-block sample
                correlations are exactly 0.
``ex1``         p=8, AR(1) correlation 0.5**|i-j|.
``ex2a/ex2b``   p=8, x_i = Z_1 + e_i (i < 4), Z_2 + e_i otherwise, with
                Var Z = 2 and Var e = 0.5.  ``ex2a`` puts signal in both
                blocks, ``ex2b`` only in the first.
``ex3``         p=40, equicorrelation 0.5 from a shared unit-variance factor
                plus unit-variance idiosyncratic noise.
``ex4``         p=40, three groups of five near-copies of a latent factor
                (noise variance 0.01) plus 25 independent noise features.
``toy``         two blocks of 4 with within-block correlation 0.8 and
                population cross-correlation 0 (not forced in the sample),
                all signal in block 1; used for coefficient-path plots.

Every design draws from ``numpy.random.Philox`` keyed by ``SimSpec.seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace, field

import numpy as np

from .cluster import Partition
from .data import RawDataset, Split

NAMES = ("orthogonal", "ex1", "ex2a", "ex2b", "ex3", "ex4", "toy")


class UnknownSpec(ValueError):
    pass


class SingularA(ValueError):
    pass


_DEFAULTS = {
    "orthogonal": dict(sizes=(20, 20, 200), p=8, sigma=3.0,
                       beta=(3, 1.5, 0, 0, 2, 3, 0, 0)),
    "ex1": dict(sizes=(20, 20, 200), p=8, sigma=3.0,
                beta=(3, 1.5, 0, 0, 2, 0, 0, 0)),
    "ex2a": dict(sizes=(20, 20, 200), p=8, sigma=5.0,
                 beta=(3, 1.5, 0, 0, 2, 3, 0, 0)),
    "ex2b": dict(sizes=(20, 20, 200), p=8, sigma=5.0,
                 beta=(3, 1.5, 2, 3, 0, 0, 0, 0)),
    "ex3": dict(sizes=(100, 100, 400), p=40, sigma=15.0,
                beta=(0,) * 10 + (2,) * 10 + (0,) * 10 + (2,) * 10),
    "ex4": dict(sizes=(50, 50, 200), p=40, sigma=15.0,
                beta=(3,) * 15 + (0,) * 25),
    "toy": dict(sizes=(100, 0, 0), p=8, sigma=3.0,
                beta=(3, 1.5, 2, 3, 0, 0, 0, 0)),
}


@dataclass(frozen=True)
class SimSpec:
    name: str
    n_train: int
    n_val: int
    n_test: int
    p: int
    sigma: float
    beta_true: tuple
    seed: int = 0

    @classmethod
    def named(cls, name: str, seed: int = 0, **overrides) -> "SimSpec":
        if name not in _DEFAULTS:
            raise UnknownSpec(f"unknown design {name!r}; expected one of {NAMES}")
        d = _DEFAULTS[name]
        spec = cls(name, *d["sizes"], d["p"], d["sigma"],
                   tuple(float(b) for b in d["beta"]), seed)
        return replace(spec, **overrides) if overrides else spec

    @property
    def n(self) -> int:
        return self.n_train + self.n_val + self.n_test

    def replicate(self, r: int) -> "SimSpec":
        return replace(self, seed=self.seed + r)


def true_partition(name: str, p: int = 0) -> Partition:
    if name in ("orthogonal", "ex2a", "ex2b", "toy"):
        return Partition(np.repeat([0, 1], 4))
    if name in ("ex1", "ex3"):
        return Partition.single_block(p or _DEFAULTS[name]["p"])
    if name == "ex4":
        return Partition(np.concatenate([np.repeat([0, 1, 2], 5), np.arange(3, 28)]))
    raise UnknownSpec(name)


def population_covariance(name: str) -> np.ndarray:
    """Design covariance of the predictors (before any sample orthogonalization)."""
    if name in ("orthogonal", "toy"):
        B = np.full((4, 4), 0.8) + 0.2 * np.eye(4)
        return np.kron(np.eye(2), B)
    if name == "ex1":
        idx = np.arange(8)
        return 0.5 ** np.abs(idx[:, None] - idx[None, :])
    if name in ("ex2a", "ex2b"):
        B = np.full((4, 4), 2.0) + 0.5 * np.eye(4)
        return np.kron(np.eye(2), B)
    if name == "ex3":
        return np.ones((40, 40)) + np.eye(40)
    if name == "ex4":
        S = np.eye(40)
        B = np.ones((5, 5)) + 0.01 * np.eye(5)
        for g in range(3):
            S[5 * g:5 * g + 5, 5 * g:5 * g + 5] = B
        return S
    raise UnknownSpec(name)


def _draw_X(name: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if name in ("orthogonal", "toy"):
        # equicorrelated blocks: x = sqrt(.8) z + sqrt(.2) e
        z = rng.standard_normal((n, 2))
        e = rng.standard_normal((n, 8))
        return np.sqrt(0.8) * np.repeat(z, 4, axis=1) + np.sqrt(0.2) * e
    if name == "ex1":
        L = np.linalg.cholesky(population_covariance("ex1"))
        return rng.standard_normal((n, 8)) @ L.T
    if name in ("ex2a", "ex2b"):
        z = np.sqrt(2.0) * rng.standard_normal((n, 2))
        e = np.sqrt(0.5) * rng.standard_normal((n, 8))
        return np.repeat(z, 4, axis=1) + e
    if name == "ex3":
        z = rng.standard_normal((n, 1))
        return z + rng.standard_normal((n, 40))
    if name == "ex4":
        z = rng.standard_normal((n, 3))
        X = rng.standard_normal((n, 40))
        X[:, :15] = np.repeat(z, 5, axis=1) + 0.1 * X[:, :15]
        return X
    raise UnknownSpec(name)


def _orthogonalize_blocks(X: np.ndarray) -> np.ndarray:
    """Residualize block-2 columns on block 1 so the sample cross-covariance
    vanishes, then restore each block-2 column's sample scale."""
    X = X.copy()
    mu = X.mean(axis=0)
    Xc = X - mu
    B1, B2 = Xc[:, :4], Xc[:, 4:]
    coef, *_ = np.linalg.lstsq(B1, B2, rcond=None)
    R = B2 - B1 @ coef
    # a second pass removes round-off left by the first
    coef, *_ = np.linalg.lstsq(B1, R, rcond=None)
    R = R - B1 @ coef
    R *= B2.std(axis=0) / R.std(axis=0)
    X[:, 4:] = R + mu[4:]
    return X


def generate(spec: SimSpec):
    """Draw one replicate.

    Returns ``(raw, split, beta_true, true_partition)``; rows are laid out
    train, then validation, then test.
    """
    if spec.name not in _DEFAULTS:
        raise UnknownSpec(spec.name)
    rng = np.random.Generator(np.random.Philox(spec.seed))
    beta = np.asarray(spec.beta_true, dtype=float)
    if beta.size != spec.p:
        raise ValueError("beta_true must have length p")
    sizes = (spec.n_train, spec.n_val, spec.n_test)
    parts = []
    for m in sizes:
        if m == 0:
            continue
        X = _draw_X(spec.name, m, rng)[:, : spec.p]
        if spec.name == "orthogonal":
            X = _orthogonalize_blocks(X)
        parts.append(X)
    X = np.vstack(parts)
    y = X @ beta + spec.sigma * rng.standard_normal(X.shape[0])
    bounds = np.cumsum((0,) + sizes)
    split = Split(*(np.arange(bounds[i], bounds[i + 1]) for i in range(3)))
    names = [f"x{j + 1}" for j in range(spec.p)]
    return RawDataset(X, y, names), split, beta, true_partition(spec.name, spec.p)


def empirical_snr(spec: SimSpec, n_reps: int, seed: int | None = None) -> float:
    """Monte Carlo mean of ``Var(X beta) / sigma^2`` across replicates."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    base = spec if seed is None else replace(spec, seed=seed)
    beta = np.asarray(spec.beta_true, dtype=float)
    vals = []
    for r in range(n_reps):
        raw, *_ = generate(base.replicate(r))
        vals.append(np.var(raw.X @ beta) / spec.sigma ** 2)
    return float(np.mean(vals))


def smw_check(A_blocks, rho: float, p: int | None = None) -> tuple[float, float]:
    """Check the rank-one inverse update for ``S = A + rho * e e'``.

    Returns ``(residual, bias_norm)``: the infinity-norm distance between
    ``inv(S)`` and the Sherman-Morrison-Woodbury expression, and the
    infinity norm of its correction term (the error of using ``inv(A)``).
    """
    from scipy.linalg import block_diag

    A = block_diag(*[np.atleast_2d(np.asarray(b, dtype=float)) for b in A_blocks])
    if p is not None and A.shape[0] != p:
        raise ValueError(f"blocks give size {A.shape[0]}, expected {p}")
    for b in A_blocks:
        b = np.atleast_2d(b)
        if np.linalg.eigvalsh(0.5 * (b + b.T)).min() <= 0:
            raise SingularA("every block must be positive definite")
    e = np.ones(A.shape[0])
    Ainv = np.linalg.inv(A)
    Ae = Ainv @ e
    correction = rho * np.outer(Ae, Ae) / (1.0 + rho * e @ Ae)
    S = A + rho * np.outer(e, e)
    resid = np.linalg.inv(S) - (Ainv - correction)
    return float(np.linalg.norm(resid, np.inf)), float(np.linalg.norm(correction, np.inf))


def marker_design(n: int, p: int, seed: int = 0, block: int = 20, rho: float = 0.7,
                  n_signal: int = 40, sigma: float = 1.0) -> RawDataset:
    """Synthetic 0/1 marker matrix shaped like a genotype panel.

    Consecutive runs of ``block`` markers share a latent Gaussian (linkage
    blocks), each marker thresholds its own noisy copy at a random allele
    frequency.  ``n_signal`` randomly placed markers carry N(0, 1) effects.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n_blocks = -(-p // block)
    z = rng.standard_normal((n, n_blocks))
    latent = np.sqrt(rho) * np.repeat(z, block, axis=1)[:, :p]
    latent += np.sqrt(1 - rho) * rng.standard_normal((n, p))
    cut = rng.uniform(-1.0, 1.0, size=p)
    X = (latent > cut).astype(float)
    # a marker fixed in this sample carries no information; flip one entry
    for j in np.flatnonzero(X.std(axis=0) == 0):
        X[rng.integers(n), j] = 1.0 - X[0, j]
    beta = np.zeros(p)
    beta[rng.choice(p, size=min(n_signal, p), replace=False)] = rng.standard_normal(min(n_signal, p))
    signal = X @ beta
    y = signal + sigma * np.std(signal) * rng.standard_normal(n)
    return RawDataset(X, y, [f"m{j + 1}" for j in range(p)])
