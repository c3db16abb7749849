"""Data ingestion, standardization, sample covariance and splitting."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Base class for ingestion and preprocessing errors."""


class ConstantColumn(DataError):
    def __init__(self, j: int):
        super().__init__(f"column {j} has zero variance")
        self.j = j


class ParseError(DataError):
    def __init__(self, row: int, col: int, text: str = ""):
        super().__init__(f"cannot parse entry at row {row}, column {col}: {text!r}")
        self.row = row
        self.col = col


class MissingColumn(DataError):
    def __init__(self, name: str):
        super().__init__(f"response column {name!r} not found")
        self.name = name


class RaggedRow(DataError):
    def __init__(self, row: int):
        super().__init__(f"row {row} has the wrong number of fields")
        self.row = row


class BadFractions(DataError):
    pass


class DimensionMismatch(DataError):
    pass


@dataclass(frozen=True)
class RawDataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: Optional[list[str]] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DimensionMismatch("X must be two-dimensional")
        n, p = X.shape
        if n < 2 or p < 1:
            raise DimensionMismatch(f"need n >= 2 and p >= 1, got {X.shape}")
        if y.shape[0] != n:
            raise DimensionMismatch(f"y has {y.shape[0]} rows, X has {n}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("non-finite entries in X or y")
        if self.feature_names is not None and len(self.feature_names) != p:
            raise DimensionMismatch("feature_names must have length p")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "RawDataset":
        rows = np.asarray(rows)
        return RawDataset(self.X[rows], self.y[rows], self.feature_names)


@dataclass(frozen=True)
class Standardization:
    """Column means/scales and response mean of a training set."""

    col_means: np.ndarray
    col_scales: np.ndarray
    y_mean: float

    def transform_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.col_means.shape[0]:
            raise DimensionMismatch(
                f"expected {self.col_means.shape[0]} columns, got shape {X.shape}"
            )
        return (X - self.col_means) / self.col_scales

    def transform_y(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) - self.y_mean

    def raw_coef(self, beta) -> tuple[np.ndarray, float]:
        """Map standardized-scale coefficients to (raw slope, intercept)."""
        slope = np.asarray(beta, dtype=float) / self.col_scales
        return slope, float(self.y_mean - self.col_means @ slope)

    def to_dict(self) -> dict:
        return {
            "col_means": self.col_means.tolist(),
            "col_scales": self.col_scales.tolist(),
            "y_mean": float(self.y_mean),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardization":
        return cls(
            np.asarray(d["col_means"], dtype=float),
            np.asarray(d["col_scales"], dtype=float),
            float(d["y_mean"]),
        )


@dataclass(frozen=True)
class Dataset:
    """Standardized design: centered columns with (1/n) sum of squares 1,
    centered response.  ``transform`` maps raw data onto this scale."""

    X: np.ndarray
    y: np.ndarray
    transform: Standardization
    feature_names: Optional[list[str]] = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def col_means(self) -> np.ndarray:
        return self.transform.col_means

    @property
    def col_scales(self) -> np.ndarray:
        return self.transform.col_scales

    @property
    def y_mean(self) -> float:
        return self.transform.y_mean

    def raw(self) -> RawDataset:
        X = self.X * self.col_scales + self.col_means
        return RawDataset(X, self.y + self.y_mean, self.feature_names)

    def predict_raw(self, beta) -> np.ndarray:
        return self.X @ np.asarray(beta, dtype=float) + self.y_mean

    def to_json(self) -> str:
        doc = {"n": self.n, "p": self.p}
        doc.update(self.transform.to_dict())
        return json.dumps(doc)


@dataclass(frozen=True)
class Covariance:
    S: np.ndarray

    @property
    def p(self) -> int:
        return self.S.shape[0]

    def check(self, atol: float = 1e-8) -> None:
        S = self.S
        if not np.allclose(S, S.T, rtol=0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(S).min() < -atol:
            raise ValueError("covariance is not positive semidefinite")


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    validation: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    test: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def to_dict(self) -> dict:
        return {
            "train": self.train.tolist(),
            "validation": self.validation.tolist(),
            "test": self.test.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Split":
        return cls(*(np.asarray(d[k], dtype=int) for k in ("train", "validation", "test")))


def fit_standardization(raw: RawDataset) -> Standardization:
    X, y = raw.X, raw.y
    means = X.mean(axis=0)
    scales = np.sqrt(((X - means) ** 2).mean(axis=0))
    # relative test: a column of identical large values leaves only round-off
    tiny = 1e-12 * np.maximum(1.0, np.abs(means))
    bad = np.flatnonzero(scales <= tiny)
    if bad.size:
        raise ConstantColumn(int(bad[0]))
    return Standardization(means, scales, float(y.mean()))


def standardize(raw: RawDataset, transform: Optional[Standardization] = None) -> Dataset:
    """Center and scale ``raw``.

    With ``transform`` given (e.g. training-set statistics) the stored
    statistics are applied instead of being re-estimated.
    """
    if transform is None:
        transform = fit_standardization(raw)
    X = transform.transform_X(raw.X)
    y = transform.transform_y(raw.y)
    return Dataset(X, y, transform, raw.feature_names)


def sample_covariance(d: Dataset) -> Covariance:
    S = d.X.T @ d.X / d.n
    S = 0.5 * (S + S.T)
    return Covariance(S)


def load_csv(path, response_column, header: Optional[bool] = None) -> RawDataset:
    """Read a comma-separated numeric table.

    ``response_column`` is a header name, or an integer column index when the
    file has no header.  ``header=None`` sniffs: the first row is a header if
    any of its fields fails to parse as a float.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError(0, 0, "")
    if header is None:
        header = not all(_is_float(t) for t in rows[0])
    names = [t.strip() for t in rows[0]] if header else None
    body = rows[1:] if header else rows
    width = len(rows[0])

    if isinstance(response_column, str) and names is not None:
        if response_column not in names:
            raise MissingColumn(response_column)
        ycol = names.index(response_column)
    else:
        try:
            ycol = int(response_column)
        except (TypeError, ValueError):
            raise MissingColumn(str(response_column)) from None
        if not -width <= ycol < width:
            raise MissingColumn(str(response_column))
        ycol %= width

    data = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width:
            raise RaggedRow(i + int(header))
        for j, tok in enumerate(row):
            try:
                v = float(tok)
            except ValueError:
                raise ParseError(i + int(header), j, tok) from None
            if not np.isfinite(v):
                raise ParseError(i + int(header), j, tok)
            data[i, j] = v
    keep = [j for j in range(width) if j != ycol]
    feature_names = [names[j] for j in keep] if names is not None else None
    return RawDataset(data[:, keep], data[:, ycol], feature_names)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def split_indices(n: int, fractions: Sequence[float], seed: int) -> Split:
    """Seeded disjoint train/validation/test split of ``range(n)``.

    ``fractions`` holds up to three entries, either integer counts or
    fractions of ``n``.  Counts must sum to at most ``n``.
    """
    fr = list(fractions) + [0] * (3 - len(fractions))
    if len(fr) != 3 or any(f < 0 for f in fr):
        raise BadFractions(f"bad fractions {fractions!r}")
    if all(float(f).is_integer() for f in fr) and sum(fr) > 1:
        sizes = [int(f) for f in fr]
    else:
        if sum(fr) > 1 + 1e-12:
            raise BadFractions(f"fractions {fractions!r} sum to more than 1")
        sizes = [max(1, int(np.floor(f * n + 1e-9))) if f > 0 else 0 for f in fr]
    if sum(sizes) > n:
        raise BadFractions(f"sizes {sizes} exceed n={n}")
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return Split(
        np.sort(perm[:a]), np.sort(perm[a:b]), np.sort(perm[b : b + sizes[2]])
    )
