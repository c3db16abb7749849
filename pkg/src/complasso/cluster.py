"""Connected components of the covariance graph.

Components are found either by thresholding ``|S|`` directly or by cutting
an agglomerative-clustering dendrogram built on the dissimilarity
``1 - |S|``.  For single linkage the two coincide: cutting at height
``1 - tau`` gives the connected components of ``{|S_ij| > tau}``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .data import Covariance

LINKAGES = ("single", "average", "complete")
_LINKAGE_CODE = {"single": 0, "average": 1, "complete": 2}


class BadK(ValueError):
    pass


class TooFewSignals(ValueError):
    pass


def canonical_labels(labels) -> np.ndarray:
    """Relabel so component ids are 0..K-1 in order of smallest member."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first, kind="stable"), kind="stable")
    return order[inv.ravel()].astype(np.int64)


@dataclass(frozen=True)
class Partition:
    """Assignment of predictors to components ``0..K-1``.

    Ids are canonical: component ``k`` is the one whose smallest member
    index is the ``k``-th smallest.
    """

    assignment: np.ndarray
    tau: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "assignment", canonical_labels(self.assignment))

    @property
    def K(self) -> int:
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    @property
    def p(self) -> int:
        return self.assignment.shape[0]

    def members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignment == k) for k in range(self.K)]

    def blocks(self) -> set[frozenset]:
        return {frozenset(m.tolist()) for m in self.members()}

    def same(self, other: "Partition") -> bool:
        return np.array_equal(self.assignment, other.assignment)

    @classmethod
    def single_block(cls, p: int) -> "Partition":
        return cls(np.zeros(p, dtype=np.int64))

    @classmethod
    def from_blocks(cls, blocks, p: int) -> "Partition":
        labels = np.full(p, -1, dtype=np.int64)
        for k, b in enumerate(blocks):
            labels[np.asarray(list(b), dtype=int)] = k
        if (labels < 0).any():
            raise ValueError("blocks do not cover 0..p-1")
        return cls(labels)

    def to_dict(self) -> dict:
        return {"K": self.K, "assignment": self.assignment.tolist(), "tau": self.tau}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Partition":
        return cls(np.asarray(d["assignment"], dtype=np.int64), d.get("tau"))


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in scipy convention.

    Row ``m`` of ``merges`` is ``(a, b, height)``: leaves are ``0..p-1`` and
    the cluster created by merge ``m`` gets id ``p + m``.
    """

    merges: np.ndarray
    linkage: str
    p: int

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "b", "height"])
            for a, b, h in self.merges:
                w.writerow([int(a), int(b), format(float(h), ".17g")])

    def scipy_linkage(self) -> np.ndarray:
        """(p-1) x 4 array usable by ``scipy.cluster.hierarchy`` plotting."""
        sizes = np.ones(2 * self.p - 1)
        out = np.zeros((self.p - 1, 4))
        for m, (a, b, h) in enumerate(self.merges):
            sizes[self.p + m] = sizes[int(a)] + sizes[int(b)]
            out[m] = (min(a, b), max(a, b), h, sizes[self.p + m])
        return out


def threshold_components(cov: Covariance | np.ndarray, tau: float) -> Partition:
    """Connected components of the graph with edges ``|S_ij| > tau``."""
    S = cov.S if isinstance(cov, Covariance) else np.asarray(cov)
    A = np.abs(S) > tau
    np.fill_diagonal(A, False)
    _, labels = connected_components(csr_matrix(A), directed=False)
    return Partition(labels, tau=float(tau))


@numba.njit(cache=True)
def _row_min(D, active, i):
    p = D.shape[0]
    best = np.inf
    arg = -1
    for j in range(i + 1, p):
        if active[j] and D[i, j] < best:
            best = D[i, j]
            arg = j
    return best, arg


@numba.njit(cache=True)
def _agglomerate(D, method):
    """Lance-Williams agglomeration with per-row nearest-neighbour caches.

    Row ``i`` caches the minimum over columns ``j > i``; the global minimum
    is the first such row minimum, so ties resolve to the lexicographically
    smallest pair ``(i, j)``.
    """
    p = D.shape[0]
    D = D.copy()
    active = np.ones(p, dtype=np.bool_)
    size = np.ones(p)
    ident = np.arange(p)
    nnd = np.empty(p)
    nn = np.empty(p, dtype=np.int64)
    for i in range(p):
        nnd[i], nn[i] = _row_min(D, active, i)
    merges = np.empty((p - 1, 3))
    for m in range(p - 1):
        i = -1
        best = np.inf
        for r in range(p):
            if active[r] and nn[r] >= 0 and nnd[r] < best:
                best = nnd[r]
                i = r
        j = nn[i]
        merges[m, 0] = min(ident[i], ident[j])
        merges[m, 1] = max(ident[i], ident[j])
        merges[m, 2] = best
        ni = size[i]
        nj = size[j]
        active[j] = False
        for k in range(p):
            if not active[k] or k == i:
                continue
            if method == 0:
                v = min(D[i, k], D[j, k])
            elif method == 1:
                v = (ni * D[i, k] + nj * D[j, k]) / (ni + nj)
            else:
                v = max(D[i, k], D[j, k])
            D[i, k] = v
            D[k, i] = v
        size[i] = ni + nj
        ident[i] = p + m
        for r in range(p):
            if not active[r]:
                continue
            if r == i or nn[r] == i or nn[r] == j:
                nnd[r], nn[r] = _row_min(D, active, r)
            elif r < i:
                # merged distances never drop below the old row minimum
                if D[r, i] < nnd[r] or (D[r, i] == nnd[r] and i < nn[r]):
                    nnd[r] = D[r, i]
                    nn[r] = i
    return merges


def build_dendrogram(cov: Covariance | np.ndarray, linkage: str = "average") -> Dendrogram:
    if linkage not in _LINKAGE_CODE:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    S = cov.S if isinstance(cov, Covariance) else np.asarray(cov, dtype=float)
    p = S.shape[0]
    D = 1.0 - np.abs(S)
    D = np.maximum(D, 0.0)
    np.fill_diagonal(D, 0.0)
    if p == 1:
        return Dendrogram(np.zeros((0, 3)), linkage, 1)
    merges = _agglomerate(np.ascontiguousarray(D), _LINKAGE_CODE[linkage])
    return Dendrogram(merges, linkage, p)


def _apply_merges(dend: Dendrogram, n_merges: int) -> np.ndarray:
    p = dend.p
    parent = np.arange(2 * p - 1)
    for m in range(n_merges):
        a, b = int(dend.merges[m, 0]), int(dend.merges[m, 1])
        parent[a] = p + m
        parent[b] = p + m
    labels = np.empty(p, dtype=np.int64)
    for leaf in range(p):
        r = leaf
        while parent[r] != r:
            r = parent[r]
        labels[leaf] = r
    return labels


def cut_dendrogram(
    dend: Dendrogram, *, height: Optional[float] = None, k: Optional[int] = None
) -> Partition:
    """Cut at a height (keep merges with height <= h) or into ``k`` clusters.

    Exactly one of ``height`` and ``k`` must be given.  A height cut records
    ``tau = 1 - height``.
    """
    if (height is None) == (k is None):
        raise ValueError("give exactly one of height= or k=")
    if k is not None:
        if not 1 <= k <= dend.p:
            raise BadK(f"K={k} outside 1..{dend.p}")
        return Partition(_apply_merges(dend, dend.p - k))
    n_keep = int(np.searchsorted(dend.heights, height, side="right"))
    # heights from non-single linkages are monotone too, but guard anyway
    if dend.p > 1 and not np.all(np.diff(dend.heights) >= 0):
        n_keep = int(np.sum(dend.heights <= height))
    return Partition(_apply_merges(dend, n_keep), tau=1.0 - float(height))


def misclassification(C: Partition, T: Partition, signal_idx) -> float:
    """Fraction of signal pairs on which ``C`` and ``T`` disagree about
    co-membership."""
    idx = np.asarray(sorted(set(int(i) for i in signal_idx)), dtype=int)
    m = idx.size
    if m < 2:
        raise TooFewSignals(f"need at least 2 signal variables, got {m}")
    c = C.assignment[idx]
    t = T.assignment[idx]
    same_c = c[:, None] == c[None, :]
    same_t = t[:, None] == t[None, :]
    iu = np.triu_indices(m, 1)
    return float(np.mean(same_c[iu] != same_t[iu]))
