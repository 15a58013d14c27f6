"""Lower-tail dependence: empirical estimation, dissimilarities, constrained
complete-linkage clustering and the Student-t copula coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .copula import Family, psi_from_gamma
from .distributions import student_t_cdf
from .errors import DataError, DomainError
from .mcmc import SampleStore, Stats, summarize_draws

__all__ = [
    "DissimilarityMatrix",
    "ClusterPartition",
    "Merge",
    "TailSummary",
    "empirical_copula",
    "empirical_lower_tail",
    "dissimilarity_matrix",
    "complete_linkage",
    "complete_linkage_cluster",
    "t_copula_lower_tail",
    "posterior_tail_summary",
]


def empirical_copula(U, u: float, v: float) -> float:
    """Share of rows with ``U[:, 0] <= u`` and ``U[:, 1] <= v``."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != 2:
        raise DataError("empirical copula needs an n x 2 array")
    n = U.shape[0]
    if n == 0:
        raise DataError("empirical copula of an empty sample")
    return np.count_nonzero((U[:, 0] <= u) & (U[:, 1] <= v)) / n


def _tail_from_count(count, n):
    # C_n(q, q) / q = (count / n) / (sqrt(n) / n) = count / sqrt(n)
    return np.minimum(count / math.sqrt(n), 1.0)


def empirical_lower_tail(U) -> float:
    """``C_n(q, q) / q`` with ``q = sqrt(n)/n``, clamped to [0, 1].

    Rows with a missing value in either column are dropped first.  The
    denominator is ``q`` itself, not the empirical marginal mass at ``q``, so a
    comonotone rank sample gives exactly 1 only when ``n`` is a perfect square;
    otherwise ``floor((n + 1) / sqrt(n)) / sqrt(n)``.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != 2:
        raise DataError("lower-tail estimator needs an n x 2 array")
    U = U[~np.isnan(U).any(axis=1)]
    n = U.shape[0]
    if n < 2:
        raise DataError(f"lower-tail estimator needs n >= 2 complete rows, got {n}")
    q = math.sqrt(n) / n
    count = np.count_nonzero((U[:, 0] <= q) & (U[:, 1] <= q))
    return float(_tail_from_count(count, n))


@dataclass
class DissimilarityMatrix:
    values: np.ndarray
    labels: list

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        k = v.shape[0]
        if v.shape != (k, k):
            raise DataError(f"dissimilarity matrix must be square, got {v.shape}")
        if len(self.labels) != k:
            raise DataError(f"{len(self.labels)} labels for a {k} x {k} matrix")
        if not np.array_equal(v, v.T):
            raise DataError("dissimilarity matrix must be symmetric")
        if np.any(np.diag(v) != 0):
            raise DataError("dissimilarity matrix must have a zero diagonal")
        if np.any((v < 0) | (v > 1)) or np.any(np.isnan(v)):
            raise DataError("dissimilarities must lie in [0, 1]")
        self.values = v
        self.labels = list(self.labels)

    def __len__(self):
        return len(self.labels)


def dissimilarity_matrix(pseudo, labels=None) -> DissimilarityMatrix:
    """``1 - lambda_L`` for every pair of columns of an ``n x K`` pseudo-sample."""
    X = np.asarray(pseudo, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DataError("need at least two columns to compare")
    k = X.shape[1]
    labels = list(labels) if labels is not None else [f"V{j + 1}" for j in range(k)]
    lam = np.ones((k, k))
    if not np.isnan(X).any():
        n = X.shape[0]
        if n < 2:
            raise DataError("need at least two rows")
        q = math.sqrt(n) / n
        low = (X <= q).astype(float)
        counts = low.T @ low
        lam = _tail_from_count(counts, n)
    else:
        for i in range(k):
            for j in range(i + 1, k):
                lam[i, j] = lam[j, i] = empirical_lower_tail(X[:, [i, j]])
    d = 1.0 - lam
    np.fill_diagonal(d, 0.0)
    return DissimilarityMatrix(d, labels)


# ----------------------------------------------------------------------------
# clustering
# ----------------------------------------------------------------------------

@dataclass
class Merge:
    left: int
    right: int
    height: float
    size: int


def complete_linkage(D: DissimilarityMatrix) -> list:
    """Complete-linkage merge history.

    A cluster is identified by its smallest member index.  At each step the
    closest pair is merged; ties go to the lexicographically smallest pair of
    identifiers.  The merged cluster keeps the smaller identifier.
    """
    dist = np.array(D.values, dtype=float)
    k = dist.shape[0]
    np.fill_diagonal(dist, np.inf)
    dist[np.tril_indices(k)] = np.inf
    full = np.array(D.values, dtype=float)
    active = np.ones(k, dtype=bool)
    size = np.ones(k, dtype=int)
    merges = []
    for _ in range(k - 1):
        flat = int(np.argmin(dist))
        i, j = divmod(flat, k)
        h = dist[i, j]
        merges.append(Merge(i, j, float(h), int(size[i] + size[j])))
        row = np.maximum(full[i], full[j])
        full[i, :] = row
        full[:, i] = row
        size[i] += size[j]
        active[j] = False
        # refresh the upper-triangular search matrix for row/column i, drop j
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        cols = np.flatnonzero(active)
        upper = cols[cols > i]
        lower = cols[cols < i]
        dist[i, upper] = row[upper]
        dist[lower, i] = row[lower]
    return merges


@dataclass
class ClusterPartition:
    clusters: list
    max_size: int

    @property
    def singletons(self) -> list:
        return [c[0] for c in self.clusters if len(c) == 1]

    def without_singletons(self) -> "ClusterPartition":
        return ClusterPartition([c for c in self.clusters if len(c) > 1], self.max_size)

    def assignments(self) -> dict:
        return {lab: cid for cid, members in enumerate(self.clusters, start=1) for lab in members}


def complete_linkage_cluster(D: DissimilarityMatrix, max_size: int = 10) -> ClusterPartition:
    """Coarsest dendrogram cut whose largest cluster has at most ``max_size`` members.

    Singleton clusters stay in the partition; drop them with
    :meth:`ClusterPartition.without_singletons`.
    """
    if max_size < 2:
        raise DomainError(f"max_size must be >= 2, got {max_size}")
    k = len(D)
    members = {i: [i] for i in range(k)}
    for mg in complete_linkage(D):
        if mg.size > max_size:
            break
        members[mg.left].extend(members.pop(mg.right))
    clusters = [sorted(v) for _, v in sorted(members.items())]
    return ClusterPartition([[D.labels[i] for i in c] for c in clusters], max_size)


# ----------------------------------------------------------------------------
# parametric tail coefficient
# ----------------------------------------------------------------------------

def t_copula_lower_tail(rho, nu):
    """``2 T_{nu+1}(-sqrt((nu + 1)(1 - rho)/(1 + rho)))``."""
    rho = np.asarray(rho, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(rho <= -1) or np.any(rho > 1):
        raise DomainError("rho must lie in (-1, 1]")
    if np.any(nu < 1):
        raise DomainError("nu must be >= 1")
    arg = -np.sqrt((nu + 1.0) * (1.0 - rho) / (1.0 + rho))
    out = 2.0 * student_t_cdf(arg, nu + 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class TailSummary:
    name: str
    stats: Stats


def posterior_tail_summary(store: SampleStore) -> list:
    """Posterior mean / sd / 95% interval of lambda_L for each Student-t group."""
    nu = store.pooled("nu")
    if nu is None:
        raise DataError("sample store has no degrees-of-freedom draws")
    gamma = store.pooled("gamma")
    out = []
    for i, fam in enumerate(store.families):
        if fam is not Family.STUDENT_T:
            continue
        rho = psi_from_gamma(gamma[:, i], store.bounds[i])
        lam = np.atleast_1d(t_copula_lower_tail(rho, nu[:, i]))
        out.append(TailSummary(store.names[i], summarize_draws(lam)))
    if not out:
        raise DataError("sample store has no Student-t groups")
    return out
