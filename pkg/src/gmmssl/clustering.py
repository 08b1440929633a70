"""K-means in the projected space and chance-adjusted clustering metrics.

K-means uses k-means++ seeding, Lloyd iterations to an assignment fixpoint,
farthest-point re-seeding for emptied clusters (so K is preserved), and keeps
the best inertia over restarts. ARI follows the pair-counting adjustment; AMI
uses the exact hypergeometric expected mutual information with a selectable
entropy normalization ("mean" by default). Degenerate conventions: a single
cluster on both sides scores 1.0; legitimate negative values are never
clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = ["Clustering", "kmeans", "ari", "ami", "contingency_table",
           "evaluate_projection"]


@dataclass(frozen=True)
class Clustering:
    """Hard assignments, the centroids that induced them, and their inertia."""

    assignments: np.ndarray   # (n,) ints in [0, K)
    centroids: np.ndarray     # (K, r)
    inertia: float

    def __post_init__(self):
        if self.inertia < 0.0:
            raise ValueError("inertia must be non-negative")
        if self.assignments.min(initial=0) < 0 or \
                self.assignments.max(initial=0) >= self.centroids.shape[0]:
            raise ValueError("assignment indices must lie in [0, K)")


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 expanded; clip guards tiny negative roundoff
    d2 = (np.sum(points**2, axis=1)[:, None]
          - 2.0 * points @ centroids.T
          + np.sum(centroids**2, axis=1)[None, :])
    return np.maximum(d2, 0.0)


def _kmeanspp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = _sq_dists(points, centroids[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = rng.integers(n)   # all remaining points coincide with a centroid
        else:
            idx = rng.choice(n, p=closest / total)
        centroids[j] = points[idx]
        closest = np.minimum(closest, _sq_dists(points, centroids[j:j + 1])[:, 0])
    return centroids


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int
           ) -> tuple[np.ndarray, np.ndarray, float]:
    k = centroids.shape[0]
    assignments = np.full(points.shape[0], -1)
    prev_inertia = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(points, centroids)
        new_assignments = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(points.shape[0]), new_assignments].sum())
        if inertia > prev_inertia + 1e-8 * (1.0 + prev_inertia):
            raise RuntimeError("Lloyd iteration increased inertia; numerical fault")
        prev_inertia = inertia
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        counts = np.bincount(assignments, minlength=k)
        if np.any(counts == 0):
            # re-seed each emptied cluster at the point currently farthest
            # from its assigned centroid (rule preserves K and monotonicity)
            dist_to_own = d2[np.arange(points.shape[0]), assignments].copy()
            for j in np.flatnonzero(counts == 0):
                far = int(np.argmax(dist_to_own))
                centroids[j] = points[far]
                assignments[far] = j
                dist_to_own[far] = 0.0
        for j in range(k):
            members = assignments == j
            if members.any():   # a reseed can orphan a singleton's old cluster
                centroids[j] = points[members].mean(axis=0)
    d2 = _sq_dists(points, centroids)
    assignments = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(points.shape[0]), assignments].sum())
    return assignments, centroids, inertia


def kmeans(points: np.ndarray, k: int, restarts: int = 10, max_iter: int = 300,
           rng: np.random.Generator | None = None) -> Clustering:
    """Best-of-restarts k-means; deterministic under a seeded generator."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need n >= K >= 1, got n={n}, K={k}")
    if rng is None:
        rng = np.random.default_rng()

    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for _ in range(max(1, restarts)):
        centroids = _kmeanspp_seed(points, k, rng)
        assignments, centroids, inertia = _lloyd(points, centroids.copy(), max_iter)
        if best is None or inertia < best[2]:
            best = (assignments, centroids, inertia)
    assignments, centroids, inertia = best
    return Clustering(assignments, centroids, inertia)


def contingency_table(labels_true, labels_pred) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counts matrix plus row/column marginals for two labelings."""
    lt = np.asarray(labels_true).ravel()
    lp = np.asarray(labels_pred).ravel()
    if lt.size != lp.size:
        raise ValueError("labelings must have equal length")
    if lt.size == 0:
        raise ValueError("labelings must be non-empty")
    _, ti = np.unique(lt, return_inverse=True)
    _, pi = np.unique(lp, return_inverse=True)
    rows, cols = ti.max() + 1, pi.max() + 1
    table = np.bincount(ti * cols + pi, minlength=rows * cols).reshape(rows, cols)
    return table, table.sum(axis=1), table.sum(axis=0)


def _comb2(counts: np.ndarray) -> np.ndarray:
    counts = counts.astype(np.int64)
    return counts * (counts - 1) // 2


def ari(labels_true, labels_pred) -> float:
    """Adjusted Rand index via pair counting on the contingency table.

    1.0 for identical partitions up to relabeling; a zero adjustment
    denominator (e.g. a single cluster on both sides) scores 1.0 by
    convention.
    """
    table, a, b = contingency_table(labels_true, labels_pred)
    n = int(a.sum())
    index = int(_comb2(table).sum())
    sum_a = int(_comb2(a).sum())
    sum_b = int(_comb2(b).sum())
    total = n * (n - 1) // 2
    if total == 0:
        return 1.0
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        return 1.0
    # 1 is a hard upper bound (index <= max_index); roundoff in the float
    # division can land an ulp above it on perfect agreements
    return float(min((index - expected) / denom, 1.0))


def _entropy(marginal: np.ndarray, n: int) -> float:
    p = marginal[marginal > 0] / n
    return float(-np.sum(p * np.log(p)))


def _mutual_information(table: np.ndarray, a: np.ndarray, b: np.ndarray, n: int) -> float:
    nz = table > 0
    nij = table[nz].astype(float)
    outer = np.outer(a, b)[nz].astype(float)
    return float(np.sum(nij / n * (np.log(nij * n) - np.log(outer))))


def expected_mutual_information(a: np.ndarray, b: np.ndarray, n: int) -> float:
    """Exact E[MI] under the permutation model, summed over feasible cells."""
    a = a.astype(np.int64)
    b = b.astype(np.int64)
    emi = 0.0
    log_n = np.log(n)
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.int64)
            term = nij / n * (np.log(nij) + log_n - np.log(ai) - np.log(bj))
            log_prob = (gammaln(ai + 1) + gammaln(bj + 1)
                        + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                        - gammaln(n + 1) - gammaln(nij + 1)
                        - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                        - gammaln(n - ai - bj + nij + 1))
            emi += float(np.sum(term * np.exp(log_prob)))
    return emi


def ami(labels_true, labels_pred, average_method: str = "mean") -> float:
    """Adjusted mutual information (MI - E[MI]) / (norm(H_t, H_p) - E[MI]).

    Entropies use natural logs. ``average_method`` selects the normalizer:
    "mean" (arithmetic, the default), "min", "max" or "geometric". Negative
    values are legitimate and not clamped; a single cluster on both sides
    scores 1.0 by convention.
    """
    table, a, b = contingency_table(labels_true, labels_pred)
    n = int(a.sum())
    if a.size == 1 and b.size == 1:
        return 1.0
    h_true = _entropy(a, n)
    h_pred = _entropy(b, n)
    mi = _mutual_information(table, a, b, n)
    emi = expected_mutual_information(a, b, n)
    if average_method == "mean":
        norm = 0.5 * (h_true + h_pred)
    elif average_method == "min":
        norm = min(h_true, h_pred)
    elif average_method == "max":
        norm = max(h_true, h_pred)
    elif average_method == "geometric":
        norm = float(np.sqrt(h_true * h_pred))
    else:
        raise ValueError(f"unknown average_method {average_method!r}")
    denom = norm - emi
    if denom == 0.0:
        return 1.0 if mi == emi else 0.0
    # MI <= every normalizer, so 1 is a hard upper bound; summation order
    # differences between MI and the entropies can leave an ulp of excess on
    # identical partitions. Negative values are legitimate and kept.
    return float(min((mi - emi) / denom, 1.0))


def evaluate_projection(a: np.ndarray, points: np.ndarray, labels: np.ndarray,
                        k: int, restarts: int = 10, max_iter: int = 300,
                        rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Project points through A^T, cluster with k-means, score against labels."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] < 1:
        raise ValueError("projection map must be d x r with r >= 1")
    projected = np.asarray(points, dtype=float) @ a
    clustering = kmeans(projected, k, restarts=restarts, max_iter=max_iter, rng=rng)
    return ari(labels, clustering.assignments), ami(labels, clustering.assignments)
