"""Reference subspaces, the discriminant ratio they optimize, and angle diagnostics.

The discriminant `J(A) = Tr((A^T Sigma A)^{-1} A^T M A)` (with M the
inter-component second moment) scores a linear map by how separated the
projected mixture is relative to its projected within-component spread. Its
maximizer over subspaces is spanned by ``Sigma^{-1} mu_k``; the spectral
baseline instead keeps the top eigenvectors of the raw second moment. Both are
produced here as :class:`Subspace` objects, and learned maps are compared to
them through principal angles and containment/equality verdicts.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, eigh, qr, subspace_angles

from .models import SharedGMM

__all__ = [
    "ANGLE_TOL_TRAINED",
    "ANGLE_TOL_ANALYTIC",
    "RANK_TOL",
    "Subspace",
    "SubspaceReport",
    "orthonormal_columns",
    "fisher_subspace",
    "fisher_directions",
    "svd_subspace",
    "empirical_svd_subspace",
    "fisher_discriminant",
    "principal_angles",
    "containment_report",
    "lda_direction",
    "fisher_lda_direction",
]

# Trained maps are gradient-descent approximations; analytic constructions are
# exact up to roundoff. Containment verdicts use a matching tolerance split.
ANGLE_TOL_TRAINED = math.radians(3.0)
ANGLE_TOL_ANALYTIC = 1e-6
RANK_TOL = 1e-6


@dataclass(frozen=True)
class Subspace:
    """A d-dimensional-ambient subspace held as an orthonormal column basis."""

    basis: np.ndarray   # (d, m), orthonormal columns

    def __post_init__(self):
        basis = np.ascontiguousarray(np.asarray(self.basis, dtype=float))
        if basis.ndim != 2:
            raise ValueError("basis must be a 2-D matrix of column vectors")
        d, m = basis.shape
        if not 1 <= m <= d:
            raise ValueError(f"subspace dimension must satisfy 1 <= m <= d, got m={m}, d={d}")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(m))) > 1e-10:
            raise ValueError("basis columns must be orthonormal within 1e-10")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def to_dict(self) -> dict:
        return {"basis": self.basis.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class SubspaceReport:
    """Principal-angle comparison of a learned map against a reference subspace.

    ``principal_angles`` holds the canonical angles between the learned span
    (after numerical-rank truncation) and the reference, non-decreasing, in
    radians. ``equal`` implies ``contained``; ``collapse`` marks a learned map
    that truncated to the zero subspace.
    """

    principal_angles: np.ndarray
    contained: bool
    equal: bool
    rank_tolerance: float
    angle_tolerance: float
    dim: int
    collapse: bool = False

    def __post_init__(self):
        angles = np.ascontiguousarray(np.asarray(self.principal_angles, dtype=float))
        angles.setflags(write=False)
        object.__setattr__(self, "principal_angles", angles)

    @property
    def max_angle(self) -> float:
        return float(self.principal_angles[-1]) if self.principal_angles.size else 0.0

    def to_dict(self) -> dict:
        return {
            "principal_angles": self.principal_angles.tolist(),
            "contained": self.contained,
            "equal": self.equal,
            "rank_tolerance": self.rank_tolerance,
            "angle_tolerance": self.angle_tolerance,
            "dim": self.dim,
            "collapse": self.collapse,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def orthonormal_columns(a: np.ndarray, rank_tol: float = RANK_TOL,
                        method: str = "svd") -> np.ndarray:
    """Orthonormal basis of col(a), shape (d, rank); rank may be zero.

    method="svd" truncates singular values at ``rank_tol * sigma_max``, so a
    nearly rank-deficient map does not manufacture spurious directions.
    method="qr" keeps all columns (the rank-blind classic recipe, retained for
    exact replication of QR-orthonormalized figures).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] < 1:
        raise ValueError("expected a d x r matrix with r >= 1")
    if not np.isfinite(a).all():
        raise ValueError("projection map has non-finite entries")
    if method == "qr":
        q, _ = qr(a, mode="economic")
        return q
    if method != "svd":
        raise ValueError(f"unknown orthonormalization method {method!r}")
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0))
    rank = int(np.sum(s > rank_tol * s[0]))
    return u[:, :rank]


def fisher_subspace(model: SharedGMM, rank_tol: float = 1e-10) -> Subspace:
    """Span of {Sigma^{-1} mu_k}, the smallest subspace maximizing J.

    Solves Sigma Y = [mu_1 ... mu_K] through the cached Cholesky factor and
    orthonormalizes Y with numerical-rank truncation.
    """
    y = cho_solve((model.chol, True), model.means.T)
    basis = orthonormal_columns(y, rank_tol=rank_tol)
    if basis.shape[1] == 0:
        raise ValueError("Fisher subspace undefined (zero-dimensional): all means are zero")
    return Subspace(basis)


def fisher_directions(model: SharedGMM, rank_tol: float = 1e-10
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Discriminant-ordered directions spanning the Fisher subspace.

    Returns (values, directions): the positive generalized eigenvalues of
    (M, Sigma) in decreasing order and the matching eigenvector columns.
    ``J`` of the span of the first j directions equals the sum of the first j
    values.
    """
    vals, vecs = eigh(model.mean_outer(), model.covariance)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0.0:
        raise ValueError("Fisher subspace undefined (zero-dimensional): all means are zero")
    keep = vals > rank_tol * vals[0]
    return vals[keep], vecs[:, keep]


def _top_eigvecs(second_moment: np.ndarray, r: int) -> Subspace:
    d = second_moment.shape[0]
    if not 1 <= r <= d:
        raise ValueError(f"rank must satisfy 1 <= r <= d, got r={r}, d={d}")
    vals, vecs = np.linalg.eigh(second_moment)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if r < d and abs(vals[r - 1] - vals[r]) <= 1e-10:
        warnings.warn("non-unique SVD subspace: eigenvalues r and r+1 coincide within 1e-10")
    return Subspace(vecs[:, :r])


def svd_subspace(model: SharedGMM, r: int) -> Subspace:
    """Top-r eigenvectors of the population second moment M + Sigma."""
    return _top_eigvecs(model.second_moment(), r)


def empirical_svd_subspace(points: np.ndarray, r: int) -> Subspace:
    """Top-r eigenvectors of the uncentered sample second moment X^T X / n."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("expected an n x d sample matrix")
    return _top_eigvecs(x.T @ x / x.shape[0], r)


def fisher_discriminant(model: SharedGMM, a: np.ndarray) -> float:
    """Tr((A^T Sigma A)^{-1} A^T M A); invariant under A -> A R, R invertible."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    within = a.T @ model.covariance @ a
    within = 0.5 * (within + within.T)
    if np.linalg.eigvalsh(within)[0] <= 1e-12:
        raise ValueError("degenerate projection: A^T Sigma A is singular")
    between = a.T @ model.mean_outer() @ a
    return float(np.trace(np.linalg.solve(within, between)))


def _angles_between(basis1: np.ndarray, basis2: np.ndarray) -> np.ndarray:
    # sine-based formulation: arccos of the cosine SVD bottoms out at
    # sqrt(2*eps) ~ 2e-8 even for identical spans
    return np.sort(subspace_angles(basis1, basis2))


def principal_angles(s1: Subspace, s2: Subspace) -> np.ndarray:
    """Canonical angles between two subspaces, non-decreasing, in [0, pi/2]."""
    if s1.ambient_dim != s2.ambient_dim:
        raise ValueError("subspaces live in different ambient dimensions")
    return _angles_between(s1.basis, s2.basis)


def containment_report(learned: np.ndarray, reference: Subspace,
                       rank_tol: float = RANK_TOL,
                       angle_tol: float = ANGLE_TOL_TRAINED) -> SubspaceReport:
    """Decide whether col(learned) sits inside (or equals) the reference span.

    The learned map is orthonormalized by SVD with numerical-rank truncation
    at ``rank_tol * sigma_max`` first. Containment requires the learned rank
    not to exceed the reference dimension and every canonical angle to stay
    within ``angle_tol``; equality additionally requires matching dimensions
    (canonical angles are symmetric, so no second sweep is needed). A map
    that truncates to rank zero is trivially contained and flagged as a
    collapse.
    """
    basis = orthonormal_columns(learned, rank_tol=rank_tol)
    m = basis.shape[1]
    if m == 0:
        return SubspaceReport(np.zeros(0), contained=True, equal=False,
                              rank_tolerance=rank_tol, angle_tolerance=angle_tol,
                              dim=0, collapse=True)
    angles = _angles_between(basis, reference.basis)
    contained = m <= reference.dim and float(angles[-1]) <= angle_tol
    equal = contained and m == reference.dim
    return SubspaceReport(angles, contained=contained, equal=equal,
                          rank_tolerance=rank_tol, angle_tolerance=angle_tol, dim=m)


def lda_direction(mu1: np.ndarray, mu2: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Sigma^{-1}(mu1 - mu2), unnormalized."""
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    diff = mu1 - mu2
    if np.all(diff == 0.0):
        raise ValueError("zero discriminant direction: the means coincide")
    _, chol = _spd_chol(cov)
    return cho_solve((chol, True), diff)


def fisher_lda_direction(mu1: np.ndarray, mu2: np.ndarray,
                         cov1: np.ndarray, cov2: np.ndarray,
                         w1: float, w2: float, weighted: bool = True) -> np.ndarray:
    """Maximizer of |theta^T(mu1-mu2)|^2 / (theta^T (w1 Sigma1 + w2 Sigma2) theta).

    With ``weighted=False`` the denominator drops the class weights and the
    classic unweighted closed form (Sigma1 + Sigma2)^{-1}(mu1 - mu2) is
    returned instead; neither variant is asserted against the other.
    """
    if abs(w1 + w2 - 1.0) > 1e-12:
        raise ValueError("class weights must sum to 1")
    if min(w1, w2) <= 0.0:
        raise ValueError("class weights must be strictly positive")
    pooled = (w1 * np.asarray(cov1, float) + w2 * np.asarray(cov2, float)) if weighted \
        else (np.asarray(cov1, float) + np.asarray(cov2, float))
    return lda_direction(mu1, mu2, pooled)


def _spd_chol(cov) -> tuple[np.ndarray, np.ndarray]:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        cov = cov[None, None]
    try:
        return cov, np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc
