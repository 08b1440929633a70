"""Self-supervised and spectral objectives over linear maps, with analytic gradients.

Every loss reads the map A only through the bilinear form B = A A^T (or
B = A_t A_v^T for the two-modality loss), so all of them are invariant under
right-multiplication of the maps by a common orthogonal matrix. Batch
estimators take the log of the sample mean over a shared pool of m negatives
per step, a consistent plug-in for the population log-term at O(n*m) cost.
All log-sum-exp evaluations subtract the row maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .models import SharedGMM

__all__ = [
    "Batch",
    "ClipBatch",
    "SiamConfig",
    "infonce_loss",
    "infonce_grad",
    "infonce_loss_and_grad",
    "simsiam_loss",
    "simsiam_grad",
    "simsiam_loss_and_grad",
    "simsiam_population_loss",
    "simsiam_population_grad",
    "clip_loss",
    "clip_grads",
    "clip_loss_and_grads",
    "spectral_objective",
    "convexity_probe",
]


def _check_2d(name: str, arr) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim != 2 or out.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {out.shape}")
    return out


@dataclass(frozen=True)
class Batch:
    """Row-aligned anchor/pair matrices plus a shared pool of negatives.

    ``anchors`` and ``augments`` are (n, d) with row i forming one pair;
    ``negatives`` is (m, d), drawn from the marginal and shared by every
    anchor in the batch.
    """

    anchors: np.ndarray
    augments: np.ndarray
    negatives: np.ndarray

    def __post_init__(self):
        anchors = _check_2d("anchors", self.anchors)
        augments = _check_2d("augments", self.augments)
        negatives = _check_2d("negatives", self.negatives)
        if anchors.shape != augments.shape:
            raise ValueError("anchors and augments must be row-aligned with equal shape")
        if negatives.shape[1] != anchors.shape[1]:
            raise ValueError("negatives must share the anchor dimension")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "augments", augments)
        object.__setattr__(self, "negatives", negatives)

    @property
    def n(self) -> int:
        return self.anchors.shape[0]

    @property
    def m(self) -> int:
        return self.negatives.shape[0]


@dataclass(frozen=True)
class ClipBatch:
    """Row-aligned two-modality pairs plus V-side negatives.

    ``negatives_t`` is only consumed by the symmetric loss variant and may be
    omitted.
    """

    side_v: np.ndarray
    side_t: np.ndarray
    negatives_v: np.ndarray
    negatives_t: np.ndarray | None = None

    def __post_init__(self):
        side_v = _check_2d("side_v", self.side_v)
        side_t = _check_2d("side_t", self.side_t)
        negatives_v = _check_2d("negatives_v", self.negatives_v)
        if side_v.shape[0] != side_t.shape[0]:
            raise ValueError("side_v and side_t must be row-aligned")
        if negatives_v.shape[1] != side_v.shape[1]:
            raise ValueError("negatives_v must share the side_v dimension")
        object.__setattr__(self, "side_v", side_v)
        object.__setattr__(self, "side_t", side_t)
        object.__setattr__(self, "negatives_v", negatives_v)
        if self.negatives_t is not None:
            negatives_t = _check_2d("negatives_t", self.negatives_t)
            if negatives_t.shape[1] != side_t.shape[1]:
                raise ValueError("negatives_t must share the side_t dimension")
            object.__setattr__(self, "negatives_t", negatives_t)

    @property
    def n(self) -> int:
        return self.side_v.shape[0]


@dataclass(frozen=True)
class SiamConfig:
    """Norm-penalty weight and spectral-norm bound for the non-contrastive loss.

    ``xi = 0`` is accepted for control runs; the learned-subspace guarantees
    only apply for xi > 0.
    """

    xi: float = 0.1
    spectral_bound: float = 1.0

    def __post_init__(self):
        if self.xi < 0.0:
            raise ValueError("xi must be non-negative")
        if self.spectral_bound <= 0.0:
            raise ValueError("spectral_bound must be positive")


def _check_finite_scores(scores: np.ndarray) -> None:
    if not np.isfinite(scores).all():
        i, j = np.argwhere(~np.isfinite(scores))[0]
        raise FloatingPointError(f"non-finite pair score at anchor {int(i)}, negative {int(j)}")


def _infonce_pieces(a, batch: Batch):
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):   # finiteness checked below
        pa = batch.anchors @ a           # (n, r)
        ph = batch.augments @ a          # (n, r)
        pn = batch.negatives @ a         # (m, r)
        scores = pa @ pn.T               # (n, m)
    _check_finite_scores(scores)
    return a, pa, ph, pn, scores


def _lse_and_softmax(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row log-sum-exp and softmax from a single exponentiation."""
    shift = scores.max(axis=1, keepdims=True)
    with np.errstate(over="ignore"):   # huge spreads underflow to exp(-inf)=0
        e = np.exp(scores - shift)
    sums = e.sum(axis=1, keepdims=True)
    return (np.log(sums) + shift)[:, 0], e / sums


def infonce_loss_and_grad(a, batch: Batch) -> tuple[float, np.ndarray]:
    """Contrastive loss and its exact gradient in one pass."""
    a, pa, ph, pn, scores = _infonce_pieces(a, batch)
    n = batch.n
    with np.errstate(over="ignore", invalid="ignore"):   # caller checks finiteness
        attract = float(np.sum(pa * ph)) / n
    lse, w = _lse_and_softmax(scores)
    loss = -attract + float(np.mean(lse)) - math.log(batch.m)

    # d/dA of x^T A A^T y is (x y^T + y x^T) A; softmax weights reweight the
    # negative pairs row-wise.
    grad = -(batch.anchors.T @ ph + batch.augments.T @ pa) / n
    grad += (batch.anchors.T @ (w @ pn) + batch.negatives.T @ (w.T @ pa)) / n
    return loss, grad


def infonce_loss(a, batch: Batch) -> float:
    """-(1/n) sum_i <A^T x_i, A^T xhat_i> + (1/n) sum_i log((1/m) sum_j e^{<A^T x_i, A^T neg_j>})."""
    a, pa, ph, pn, scores = _infonce_pieces(a, batch)
    attract = float(np.sum(pa * ph)) / batch.n
    repulse = float(np.mean(logsumexp(scores, axis=1))) - math.log(batch.m)
    return -attract + repulse


def infonce_grad(a, batch: Batch) -> np.ndarray:
    return infonce_loss_and_grad(a, batch)[1]


def _negative_weights(a, batch: Batch) -> np.ndarray:
    """Softmax weights p_ij over negatives, one row per anchor (rows sum to 1)."""
    _, _, _, _, scores = _infonce_pieces(a, batch)
    return softmax(scores, axis=1)


def simsiam_loss_and_grad(a, batch: Batch, cfg: SiamConfig) -> tuple[float, np.ndarray]:
    """Non-contrastive loss (negatives unused) and its exact gradient."""
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        pa = batch.anchors @ a
        ph = batch.augments @ a
        n = batch.n
        loss = (-float(np.sum(pa * ph)) + cfg.xi * float(np.sum(pa * pa))) / n
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite loss value")
        grad = (-(batch.anchors.T @ ph + batch.augments.T @ pa)
                + 2.0 * cfg.xi * (batch.anchors.T @ pa)) / n
    return loss, grad


def simsiam_loss(a, batch: Batch, cfg: SiamConfig) -> float:
    return simsiam_loss_and_grad(a, batch, cfg)[0]


def simsiam_grad(a, batch: Batch, cfg: SiamConfig) -> np.ndarray:
    return simsiam_loss_and_grad(a, batch, cfg)[1]


def _population_matrix(model: SharedGMM, delta: float, xi: float) -> np.ndarray:
    center = model.mixture_mean()
    if np.max(np.abs(center)) > 1e-10:
        raise ValueError("population form requires centered means (sum_k w_k mu_k = 0)")
    return (xi - delta) * model.mean_outer() + xi * model.covariance


def simsiam_population_loss(a, model: SharedGMM, delta: float, xi: float) -> float:
    """Closed form <A A^T, (xi - delta) M + xi Sigma>; needs centered means.

    For non-centered mixtures the dropped cross term does not vanish, so the
    closed form would silently be wrong, hence the hard check.
    """
    a = np.asarray(a, dtype=float)
    c = _population_matrix(model, delta, xi)
    return float(np.sum(a * (c @ a)))


def simsiam_population_grad(a, model: SharedGMM, delta: float, xi: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 2.0 * _population_matrix(model, delta, xi) @ a


def _clip_pieces(a_v, a_t, batch: ClipBatch):
    a_v = np.asarray(a_v, dtype=float)
    a_t = np.asarray(a_t, dtype=float)
    if a_v.shape[1] != a_t.shape[1]:
        raise ValueError("both maps must project into the same dimension r")
    with np.errstate(over="ignore", invalid="ignore"):   # finiteness checked below
        pv = batch.side_v @ a_v          # (n, r)
        pt = batch.side_t @ a_t          # (n, r)
        pn = batch.negatives_v @ a_v     # (m, r)
        scores = pt @ pn.T               # (n, m)
    _check_finite_scores(scores)
    return a_v, a_t, pv, pt, pn, scores


def clip_loss_and_grads(a_v, a_t, batch: ClipBatch, symmetric: bool = False
                        ) -> tuple[float, np.ndarray, np.ndarray]:
    """Two-modality contrastive loss and gradients for both maps.

    The asymmetric default repels each T-side anchor only from V-side
    negatives. ``symmetric=True`` averages in the mirror-image term using
    ``negatives_t`` (practical two-sided variant; no theory is claimed for
    it).
    """
    a_v, a_t, pv, pt, pn, scores = _clip_pieces(a_v, a_t, batch)
    n = batch.n
    m = batch.negatives_v.shape[0]
    attract = float(np.sum(pt * pv)) / n
    lse, w = _lse_and_softmax(scores)
    repulse = float(np.mean(lse)) - math.log(m)

    if not symmetric:
        grad_v = (-batch.side_v.T @ pt + batch.negatives_v.T @ (w.T @ pt)) / n
        grad_t = (-batch.side_t.T @ pv + batch.side_t.T @ (w @ pn)) / n
        return -attract + repulse, grad_v, grad_t

    if batch.negatives_t is None:
        raise ValueError("symmetric variant needs negatives_t in the batch")
    qn = batch.negatives_t @ a_t
    scores_t = pv @ qn.T
    _check_finite_scores(scores_t)
    lse_t, w_t = _lse_and_softmax(scores_t)
    repulse_t = float(np.mean(lse_t)) - math.log(qn.shape[0])

    grad_v = (-batch.side_v.T @ pt
              + 0.5 * batch.negatives_v.T @ (w.T @ pt)
              + 0.5 * batch.side_v.T @ (w_t @ qn)) / n
    grad_t = (-batch.side_t.T @ pv
              + 0.5 * batch.side_t.T @ (w @ pn)
              + 0.5 * batch.negatives_t.T @ (w_t.T @ pv)) / n
    return -attract + 0.5 * (repulse + repulse_t), grad_v, grad_t


def clip_loss(a_v, a_t, batch: ClipBatch, symmetric: bool = False) -> float:
    return clip_loss_and_grads(a_v, a_t, batch, symmetric=symmetric)[0]


def clip_grads(a_v, a_t, batch: ClipBatch, symmetric: bool = False
               ) -> tuple[np.ndarray, np.ndarray]:
    _, grad_v, grad_t = clip_loss_and_grads(a_v, a_t, batch, symmetric=symmetric)
    return grad_v, grad_t


def spectral_objective(a, points) -> float:
    """Projected variance (1/n) sum_i ||A^T x_i||^2 for orthonormal A.

    Used only to verify that the spectral subspace maximizes the best-fit
    objective; rejects non-orthonormal maps (the constraint set).
    """
    a = np.asarray(a, dtype=float)
    gram = a.T @ a
    if np.max(np.abs(gram - np.eye(a.shape[1]))) > 1e-8:
        raise ValueError("spectral objective requires orthonormal columns (A^T A = I)")
    x = _check_2d("points", points)
    proj = x @ a
    return float(np.sum(proj * proj)) / x.shape[0]


def convexity_probe(batch: Batch, trials: int, rng: np.random.Generator) -> bool:
    """Spot-check convexity of the log-sum-exp term as a function of B.

    For random PSD pairs B1 != B2 and lambda in (0, 1), verifies
    f(lam B1 + (1-lam) B2) <= lam f(B1) + (1-lam) f(B2) + 1e-9 where f is the
    repulsive term of the contrastive loss. Returns True iff every trial
    passes.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    d = batch.anchors.shape[1]
    log_m = math.log(batch.m)

    def repulse(b: np.ndarray) -> float:
        scores = batch.anchors @ b @ batch.negatives.T
        return float(np.mean(logsumexp(scores, axis=1))) - log_m

    for _ in range(trials):
        g1 = rng.standard_normal((d, d))
        g2 = rng.standard_normal((d, d))
        b1 = g1 @ g1.T / d
        b2 = g2 @ g2.T / d
        lam = rng.uniform(0.1, 0.9)
        mid = repulse(lam * b1 + (1.0 - lam) * b2)
        if mid > lam * repulse(b1) + (1.0 - lam) * repulse(b2) + 1e-9:
            return False
    return True
