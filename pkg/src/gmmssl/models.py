"""Shared-covariance Gaussian mixtures, paired draws, and exact posteriors.

Three generative objects live here:

* :class:`SharedGMM`: a K-component Gaussian mixture whose components share a
  single positive-definite covariance.
* :class:`PairedGMM`: a joint law over pairs ``(x, xhat)`` built on a
  SharedGMM: with probability ``delta`` both points are drawn from the same
  component, otherwise the components are chosen independently. Either
  marginal equals the base mixture for every ``delta``.
* :class:`ClipGMM`: a two-modality mixture where each draw picks one
  component index and then samples both sides independently from that
  component's Gaussian in its own space.

All model objects are immutable after construction (arrays are set read-only)
and safe to share across threads. Sampling takes an explicit
``numpy.random.Generator``; a single generator must not be shared by
concurrent callers; derive substreams with :func:`gmmssl.rng.substream`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

__all__ = [
    "SharedGMM",
    "PairedGMM",
    "ClipGMM",
    "LabeledSample",
    "PairSample",
    "ClipSample",
    "sample_gmm",
    "sample_pairs",
    "sample_clip",
    "posterior",
    "project_gmm",
    "model_from_json",
]


def _validate_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w <= 0.0):
        raise ValueError("mixture weights must be strictly positive")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must sum to 1 within 1e-12, got {w.sum()!r}")
    return w


def _validate_spd(cov, name: str = "covariance") -> tuple[np.ndarray, np.ndarray]:
    """Return (covariance, lower Cholesky factor) or raise."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {cov.shape}")
    if not np.all(np.abs(cov - cov.T) <= 1e-12):
        raise ValueError(f"{name} must be symmetric within 1e-12")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} is not positive definite") from exc
    return cov, chol


def _freeze(obj, **arrays) -> None:
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(obj, name, arr)


@dataclass(frozen=True)
class SharedGMM:
    """Gaussian mixture whose K components share one SPD covariance.

    ``chol`` caches the lower Cholesky factor of the covariance; it is
    computed once at construction and reused by every sampler and density
    evaluation.
    """

    weights: np.ndarray
    means: np.ndarray          # (K, d)
    covariance: np.ndarray     # (d, d)
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = _validate_weights(self.weights)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        cov, chol = _validate_spd(self.covariance)
        if means.shape[0] != w.size:
            raise ValueError(f"expected {w.size} means, got {means.shape[0]}")
        if means.shape[1] != cov.shape[0]:
            raise ValueError("mean dimension must equal the covariance order")
        _freeze(self, weights=w, means=means, covariance=cov, chol=chol)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def mixture_mean(self) -> np.ndarray:
        """Overall mean sum_k w_k mu_k."""
        return self.weights @ self.means

    def mean_outer(self) -> np.ndarray:
        """Inter-component second moment sum_k w_k mu_k mu_k^T."""
        return (self.means.T * self.weights) @ self.means

    def second_moment(self) -> np.ndarray:
        """Population second moment E[x x^T] = mean_outer() + covariance."""
        return self.mean_outer() + self.covariance

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SharedGMM":
        return cls(data["weights"], data["means"], data["covariance"])

    @classmethod
    def from_json(cls, text: str) -> "SharedGMM":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PairedGMM:
    """Pair distribution over (x, xhat) with component-agreement bias ``delta``.

    A pair is drawn by flipping a coin with bias ``delta``: heads, one
    component is chosen and both points are sampled from it independently;
    tails, each point gets its own independently chosen component.
    """

    base: SharedGMM
    delta: float

    def __post_init__(self):
        if not 0.0 <= float(self.delta) <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta!r}")
        object.__setattr__(self, "delta", float(self.delta))


@dataclass(frozen=True)
class ClipGMM:
    """Two-modality mixture with a shared component index per draw.

    Both modalities have the same number of components; each has its own
    means and SPD covariance (Cholesky factors cached at construction).
    """

    weights: np.ndarray
    means_v: np.ndarray        # (K, d1)
    cov_v: np.ndarray          # (d1, d1)
    means_t: np.ndarray        # (K, d2)
    cov_t: np.ndarray          # (d2, d2)
    chol_v: np.ndarray = field(init=False, repr=False, compare=False)
    chol_t: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = _validate_weights(self.weights)
        means_v = np.atleast_2d(np.asarray(self.means_v, dtype=float))
        means_t = np.atleast_2d(np.asarray(self.means_t, dtype=float))
        cov_v, chol_v = _validate_spd(self.cov_v, "cov_v")
        cov_t, chol_t = _validate_spd(self.cov_t, "cov_t")
        if means_v.shape[0] != w.size or means_t.shape[0] != w.size:
            raise ValueError("both modalities must have one mean per mixture weight")
        if means_v.shape[1] != cov_v.shape[0] or means_t.shape[1] != cov_t.shape[0]:
            raise ValueError("mean dimension must equal the covariance order")
        _freeze(self, weights=w, means_v=means_v, cov_v=cov_v, chol_v=chol_v,
                means_t=means_t, cov_t=cov_t, chol_t=chol_t)

    @property
    def n_components(self) -> int:
        return self.weights.size

    def marginal_v(self) -> SharedGMM:
        return SharedGMM(self.weights, self.means_v, self.cov_v)

    def marginal_t(self) -> SharedGMM:
        return SharedGMM(self.weights, self.means_t, self.cov_t)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "v": {"means": self.means_v.tolist(), "covariance": self.cov_v.tolist()},
            "t": {"means": self.means_t.tolist(), "covariance": self.cov_t.tolist()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ClipGMM":
        return cls(data["weights"], data["v"]["means"], data["v"]["covariance"],
                   data["t"]["means"], data["t"]["covariance"])

    @classmethod
    def from_json(cls, text: str) -> "ClipGMM":
        return cls.from_dict(json.loads(text))


def model_from_json(text: str):
    """Load a SharedGMM or ClipGMM from its JSON form, dispatching on keys."""
    data = json.loads(text)
    if "v" in data and "t" in data:
        return ClipGMM.from_dict(data)
    return SharedGMM.from_dict(data)


class LabeledSample(NamedTuple):
    """A batch of mixture draws with the component index of each row."""

    points: np.ndarray   # (n, d)
    labels: np.ndarray   # (n,) ints in [0, K)


class PairSample(NamedTuple):
    """Row-aligned pair draws with the component index of each side."""

    x: np.ndarray             # (n, d)
    x_labels: np.ndarray      # (n,)
    xhat: np.ndarray          # (n, d)
    xhat_labels: np.ndarray   # (n,)


class ClipSample(NamedTuple):
    """Row-aligned two-modality draws sharing one component index per row."""

    x_v: np.ndarray      # (n, d1)
    x_t: np.ndarray      # (n, d2)
    labels: np.ndarray   # (n,)


def _require_count(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError(f"sample count must be at least 1, got {n}")
    return n


def _gaussian_draws(means_rows: np.ndarray, chol: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(means_rows.shape)
    return means_rows + z @ chol.T


def sample_gmm(model: SharedGMM, n: int, rng: np.random.Generator) -> LabeledSample:
    """Draw n labeled points: component k ~ weights, then x = mu_k + L z."""
    n = _require_count(n)
    labels = rng.choice(model.n_components, size=n, p=model.weights)
    points = _gaussian_draws(model.means[labels], model.chol, rng)
    return LabeledSample(points, labels)


def sample_pairs(pair_model: PairedGMM, n: int, rng: np.random.Generator) -> PairSample:
    """Draw n pairs (x, xhat) from a :class:`PairedGMM`.

    Draw order is fixed (coins, first components, second components, then the
    two Gaussian blocks) so a given generator state always yields the same
    sample.
    """
    n = _require_count(n)
    base = pair_model.base
    same = rng.random(n) < pair_model.delta
    k1 = rng.choice(base.n_components, size=n, p=base.weights)
    k2 = rng.choice(base.n_components, size=n, p=base.weights)
    k2 = np.where(same, k1, k2)
    x = _gaussian_draws(base.means[k1], base.chol, rng)
    xhat = _gaussian_draws(base.means[k2], base.chol, rng)
    return PairSample(x, k1, xhat, k2)


def sample_clip(model: ClipGMM, n: int, rng: np.random.Generator) -> ClipSample:
    """Draw n two-modality pairs; both sides share the per-row component."""
    n = _require_count(n)
    labels = rng.choice(model.n_components, size=n, p=model.weights)
    x_v = _gaussian_draws(model.means_v[labels], model.chol_v, rng)
    x_t = _gaussian_draws(model.means_t[labels], model.chol_t, rng)
    return ClipSample(x_v, x_t, labels)


def _log_component_densities(model: SharedGMM, x: np.ndarray) -> np.ndarray:
    """Per-component Gaussian log densities, shape (n, K)."""
    d = model.dim
    diff = x[:, None, :] - model.means[None, :, :]            # (n, K, d)
    flat = diff.reshape(-1, d).T                              # (d, n*K)
    z = solve_triangular(model.chol, flat, lower=True)
    maha = np.sum(z * z, axis=0).reshape(x.shape[0], model.n_components)
    log_det = 2.0 * np.sum(np.log(np.diag(model.chol)))
    return -0.5 * (maha + d * np.log(2.0 * np.pi) + log_det)


def posterior(model: SharedGMM, x) -> np.ndarray:
    """Component posterior Pr(z=k | x), evaluated in the log domain.

    Accepts one point of shape (d,) or a batch (n, d); returns (K,) or (n, K).
    Log-sum-exp normalization keeps far-out points from underflowing; each
    output row sums to 1 within 1e-10.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != model.dim:
        raise ValueError(f"point dimension {pts.shape[1]} != model dimension {model.dim}")
    log_post = np.log(model.weights)[None, :] + _log_component_densities(model, pts)
    log_post = log_post - logsumexp(log_post, axis=1, keepdims=True)
    probs = np.exp(log_post)
    return probs[0] if single else probs


def project_gmm(model: SharedGMM, a: np.ndarray) -> SharedGMM:
    """Mixture of the projections A^T x: means A^T mu_k, covariance A^T Sigma A.

    A must have full column rank (smallest singular value > 1e-10); a
    rank-deficient map would degenerate the projected covariance.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != model.dim:
        raise ValueError(f"projection must be ({model.dim}, r), got shape {a.shape}")
    smin = np.linalg.svd(a, compute_uv=False)[-1]
    if smin <= 1e-10:
        raise ValueError("degenerate projection: smallest singular value <= 1e-10")
    cov = a.T @ model.covariance @ a
    cov = 0.5 * (cov + cov.T)
    return SharedGMM(model.weights, model.means @ a, cov)
