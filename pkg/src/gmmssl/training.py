"""Projected gradient descent for projection matrices.

The trainer is objective-agnostic: it takes a callable returning (loss,
gradient) at the current map, an optional batch provider, and a config. Step
size decays multiplicatively on loss plateaus (exponential-moving-average
smoothed); an optional spectral-norm projection clips singular values after
every step. The best-loss iterate is returned rather than the last one, since
stochastic batches make the final step noisy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .subspaces import Subspace, orthonormal_columns

__all__ = ["TrainConfig", "TrainTrace", "TrainingAbort", "train",
           "spectral_clip", "init_projection"]

# Final maps whose spectrum shrank below this are flagged as collapsed
# (recorded in the trace, never asserted).
COLLAPSE_SIGMA = 0.1

# Iterates above this spectral norm are treated as divergent: they are never
# snapshotted as recovery anchors or returned as best iterates. Learned maps
# in this problem family live at unit scale.
SANE_SIGMA = 1e3

# Cadence for refreshing the recovery anchor used by the non-finite retry.
ANCHOR_EVERY = 25


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for a single descent run; all constants live here so
    experiments can replicate exactly."""

    steps: int = 5000
    lr: float = 0.05
    lr_decay: float = 0.5
    batch_n: int = 512
    batch_m: int = 512
    seed: int = 0
    spectral_projection: float | None = None
    tol_grad: float = 1e-4
    init_scale: float = 0.1
    plateau_patience: int = 150
    smoothing: float = 0.9
    min_lr_factor: float = 0.015625   # lr floor = lr * this; keeps late mixing alive
    lr_hold_steps: int = 0            # plateau decay disabled before this step
    average_tail: float = 0.2         # Polyak-average this trailing fraction; 0 = best iterate
    angle_every: int = 0              # checkpoint cadence for angle tracking; 0 = off

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.lr <= 0.0:
            raise ValueError("lr must be positive")
        if self.tol_grad <= 0.0:
            raise ValueError("tol_grad must be positive")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must lie in (0, 1]")
        if not 0.0 <= self.average_tail <= 1.0:
            raise ValueError("average_tail must lie in [0, 1]")

    def updated(self, **overrides) -> "TrainConfig":
        return replace(self, **overrides)


@dataclass
class TrainTrace:
    """Per-step history of one run plus end-of-run flags."""

    losses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grad_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma_maxes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    checkpoint_steps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    checkpoint_angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    best_step: int = -1
    best_loss: float = math.inf
    converged_step: int | None = None
    collapsed: bool = False
    aborted: str | None = None
    lr_restarts: int = 0

    @property
    def steps_run(self) -> int:
        return self.losses.size

    def to_csv(self, path) -> None:
        """Stream the trace as step,loss,grad_norm,max_principal_angle rows."""
        angles = dict(zip(self.checkpoint_steps.tolist(), self.checkpoint_angles.tolist()))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "loss", "grad_norm", "max_principal_angle"])
            for step in range(self.steps_run):
                angle = angles.get(step, "")
                writer.writerow([step, repr(float(self.losses[step])),
                                 repr(float(self.grad_norms[step])),
                                 repr(float(angle)) if angle != "" else ""])


class TrainingAbort(RuntimeError):
    """Raised when the objective goes non-finite even after an lr retry."""

    def __init__(self, message: str, trace: TrainTrace):
        super().__init__(message)
        self.trace = trace


def spectral_clip(a: np.ndarray, bound: float) -> np.ndarray:
    """Clip the singular values of a at ``bound``; idempotent.

    Maps already inside the ball are returned unchanged (bitwise), so
    repeated application is exact.
    """
    if bound <= 0.0:
        raise ValueError("bound must be positive")
    a = np.asarray(a, dtype=float)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] <= bound:
        return a
    return (u * np.minimum(s, bound)) @ vt


def init_projection(d: int, r: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Random (d, r) map with i.i.d. N(0, (scale/sqrt(d))^2) entries.

    Redraws (up to a bounded number of attempts) if the smallest singular
    value falls below 1e-8, so the returned map always has full column rank.
    """
    if scale <= 0.0:
        raise ValueError("init scale must be positive (scale=0 is rank-deficient)")
    if r > d:
        import warnings
        warnings.warn(f"projection rank r={r} exceeds ambient dimension d={d}")
    for _ in range(100):
        a = rng.standard_normal((d, r)) * (scale / math.sqrt(d))
        if np.linalg.svd(a, compute_uv=False)[-1] > 1e-8:
            return a
    raise RuntimeError("failed to draw a full-rank initialization in 100 attempts")


def _max_angle(a: np.ndarray, reference: Subspace, rank_tol: float) -> float:
    basis = orthonormal_columns(a, rank_tol=rank_tol)
    if basis.shape[1] == 0:
        return 0.0
    cosines = np.linalg.svd(basis.T @ reference.basis, compute_uv=False)
    return float(np.max(np.arccos(np.clip(cosines, 0.0, 1.0))))


def train(objective: Callable, init: np.ndarray, cfg: TrainConfig,
          batch_provider: Callable[[int], object] | None = None,
          angle_reference: Subspace | None = None,
          angle_rank_tol: float = 1e-2) -> tuple[np.ndarray, TrainTrace]:
    """Run (projected) gradient descent and return (best iterate, trace).

    ``objective(a, batch) -> (loss, grad)``; ``batch_provider(step)`` supplies
    the batch for each step (must be deterministic in (seed, step)) or is
    omitted for population objectives. A non-finite loss restores the last
    sane anchor iterate, halves the step size and retries once before
    aborting with the trace attached; a too-large step size therefore
    self-corrects instead of killing the run, and repeated blow-ups keep
    halving. Stops early once the smoothed gradient norm falls below
    ``cfg.tol_grad``.

    With ``cfg.average_tail > 0`` the returned map is the average of the
    iterates over that trailing fraction of the executed steps: the mean of a
    stationary noisy trajectory suppresses batch noise that no single visited
    iterate escapes, and a convex combination of feasible iterates stays
    inside the spectral-norm ball. With ``average_tail == 0`` the best-loss
    iterate is returned instead.
    """
    a = np.array(init, dtype=float)
    if a.ndim != 2:
        raise ValueError("initial map must be a d x r matrix")
    if not np.isfinite(a).all():
        raise ValueError("initial map has non-finite entries")
    bound = cfg.spectral_projection
    if bound is not None:
        a = spectral_clip(a, bound)

    losses = np.empty(cfg.steps)
    grad_norms = np.empty(cfg.steps)
    sigma_maxes = np.empty(cfg.steps)
    ck_steps: list[int] = []
    ck_angles: list[float] = []

    trace = TrainTrace()
    best_loss = math.inf
    best_a = a.copy()
    best_step = -1
    lr = cfg.lr
    min_lr = cfg.lr * cfg.min_lr_factor
    ema_loss = None
    ema_grad = None
    plateau_best = math.inf
    stall = 0
    anchor = a.copy()
    retried = False
    converged_step = None
    tail_start = int(math.floor(cfg.steps * (1.0 - cfg.average_tail)))
    tail_sum = np.zeros_like(a)
    tail_count = 0

    def _finalize(steps_done: int) -> TrainTrace:
        trace.losses = losses[:steps_done]
        trace.grad_norms = grad_norms[:steps_done]
        trace.sigma_maxes = sigma_maxes[:steps_done]
        trace.checkpoint_steps = np.asarray(ck_steps, dtype=int)
        trace.checkpoint_angles = np.asarray(ck_angles)
        trace.best_step = best_step
        trace.best_loss = best_loss
        trace.converged_step = converged_step
        sig = sigma_maxes[steps_done - 1] if steps_done else np.linalg.norm(a, 2)
        trace.collapsed = bool(sig < COLLAPSE_SIGMA)
        return trace

    step = 0
    while step < cfg.steps:
        batch = batch_provider(step) if batch_provider is not None else None
        try:
            loss, grad = objective(a, batch) if batch is not None else objective(a, None)
            bad = not (np.isfinite(loss) and np.isfinite(grad).all())
        except FloatingPointError:
            bad = True
        if bad:
            if not retried:
                # restore the last sane iterate and take smaller steps; the
                # interval since the anchor is garbage, so smoothing and the
                # tail average restart too
                a = anchor.copy()
                lr *= 0.5
                retried = True
                trace.lr_restarts += 1
                ema_loss = ema_grad = None
                plateau_best = math.inf
                stall = 0
                tail_sum = np.zeros_like(a)
                tail_count = 0
                continue
            trace.aborted = f"non-finite loss at step {step}"
            raise TrainingAbort(trace.aborted, _finalize(step))
        retried = False

        losses[step] = loss
        with np.errstate(over="ignore"):   # wild pre-recovery iterates
            grad_norm = float(np.linalg.norm(grad))
        grad_norms[step] = grad_norm
        sigma = float(np.linalg.norm(a, 2))
        sigma_maxes[step] = sigma
        sane = sigma <= SANE_SIGMA
        if sane and step % ANCHOR_EVERY == 0:
            anchor = a.copy()
        if sane and loss < best_loss:
            best_loss = loss
            best_a = a.copy()
            best_step = step
        if sane and step >= tail_start:
            tail_sum += a
            tail_count += 1

        if cfg.angle_every and angle_reference is not None and step % cfg.angle_every == 0:
            ck_steps.append(step)
            ck_angles.append(_max_angle(a, angle_reference, angle_rank_tol))

        ema_loss = loss if ema_loss is None else cfg.smoothing * ema_loss + (1 - cfg.smoothing) * loss
        ema_grad = grad_norm if ema_grad is None else cfg.smoothing * ema_grad + (1 - cfg.smoothing) * grad_norm

        if ema_grad < cfg.tol_grad:
            converged_step = step
            step += 1
            break

        if ema_loss < plateau_best - 1e-12:
            plateau_best = ema_loss
            stall = 0
        elif step >= cfg.lr_hold_steps:
            stall += 1
            if stall >= cfg.plateau_patience:
                lr = max(lr * cfg.lr_decay, min_lr)
                stall = 0

        a = a - lr * grad
        if bound is not None:
            a = spectral_clip(a, bound)
        step += 1

    final = tail_sum / tail_count if tail_count > 0 else best_a
    if angle_reference is not None and cfg.angle_every:
        ck_steps.append(step - 1)
        ck_angles.append(_max_angle(final, angle_reference, angle_rank_tol))

    return final, _finalize(step)
