"""Scenario engine: synthetic model recipes, the six methods, sweeps, and CSV results.

A sweep walks a pinned parameter grid (noise bias, covariance flatness,
projection rank, or within-span scaling), runs the requested methods at every
(cell, seed), and appends one CSV row per run. Rows are keyed by
(experiment, method, param, value, seed) so interrupted sweeps can resume;
every random stage derives its generator from the row seed through named
substreams, making reruns reproducible regardless of scheduling.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.linalg import qr

from .clustering import evaluate_projection
from .losses import Batch, ClipBatch, SiamConfig, clip_loss_and_grads, \
    infonce_loss_and_grad, simsiam_loss_and_grad
from .models import ClipGMM, PairedGMM, SharedGMM, sample_clip, sample_gmm, sample_pairs
from .rng import substream, substream_seed
from .subspaces import ANGLE_TOL_ANALYTIC, ANGLE_TOL_TRAINED, Subspace, SubspaceReport, \
    containment_report, empirical_svd_subspace, fisher_directions, fisher_discriminant, \
    fisher_subspace, orthonormal_columns, svd_subspace
from .training import TrainConfig, TrainTrace, init_projection, train

__all__ = [
    "METHODS",
    "CSV_HEADER",
    "ScenarioConfig",
    "ResultRow",
    "MethodResult",
    "make_benchmark_model",
    "make_scaling_model",
    "make_clip_model",
    "make_pancake_model",
    "simsiam_xi_bound",
    "run_method",
    "run_clip_method",
    "run_sweep",
    "pancake_demo",
    "collapse_demo",
]

METHODS = ("ambient", "random", "optimal", "pca", "infonce", "simsiam")
EXPERIMENTS = ("delta_sweep", "flatness_sweep", "rank_sweep", "scaling_sweep",
               "clip", "pancake_demo", "collapse_demo")
CSV_HEADER = ("experiment", "method", "param", "value", "seed",
              "ari", "ami", "angle_deg", "J", "wallclock_s")

# Singular values of a gradient-descent iterate carry an optimization noise
# floor (tail-averaged runs land around 1e-4..6e-2 relative, worst for noisy
# low-bias pairings); rank truncation for trained maps sits above it, while
# analytic constructions keep a tight tolerance. Learned scalings compress
# discriminant ratios, so a genuine direction this far below the leading one
# would need a spread far beyond the benchmark recipes.
RANK_TOL_TRAINED = 1e-1


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment's grid, model shape, methods, and engine overrides."""

    experiment: str
    K: int = 10
    d: int = 100
    r: int = 10
    delta: float = 1.0
    kappa: float = 10.0
    n_train: int = 20000
    n_eval: int = 5000
    seeds: tuple = (0, 1, 2, 3, 4)
    methods: tuple = METHODS
    orthonormalize: bool = False
    d1: int = 12
    d2: int = 8
    aligned: bool = True
    param_values: tuple | None = None   # overrides the pinned grid when set
    train: dict = field(default_factory=dict)
    restarts: int = 10
    kmeans_max_iter: int = 300
    xi: float | None = None             # None = 0.5 * guarantee bound, per model
    # Ridge on the map(s) for the first ridge_frac of the contrastive
    # trainings (single- and two-modality; the non-contrastive loss keeps its
    # own pinned penalty). Unidentified or weakly-restored directions (factor
    # components in the partner's null space, noise-floor leftovers) feel
    # little or no gradient, so descent alone leaves them at init/noise scale;
    # the early ridge drives the run toward the minimum-norm minimizer and is
    # then switched off so its identity-metric bias relaxes away while the
    # dead directions stay dead.
    ridge: float = 0.05
    ridge_frac: float = 0.3

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"expected one of {EXPERIMENTS}")
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.kappa < 1.0:
            raise ValueError("kappa must be at least 1")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.r < 1:
            raise ValueError("r must be at least 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.param_values is not None:
            object.__setattr__(self, "param_values", tuple(float(v) for v in self.param_values))

    def train_config(self, seed: int, **extra) -> TrainConfig:
        merged = dict(self.train)
        merged.update(extra)
        merged["seed"] = seed
        return TrainConfig(**merged)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    method: str
    param: str
    value: float
    seed: int
    ari: float
    ami: float
    angle_deg: float
    J: float
    wallclock_s: float

    def __post_init__(self):
        for name, value in (("ari", self.ari), ("ami", self.ami)):
            if not (math.isfinite(value) and value <= 1.0):
                raise ValueError(f"{name} out of range: {value!r}")
        if not 0.0 <= self.angle_deg <= 90.0 + 1e-9:
            raise ValueError("angle_deg out of range")

    def key(self) -> tuple:
        return (self.experiment, self.method, self.param, repr(float(self.value)),
                str(self.seed))

    def csv_values(self) -> list[str]:
        return [self.experiment, self.method, self.param, repr(float(self.value)),
                str(self.seed), repr(float(self.ari)), repr(float(self.ami)),
                repr(float(self.angle_deg)), repr(float(self.J)),
                repr(float(self.wallclock_s))]


@dataclass
class MethodResult:
    """A learned map plus its subspace diagnostics."""

    mapping: np.ndarray
    report: SubspaceReport
    j_value: float
    trace: TrainTrace | None = None
    wallclock_s: float = 0.0


# ---------------------------------------------------------------------------
# model recipes


def _span_projector(means: np.ndarray) -> np.ndarray:
    basis = orthonormal_columns(means.T, rank_tol=1e-12)
    return basis @ basis.T


def make_benchmark_model(k: int, d: int, kappa: float,
                          rng: np.random.Generator) -> SharedGMM:
    """Equal-weight mixture with zero-sum Gaussian means and unit variance on
    the mean span; variance is inflated by ``kappa`` on the orthogonal
    complement."""
    if d < k - 1:
        raise ValueError(f"need d >= K-1, got d={d}, K={k}")
    if kappa < 1.0:
        raise ValueError("kappa must be at least 1")
    means = rng.standard_normal((k - 1, d))
    means = np.vstack([means, -means.sum(axis=0)])
    proj = _span_projector(means)
    cov = np.eye(d) + (kappa - 1.0) * (np.eye(d) - proj)
    cov = 0.5 * (cov + cov.T)
    return SharedGMM(np.full(k, 1.0 / k), means, cov)


def make_scaling_model(k: int, kappa: float, rng: np.random.Generator) -> SharedGMM:
    """Ambient dimension pinned to the mean-span dimension (d = K-1), with
    variance inflated by ``kappa`` along floor(K/2) random orthogonal
    directions inside the span."""
    if kappa < 1.0:
        raise ValueError("kappa must be at least 1")
    d = k - 1
    means = rng.standard_normal((k - 1, d))
    means = np.vstack([means, -means.sum(axis=0)])
    n_dirs = k // 2
    g = rng.standard_normal((d, n_dirs))
    q, _ = qr(g, mode="economic")
    cov = np.eye(d) + (kappa - 1.0) * (q @ q.T)
    cov = 0.5 * (cov + cov.T)
    return SharedGMM(np.full(k, 1.0 / k), means, cov)


def _random_spd(d: int, rng: np.random.Generator,
                eig_range: tuple[float, float] = (0.5, 2.0)) -> np.ndarray:
    q, _ = qr(rng.standard_normal((d, d)))
    eigs = rng.uniform(*eig_range, size=d)
    cov = (q * eigs) @ q.T
    return 0.5 * (cov + cov.T)


def _sqrt_spd(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    return (vecs * np.sqrt(vals)) @ vecs.T


def make_clip_model(k: int, d1: int, d2: int, aligned: bool,
                    rng: np.random.Generator, centered: bool = True) -> ClipGMM:
    """Two-modality mixture with random well-conditioned covariances.

    ``aligned=True`` builds whitened means equal across modalities on the
    shared leading coordinates (padding to each side's dimension), the
    configuration under which the two learned spans can match the full
    per-modality reference subspaces. ``centered`` subtracts the weighted
    mean so each modality's means sum to zero; with K=1 that degenerates the
    reference subspace, so pass centered=False to keep it one-dimensional.
    """
    cov_v = _random_spd(d1, rng)
    cov_t = _random_spd(d2, rng)
    if aligned:
        m = min(d1, d2)
        eta = rng.standard_normal((k, m))
        if centered:
            eta = eta - eta.mean(axis=0)
        pad_v = np.zeros((k, d1))
        pad_v[:, :m] = eta
        pad_t = np.zeros((k, d2))
        pad_t[:, :m] = eta
        means_v = pad_v @ _sqrt_spd(cov_v).T
        means_t = pad_t @ _sqrt_spd(cov_t).T
    else:
        means_v = rng.standard_normal((k, d1))
        means_t = rng.standard_normal((k, d2))
        if centered:
            means_v = means_v - means_v.mean(axis=0)
            means_t = means_t - means_t.mean(axis=0)
    return ClipGMM(np.full(k, 1.0 / k), means_v, cov_v, means_t, cov_t)


def make_pancake_model(d: int = 3, separation: float = 2.5,
                       flat_variance: float = 50.0) -> SharedGMM:
    """Two narrow components split along the first axis, wide everywhere else.

    The top variance directions are orthogonal to the discriminating axis, so
    the spectral baseline projects the two modes onto each other.
    """
    if d < 2:
        raise ValueError("pancake model needs d >= 2")
    means = np.zeros((2, d))
    means[0, 0] = separation
    means[1, 0] = -separation
    cov = np.diag([1.0] + [flat_variance] * (d - 1))
    return SharedGMM(np.array([0.5, 0.5]), means, cov)


def simsiam_xi_bound(model: SharedGMM, delta: float) -> float:
    """The penalty-weight threshold delta*lmin/(1+lmin) below which the
    non-contrastive optimum spans the full reference subspace."""
    vals, _ = fisher_directions(model)
    lmin = float(vals[-1])
    return delta * lmin / (1.0 + lmin)


# ---------------------------------------------------------------------------
# methods


def _pair_stream_provider(pair_model: PairedGMM, cfg: TrainConfig):
    """Fresh pairs and negatives every step, keyed by (seed, step).

    Re-drawing beats subsampling a fixed pool here: a finite pool's
    cross-moment carries a sampling error of order kappa*sqrt(d)/sqrt(n) on
    the noise directions, which the attractive term then learns as if it were
    signal; the synthetic model is the data source, so streaming is exact.
    """

    def provider(step: int) -> Batch:
        pairs = sample_pairs(pair_model, cfg.batch_n, substream(cfg.seed, "batch", step))
        negatives = sample_gmm(pair_model.base, cfg.batch_m,
                               substream(cfg.seed, "negatives", step))
        return Batch(pairs.x, pairs.xhat, negatives.points)

    return provider


def _with_ridge_schedule(base_provider, scenario: ScenarioConfig, cfg: TrainConfig):
    cutoff = int(cfg.steps * scenario.ridge_frac)

    def provider(step: int):
        return base_provider(step), (scenario.ridge if step < cutoff else 0.0)

    return provider


def _diagnose(mapping: np.ndarray, model: SharedGMM, reference: Subspace,
              trained: bool) -> tuple[SubspaceReport, float]:
    rank_tol = RANK_TOL_TRAINED if trained else 1e-10
    angle_tol = ANGLE_TOL_TRAINED if trained else ANGLE_TOL_ANALYTIC
    report = containment_report(mapping, reference, rank_tol=rank_tol, angle_tol=angle_tol)
    if report.dim == 0:
        return report, 0.0
    basis = orthonormal_columns(mapping, rank_tol=rank_tol)
    return report, fisher_discriminant(model, basis)


def run_method(method: str, model: SharedGMM, scenario: ScenarioConfig,
               seed: int, delta: float | None = None,
               reference: Subspace | None = None) -> MethodResult:
    """Produce one method's map for one (model, seed) and diagnose it.

    ``delta`` defaults to the scenario's; ``reference`` (the containment
    target) is recomputed from the model when not supplied.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    delta = scenario.delta if delta is None else float(delta)
    if reference is None:
        reference = fisher_subspace(model)
    d, r = model.dim, scenario.r
    start = time.perf_counter()
    trace = None
    trained = method in ("infonce", "simsiam")

    if method == "ambient":
        mapping = np.eye(d)
    elif method == "random":
        g = substream(seed, "random-map")
        q, _ = qr(g.standard_normal((d, r)), mode="economic")
        mapping = q
    elif method == "optimal":
        _, dirs = fisher_directions(model)
        mapping = orthonormal_columns(dirs[:, :min(r, dirs.shape[1])], rank_tol=1e-12)
    elif method == "pca":
        points = sample_gmm(model, scenario.n_train,
                            substream(seed, "pca-data")).points
        mapping = empirical_svd_subspace(points, r).basis
    else:
        cfg = scenario.train_config(substream_seed(seed, "train", method))
        base_provider = _pair_stream_provider(PairedGMM(model, delta), cfg)
        init = init_projection(d, r, cfg.init_scale, substream(cfg.seed, "init"))
        if method == "infonce":
            if "lr_hold_steps" not in scenario.train:
                # keep the step size alive through the ridge phase and the
                # post-ridge relaxation; plateau decay only after that
                cfg = cfg.updated(lr_hold_steps=int(cfg.steps * (scenario.ridge_frac + 0.2)))
            provider = _with_ridge_schedule(base_provider, scenario, cfg)

            def objective(a, payload):
                batch, ridge = payload
                loss, grad = infonce_loss_and_grad(a, batch)
                if ridge:
                    loss += ridge * float(np.sum(a * a))
                    grad = grad + 2.0 * ridge * a
                return loss, grad
        else:
            provider = base_provider
            xi = scenario.xi
            if xi is None:
                xi = 0.5 * simsiam_xi_bound(model, delta)
            siam = SiamConfig(xi=xi, spectral_bound=1.0)
            cfg = cfg.updated(spectral_projection=siam.spectral_bound)

            def objective(a, batch, _cfg=siam):
                return simsiam_loss_and_grad(a, batch, _cfg)

        mapping, trace = train(objective, init, cfg, batch_provider=provider,
                               angle_reference=reference)

    if scenario.orthonormalize:
        mapping, _ = qr(mapping, mode="economic")   # rank-blind on purpose

    report, j_value = _diagnose(mapping, model, reference, trained)
    wall = time.perf_counter() - start
    return MethodResult(mapping, report, j_value, trace=trace, wallclock_s=wall)


def run_clip_method(model: ClipGMM, scenario: ScenarioConfig, seed: int
                    ) -> tuple[MethodResult, MethodResult]:
    """Train the two-modality contrastive objective; one result per side.

    The two maps are stacked into a single matrix so the scalar trainer can
    drive them jointly; gradients are unstacked inside the objective.
    """
    d1 = model.means_v.shape[1]
    d2 = model.means_t.shape[1]
    r = scenario.r
    cfg = scenario.train_config(substream_seed(seed, "train", "clip"))
    if "lr_hold_steps" not in scenario.train:
        cfg = cfg.updated(lr_hold_steps=int(cfg.steps * (scenario.ridge_frac + 0.2)))
    marginal_v = model.marginal_v()
    ridge_cutoff = int(cfg.steps * scenario.ridge_frac)

    def provider(step: int):
        pairs = sample_clip(model, cfg.batch_n, substream(cfg.seed, "batch", step))
        negatives = sample_gmm(marginal_v, cfg.batch_m,
                               substream(cfg.seed, "negatives", step))
        ridge = scenario.ridge if step < ridge_cutoff else 0.0
        return ClipBatch(pairs.x_v, pairs.x_t, negatives.points), ridge

    def objective(stacked, payload):
        batch, ridge = payload
        a_v, a_t = stacked[:d1], stacked[d1:]
        loss, g_v, g_t = clip_loss_and_grads(a_v, a_t, batch)
        if ridge:
            loss += ridge * float(np.sum(stacked * stacked))
            return loss, np.vstack([g_v, g_t]) + 2.0 * ridge * stacked
        return loss, np.vstack([g_v, g_t])

    g = substream(cfg.seed, "init")
    init = np.vstack([init_projection(d1, r, cfg.init_scale, g),
                      init_projection(d2, r, cfg.init_scale, g)])
    start = time.perf_counter()
    stacked, trace = train(objective, init, cfg, batch_provider=provider)
    wall = time.perf_counter() - start

    results = []
    for a, marginal in ((stacked[:d1], marginal_v), (stacked[d1:], model.marginal_t())):
        reference = fisher_subspace(marginal)
        report, j_value = _diagnose(a, marginal, reference, trained=True)
        results.append(MethodResult(a, report, j_value, trace=trace,
                                    wallclock_s=wall / 2.0))
    return results[0], results[1]


# ---------------------------------------------------------------------------
# sweeps


def _grid(scenario: ScenarioConfig) -> tuple[str, tuple]:
    if scenario.param_values is not None:
        names = {"delta_sweep": "delta", "flatness_sweep": "flatness",
                 "rank_sweep": "r", "scaling_sweep": "kappa",
                 "clip": "aligned", "pancake_demo": "separation",
                 "collapse_demo": "xi_over_bound"}
        return names[scenario.experiment], scenario.param_values
    if scenario.experiment == "delta_sweep":
        return "delta", tuple(round(0.1 * i, 10) for i in range(1, 11))
    if scenario.experiment == "flatness_sweep":
        return "flatness", tuple(round(0.1 * i, 10) for i in range(1, 10))
    if scenario.experiment == "rank_sweep":
        return "r", tuple(float(r) for r in range(1, 2 * scenario.K + 1))
    if scenario.experiment == "scaling_sweep":
        return "kappa", tuple(round(1.0 / (0.1 * i), 10) for i in range(9, 0, -1))
    if scenario.experiment == "clip":
        return "aligned", (0.0, 1.0)
    if scenario.experiment == "pancake_demo":
        return "separation", (2.5,)
    return "xi_over_bound", (0.0, 0.5, 2.0)


def _cell_model(scenario: ScenarioConfig, param: str, value: float, seed: int):
    g = substream(seed, "model")
    if scenario.experiment == "delta_sweep" or scenario.experiment == "rank_sweep":
        return make_benchmark_model(scenario.K, scenario.d, scenario.kappa, g)
    if scenario.experiment == "flatness_sweep":
        return make_benchmark_model(scenario.K, scenario.d, 1.0 / value, g)
    if scenario.experiment == "scaling_sweep":
        return make_scaling_model(scenario.K, value, g)
    if scenario.experiment == "clip":
        return make_clip_model(scenario.K, scenario.d1, scenario.d2,
                               aligned=bool(value), rng=g)
    if scenario.experiment == "pancake_demo":
        return make_pancake_model(separation=value)
    raise ValueError(f"no model recipe for experiment {scenario.experiment!r}")


def _row_for_result(scenario, method, param, value, seed, result, ari_v, ami_v):
    angle = math.degrees(result.report.max_angle)
    return ResultRow(scenario.experiment, method, param, float(value), int(seed),
                     ari_v, ami_v, angle, result.j_value, result.wallclock_s)


def _existing_keys(path: str) -> set:
    keys = set()
    if not os.path.exists(path):
        return keys
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            keys.add((row["experiment"], row["method"], row["param"],
                      row["value"], row["seed"]))
    return keys


def run_sweep(scenario: ScenarioConfig, out_path: str, resume: bool = False) -> int:
    """Execute the scenario grid and append one CSV row per (cell, method, seed).

    Rows are flushed as they are produced, so an aborted sweep leaves a valid
    partial CSV; a rerun with ``resume=True`` fills in only the missing keys.
    Returns the number of rows written.
    """
    param, values = _grid(scenario)
    done = _existing_keys(out_path) if resume else set()
    fresh = not (resume and os.path.exists(out_path))
    written = 0
    with open(out_path, "w" if fresh else "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_HEADER)
            fh.flush()
        for value in values:
            for seed in scenario.seeds:
                written += _run_cell(scenario, param, value, seed, done, writer, fh)
    return written


def _run_cell(scenario, param, value, seed, done, writer, fh) -> int:
    if scenario.experiment == "clip":
        methods = ("clip_v", "clip_t")
    else:
        methods = scenario.methods
    missing = [m for m in methods
               if (scenario.experiment, m, param, repr(float(value)), str(seed)) not in done]
    if not missing:
        return 0

    written = 0
    if scenario.experiment == "clip":
        model = _cell_model(scenario, param, value, seed)
        res_v, res_t = run_clip_method(model, scenario, seed)
        eval_pool = sample_clip(model, scenario.n_eval, substream(seed, "eval"))
        for name, res, pts in (("clip_v", res_v, eval_pool.x_v),
                               ("clip_t", res_t, eval_pool.x_t)):
            if name not in missing:
                continue
            ari_v, ami_v = evaluate_projection(
                res.mapping, pts, eval_pool.labels, scenario.K,
                restarts=scenario.restarts, max_iter=scenario.kmeans_max_iter,
                rng=substream(seed, "kmeans", name))
            row = _row_for_result(scenario, name, param, value, seed, res, ari_v, ami_v)
            writer.writerow(row.csv_values())
            fh.flush()
            written += 1
        return written

    model = _cell_model(scenario, param, value, seed)
    reference = fisher_subspace(model)
    eval_sample = sample_gmm(model, scenario.n_eval, substream(seed, "eval"))
    delta = value if scenario.experiment == "delta_sweep" else scenario.delta
    if scenario.experiment == "rank_sweep":
        scenario_cell = ScenarioConfig(**{**asdict(scenario), "r": int(value)})
    else:
        scenario_cell = scenario
    for method in missing:
        result = run_method(method, model, scenario_cell, seed, delta=delta,
                            reference=reference)
        ari_v, ami_v = evaluate_projection(
            result.mapping, eval_sample.points, eval_sample.labels, scenario.K,
            restarts=scenario.restarts, max_iter=scenario.kmeans_max_iter,
            rng=substream(seed, "kmeans", method))
        row = _row_for_result(scenario_cell, method, param, value, seed,
                              result, ari_v, ami_v)
        writer.writerow(row.csv_values())
        fh.flush()
        written += 1
    return written


# ---------------------------------------------------------------------------
# demos


def pancake_demo(seed: int = 0, scenario: ScenarioConfig | None = None) -> dict:
    """Two narrow, widely spread components: the spectral pick is the worst
    one-dimensional projection while the contrastive one separates the modes."""
    if scenario is None:
        # lr scaled down for the wide-variance axes: pair scores grow with the
        # flat variance, and the default step size oversteps into overflow
        scenario = ScenarioConfig(experiment="pancake_demo", K=2, d=3, r=1,
                                  n_train=8000, n_eval=4000, seeds=(seed,),
                                  train={"steps": 2500, "batch_n": 256,
                                         "batch_m": 256, "lr": 0.005})
    model = make_pancake_model(d=scenario.d)
    reference = fisher_subspace(model)
    spectral = svd_subspace(model, 1)
    j_spectral = fisher_discriminant(model, spectral.basis)
    g = substream(seed, "random-dirs")
    j_random = []
    for _ in range(100):
        v = g.standard_normal((model.dim, 1))
        j_random.append(fisher_discriminant(model, v))
    eval_sample = sample_gmm(model, scenario.n_eval, substream(seed, "eval"))
    ari_pca, _ = evaluate_projection(spectral.basis, eval_sample.points,
                                     eval_sample.labels, 2,
                                     rng=substream(seed, "kmeans", "pca"))
    result = run_method("infonce", model, scenario, seed, reference=reference)
    ari_info, _ = evaluate_projection(result.mapping, eval_sample.points,
                                      eval_sample.labels, 2,
                                      rng=substream(seed, "kmeans", "infonce"))
    return {
        "j_spectral": j_spectral,
        "j_random_min": float(min(j_random)),
        "j_random_beats_spectral": int(sum(j > j_spectral for j in j_random)),
        "ari_pca": ari_pca,
        "ari_infonce": ari_info,
        "max_angle_deg_infonce": math.degrees(result.report.max_angle),
    }


def collapse_demo(seed: int = 0) -> dict:
    """Two components with means on two axes, rank-one projection.

    The contrastive run reports which line it learned (the anti-diagonal is
    the separating one); the non-contrastive run with an over-sized penalty
    reports its shrinking spectrum. Directions are reported, not asserted.
    """
    d = 4
    means = np.zeros((2, d))
    means[0, 0] = 2.0
    means[1, 1] = 2.0
    center = means.mean(axis=0)
    model = SharedGMM(np.array([0.5, 0.5]), means - center, np.eye(d))
    scenario = ScenarioConfig(experiment="collapse_demo", K=2, d=d, r=1,
                              n_train=8000, n_eval=2000, seeds=(seed,),
                              train={"steps": 1500, "batch_n": 256, "batch_m": 256})
    reference = fisher_subspace(model)
    info = run_method("infonce", model, scenario, seed, delta=1.0, reference=reference)
    direction = info.mapping[:, 0]
    direction = direction / np.linalg.norm(direction)
    anti_diag = np.zeros(d)
    anti_diag[0], anti_diag[1] = 1.0, -1.0
    anti_diag /= np.linalg.norm(anti_diag)
    align = abs(float(direction @ anti_diag))

    bound = simsiam_xi_bound(model, 1.0)
    big_xi = ScenarioConfig(**{**asdict(scenario), "xi": 2.0 * bound})
    siam = run_method("simsiam", model, big_xi, seed, delta=1.0, reference=reference)
    return {
        "infonce_direction": direction.tolist(),
        "infonce_alignment_with_separating_line": align,
        "simsiam_xi": 2.0 * bound,
        "simsiam_xi_bound": bound,
        "simsiam_sigma_max": float(np.linalg.norm(siam.mapping, 2)),
        "simsiam_collapsed": bool(siam.trace.collapsed),
    }
