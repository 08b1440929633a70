"""Command-line front end: generate models, train maps, sweep, evaluate, demo.

Exit codes: 0 success, 2 configuration error (bad flags, malformed JSON,
invariant violations), 3 numerical abort during a run.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import harness
from .clustering import evaluate_projection
from .models import SharedGMM, model_from_json, sample_gmm
from .rng import substream
from .training import TrainingAbort

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmmssl")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a model JSON file")
    gen.add_argument("--kind", required=True,
                     choices=["benchmark", "scaling", "clip", "pancake"])
    gen.add_argument("--k", type=int, default=10)
    gen.add_argument("--d", type=int, default=100)
    gen.add_argument("--kappa", type=float, default=10.0)
    gen.add_argument("--d1", type=int, default=12)
    gen.add_argument("--d2", type=int, default=8)
    gen.add_argument("--aligned", action="store_true")
    gen.add_argument("--uncentered", action="store_true")
    gen.add_argument("--separation", type=float, default=2.5)
    gen.add_argument("--flat-variance", type=float, default=50.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    tr = sub.add_parser("train", help="run one method against one model")
    tr.add_argument("--model", required=True)
    tr.add_argument("--method", required=True, choices=list(harness.METHODS))
    tr.add_argument("--r", type=int, default=10)
    tr.add_argument("--delta", type=float, default=1.0)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--n-train", type=int, default=20000)
    tr.add_argument("--steps", type=int)
    tr.add_argument("--lr", type=float)
    tr.add_argument("--batch-n", type=int)
    tr.add_argument("--batch-m", type=int)
    tr.add_argument("--xi", type=float)
    tr.add_argument("--orthonormalize", action="store_true")
    tr.add_argument("--trace")
    tr.add_argument("--out", required=True)

    sw = sub.add_parser("sweep", help="run a scenario grid to CSV")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--resume", action="store_true")

    ev = sub.add_parser("eval", help="score a stored mapping on fresh draws")
    ev.add_argument("--model", required=True)
    ev.add_argument("--mapping", required=True)
    ev.add_argument("--n", type=int, default=5000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--restarts", type=int, default=10)

    dm = sub.add_parser("demo", help="run a narrative demo")
    dm.add_argument("name", choices=["pancake", "collapse"])
    dm.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_generate(args) -> int:
    rng = substream(args.seed, "generate")
    if args.kind == "benchmark":
        model = harness.make_benchmark_model(args.k, args.d, args.kappa, rng)
    elif args.kind == "scaling":
        model = harness.make_scaling_model(args.k, args.kappa, rng)
    elif args.kind == "clip":
        model = harness.make_clip_model(args.k, args.d1, args.d2, args.aligned,
                                        rng, centered=not args.uncentered)
    else:
        model = harness.make_pancake_model(d=args.d if args.d != 100 else 3,
                                           separation=args.separation,
                                           flat_variance=args.flat_variance)
    with open(args.out, "w") as fh:
        fh.write(model.to_json())
    return EXIT_OK


def _load_shared_model(path: str) -> SharedGMM:
    with open(path) as fh:
        model = model_from_json(fh.read())
    if not isinstance(model, SharedGMM):
        raise ValueError("expected a single-modality model JSON")
    return model


def _cmd_train(args) -> int:
    model = _load_shared_model(args.model)
    overrides = {k: v for k, v in (("steps", args.steps), ("lr", args.lr),
                                   ("batch_n", args.batch_n), ("batch_m", args.batch_m))
                 if v is not None}
    scenario = harness.ScenarioConfig(
        experiment="delta_sweep", K=model.n_components, d=model.dim, r=args.r,
        delta=args.delta, n_train=args.n_train, seeds=(args.seed,),
        orthonormalize=args.orthonormalize, train=overrides, xi=args.xi)
    result = harness.run_method(args.method, model, scenario, args.seed)
    with open(args.out, "w") as fh:
        json.dump({"matrix": result.mapping.tolist()}, fh)
    if args.trace and result.trace is not None:
        result.trace.to_csv(args.trace)
    summary = {
        "method": args.method,
        "angle_deg": math.degrees(result.report.max_angle),
        "contained": result.report.contained,
        "equal": result.report.equal,
        "dim": result.report.dim,
        "J": result.j_value,
        "wallclock_s": result.wallclock_s,
    }
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        scenario = harness.ScenarioConfig.from_json(fh.read())
    written = harness.run_sweep(scenario, args.out, resume=args.resume)
    print(json.dumps({"rows_written": written, "out": args.out}))
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = _load_shared_model(args.model)
    with open(args.mapping) as fh:
        mapping = np.asarray(json.load(fh)["matrix"], dtype=float)
    sample = sample_gmm(model, args.n, substream(args.seed, "eval"))
    ari_v, ami_v = evaluate_projection(mapping, sample.points, sample.labels,
                                       model.n_components, restarts=args.restarts,
                                       rng=substream(args.seed, "kmeans"))
    print(json.dumps({"ari": ari_v, "ami": ami_v}))
    return EXIT_OK


def _cmd_demo(args) -> int:
    if args.name == "pancake":
        print(json.dumps(harness.pancake_demo(seed=args.seed), indent=2))
    else:
        print(json.dumps(harness.collapse_demo(seed=args.seed), indent=2))
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "sweep": _cmd_sweep,
    "eval": _cmd_eval,
    "demo": _cmd_demo,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, which matches the config-error code
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingAbort, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
