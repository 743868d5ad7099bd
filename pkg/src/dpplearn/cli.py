"""Command-line interface.

Subcommands::

    dpplearn gen        --config synth.cfg --out-dir runs/data
    dpplearn train      --config train.cfg --out-dir runs/fit
    dpplearn infer      --config infer.cfg --out-dir runs/pred
    dpplearn eval       --config eval.cfg  --out-dir runs/scores
    dpplearn experiment --config fig1a.cfg --out-dir runs/fig1a
    dpplearn gradcheck  --n 6 --trials 20

Config files are flat ``key = value`` text (JSON values, dotted keys for
nesting); ``--seed`` overrides any seed in the config.  Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, serialize
from .errors import DataFormatError, NumericalError, ParameterError
from .harness import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_OMEGA_GRID,
    DEFAULT_SIGMA_GRID,
    DEFAULT_TRAIN_SIZES,
    ExperimentSpec,
    run_and_write,
)
from .inference import predict_subset
from .kernel import build_kernel
from .learning import (
    TrainConfig,
    chain_L_to_params,
    finite_difference_check,
    instance_objective,
    train,
)
from .losses import precision_recall_fscore
from .synth import generate_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="dpplearn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="flat key = value config file")
        p.add_argument("--out-dir", default="runs/out", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    common(sub.add_parser("gen", help="generate a synthetic dataset"))
    common(sub.add_parser("train", help="fit parameters to a dataset file"))
    common(sub.add_parser("infer", help="predict subsets for a dataset file"))
    common(sub.add_parser("eval", help="score predictions against labels"))
    common(sub.add_parser("experiment", help="run a canned experiment"))
    g = sub.add_parser("gradcheck", help="finite-difference gradient check")
    g.add_argument("--n", type=int, default=6, help="items per random instance")
    g.add_argument("--trials", type=int, default=20, help="random instances")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--step", type=float, default=1e-5)
    g.add_argument("--tolerance", type=float, default=1e-5)
    return parser


def _load_config(path):
    p = Path(path)
    if not p.exists():
        raise DataFormatError(f"config file not found: {p}")
    return serialize.parse_config(p)


def _out_dir(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_gen(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("synth", {})["seed"] = args.seed
    synth = serialize.synth_config_from_dict(cfg.get("synth", {}))
    ds = generate_dataset(synth)
    out = _out_dir(args)
    for name, split in ds.splits.items():
        header = {
            "split": name,
            "seed": synth.seed,
            "true_theta": ds.true_theta.tolist(),
            "config": {
                "n_items": synth.n_items, "feature_dim": synth.feature_dim,
                "noise_prob": synth.noise_prob, "n_train": synth.n_train,
                "n_holdout": synth.n_holdout, "n_test": synth.n_test,
                "seed": synth.seed,
            },
        }
        serialize.write_instances(out / f"{name}.jsonl", split, header)
    print(f"wrote {out}/train.jsonl, holdout.jsonl, test.jsonl")
    return EXIT_OK


def _cmd_train(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("train", {})["seed"] = args.seed
    config = serialize.train_config_from_dict(cfg.get("train", {}))
    data_path = cfg.get("dataset")
    if not data_path:
        raise DataFormatError(f"{args.config}: missing 'dataset' path")
    _, instances = serialize.read_instances(data_path)
    result = train(instances, config)
    out = _out_dir(args)
    serialize.write_train_result(out / "train_result.json", result, config)
    print(f"trained on {len(instances)} instances, "
          f"{result.iterations_used} iterations, "
          f"final objective {result.objective_trace[-1]!r}")
    return EXIT_OK


def _cmd_infer(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("inference", {})["seed"] = args.seed
    inference = serialize.inference_config_from_dict(cfg.get("inference", {}))
    data_path = cfg.get("dataset")
    model_path = cfg.get("model")
    if not data_path or not model_path:
        raise DataFormatError(f"{args.config}: needs 'dataset' and 'model' paths")
    _, instances = serialize.read_instances(data_path)
    params, config, _ = serialize.read_train_result(model_path)
    preds = []
    for inst in instances:
        L = build_kernel(inst, params, config.similarity)
        preds.append(predict_subset(L, inference))
    out = _out_dir(args)
    serialize.write_predictions(out / "predictions.jsonl", preds)
    print(f"wrote {len(preds)} predictions to {out}/predictions.jsonl")
    return EXIT_OK


def _cmd_eval(args):
    cfg = _load_config(args.config)
    data_path = cfg.get("dataset")
    pred_path = cfg.get("predictions")
    if not data_path or not pred_path:
        raise DataFormatError(f"{args.config}: needs 'dataset' and 'predictions' paths")
    _, instances = serialize.read_instances(data_path)
    preds = serialize.read_predictions(pred_path)
    if len(preds) != len(instances):
        raise DataFormatError(
            f"{len(preds)} predictions for {len(instances)} instances"
        )
    rows = []
    for inst, pred in zip(instances, preds):
        if inst.label is None:
            raise DataFormatError("eval requires labeled instances")
        rows.append(precision_recall_fscore(pred, inst.label))
    out = _out_dir(args)
    with open(out / "scores.csv", "w") as fh:
        fh.write("index,precision,recall,fscore\n")
        for i, s in enumerate(rows):
            fh.write(f"{i},{s.precision!r},{s.recall!r},{s.fscore!r}\n")
    arr = np.array(rows)
    means = arr.mean(axis=0)
    with open(out / "scores_summary.json", "w") as fh:
        json.dump({"n": len(rows), "precision": means[0], "recall": means[1],
                   "fscore": means[2]}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"mean P={means[0]:.4f} R={means[1]:.4f} F={means[2]:.4f} "
          f"over {len(rows)} instances")
    return EXIT_OK


def _cmd_experiment(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("synth", {})["seed"] = args.seed
    spec = experiment_spec_from_dict(cfg)
    rows = run_and_write(spec, args.out_dir)
    print(f"{spec.kind}: wrote {len(rows)} result rows to {args.out_dir}")
    return EXIT_OK


def experiment_spec_from_dict(cfg):
    cfg = dict(cfg)
    return ExperimentSpec(
        kind=cfg.get("kind", "fig1a"),
        synth=serialize.synth_config_from_dict(cfg.get("synth", {})),
        train=serialize.train_config_from_dict(
            {"rel_tolerance": 1e-9, **cfg.get("train", {})}
        ),
        inference=serialize.inference_config_from_dict(cfg.get("inference", {})),
        replicates=cfg.get("replicates", 10),
        methods=tuple(cfg.get("methods", ("mle", "lme"))),
        train_sizes=tuple(cfg.get("train_sizes", DEFAULT_TRAIN_SIZES)),
        sigma_grid=tuple(cfg.get("sigma_grid", DEFAULT_SIGMA_GRID)),
        lambda_grid=tuple(cfg.get("lambda_grid", DEFAULT_LAMBDA_GRID)),
        omega_grid=tuple(cfg.get("omega_grid", DEFAULT_OMEGA_GRID)),
    )


def _cmd_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    from .kernel import GroundSetInstance, SimilarityConfig

    sim = SimilarityConfig(bandwidths=(0.8, 2.0), include_linear=True)
    config = TrainConfig(similarity=sim, lam=1.0, omega=2.0)
    worst = 0.0
    done = 0
    while done < args.trials:
        x = 0.5 * rng.standard_normal((args.n, 3))
        phi = rng.standard_normal((args.n, 3))
        label = tuple(sorted(rng.choice(args.n, size=max(1, args.n // 2),
                                        replace=False).tolist()))
        inst = GroundSetInstance(x, phi, label)
        theta = 0.5 * rng.standard_normal(3)
        weights = np.full(3, 1.0 / 3.0)
        v0 = np.concatenate([theta, weights])
        d = theta.size

        def f(v):
            from .kernel import ModelParams

            return instance_objective(ModelParams(v[:d], v[d:]), inst, config)

        if f(v0) <= 0.05:  # keep clear of the hinge kink
            continue

        def grad(v):
            from .kernel import (
                ModelParams,
                build_kernel,
                marginal_kernel_from_L,
            )
            from .learning import grad_loglik_wrt_L, grad_margin_wrt_L

            params = ModelParams(v[:d], v[d:])
            L = build_kernel(inst, params, sim)
            K = marginal_kernel_from_L(L)
            U = -grad_loglik_wrt_L(L, label) + config.lam * grad_margin_wrt_L(
                L, K, label, config.omega
            )
            gt, gw = chain_L_to_params(inst, params, sim, U)
            return np.concatenate([gt, gw])

        report = finite_difference_check(f, grad, v0, step=args.step)
        worst = max(worst, report.max_rel_error)
        done += 1
    print(f"gradcheck: {done} instances, max relative error {worst:.3e} "
          f"(tolerance {args.tolerance:g})")
    return EXIT_OK if worst < args.tolerance else EXIT_NUMERICAL


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
    "gradcheck": _cmd_gradcheck,
}


def cli_main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"dpplearn: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"dpplearn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"dpplearn: bad parameter: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"dpplearn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
