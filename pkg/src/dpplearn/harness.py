"""Experiment harness: synthetic benchmarks, sweeps, and CSV emission.

Four canned experiments mirror the synthetic study:

* ``fig1a`` - learning theta only with the true (linear) similarity, over a
  grid of training-set sizes, against maximum likelihood and the oracle
  parameters.
* ``fig1b`` - learning theta only under a deliberately mis-specified RBF
  similarity whose bandwidth sweeps a grid (200 training instances).
* ``fig1c`` - learning theta and the kernel weights jointly with the
  multiple-kernel similarity (RBF bank, linear kernel excluded), alongside
  reference runs that keep the true similarity.
* ``omega_sweep`` - large-margin training at a grid of loss weights omega,
  tracing the precision/recall tradeoff.

Methods are tagged ``mle`` (lam = 0), ``lme`` (hinge objective; lam, and
where configured omega, selected on the holdout split by F-score),
``oracle`` (generating parameters), and ``mle_true_s``/``lme_true_s`` for
the fixed-true-similarity reference rows of fig1c.

Every experiment writes into its output directory:

* ``results.csv`` - one row per (cell, replicate):
  experiment,replicate,method,cell,precision,recall,fscore
* ``summary.csv`` - per cell: mean and standard error (sample std over
  replicates / sqrt(replicates)) of each metric
* ``manifest.json`` - config echo, seed, package and library versions
* ``timings.csv`` - wall-clock seconds per row; the one file excluded from
  the byte-identical determinism guarantee
* ``pr_curve.csv`` (omega sweep only) - interpolated precision/recall
  polyline

All randomness flows from one root seed: replicate r uses dataset seed
``synth.seed + r``.  Reruns of the same experiment are byte-identical
except for ``timings.csv``.

Dataset files consumed and produced around these experiments follow the
line-delimited instance-record schema documented in
:mod:`dpplearn.serialize`.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .batch import build_L_stack, map_exhaustive_stack, stack_instances
from .errors import ParameterError
from .inference import InferenceConfig, predict_subset
from .kernel import ModelParams, SimilarityConfig
from .learning import TrainConfig, train
from .losses import precision_recall_fscore
from .synth import TRUE_SIMILARITY, SynthConfig, generate_dataset, true_params

EXPERIMENT_KINDS = ("fig1a", "fig1b", "fig1c", "omega_sweep", "custom")

DEFAULT_TRAIN_SIZES = (100, 200, 400, 800)
# Bandwidths from well below to well above the unit feature scale.  2^6 and
# beyond is excluded: there the mis-specified similarity saturates toward the
# all-ones matrix and every estimator collapses to the same degenerate model.
DEFAULT_SIGMA_GRID = tuple(2.0**q for q in range(-3, 6))
DEFAULT_LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_OMEGA_GRID = tuple(2.0**q for q in range(-6, 9, 2))


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: kind, data/train/inference settings, and grids.

    ``lambda_grid`` drives holdout selection for the lme method (0 is the
    mle baseline and is excluded here); ``omega_grid`` is the sweep grid
    for omega_sweep; ``sigma_grid`` doubles as the fig1b mis-specification
    grid and the fig1c RBF bank.
    """

    kind: str = "fig1a"
    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(
        similarity=TRUE_SIMILARITY, rel_tolerance=1e-9))
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    replicates: int = 10
    methods: tuple = ("mle", "lme")
    train_sizes: tuple = DEFAULT_TRAIN_SIZES
    sigma_grid: tuple = DEFAULT_SIGMA_GRID
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    omega_grid: tuple = DEFAULT_OMEGA_GRID

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ParameterError(f"unknown experiment kind {self.kind!r}")
        if self.replicates < 1:
            raise ParameterError("replicates must be at least 1")
        for name in ("train_sizes", "sigma_grid", "lambda_grid", "omega_grid"):
            if not tuple(getattr(self, name)):
                raise ParameterError(f"{name} must be non-empty")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    replicate: int
    method: str
    cell: float
    precision: float
    recall: float
    fscore: float
    runtime: float


def evaluate_params(instances, params, similarity, inference):
    """Mean precision/recall/F of predictions against instance labels."""
    scores = []
    if inference.mode == "exhaustive":
        for b in stack_instances(list(instances), similarity):
            _, L = build_L_stack(b, params.theta, params.kernel_weights)
            for row, pred in enumerate(map_exhaustive_stack(L)):
                label = tuple(np.nonzero(b.mask[row])[0].tolist())
                scores.append(precision_recall_fscore(pred, label))
    else:
        from .kernel import build_kernel

        for inst in instances:
            L = build_kernel(inst, params, similarity)
            pred = predict_subset(L, inference)
            scores.append(precision_recall_fscore(pred, inst.label))
    arr = np.array(scores)
    return tuple(arr.mean(axis=0))


@dataclass(frozen=True)
class GridSearchResult:
    best_config: TrainConfig
    best_params: ModelParams
    best_holdout_fscore: float
    table: tuple  # rows of (lam, omega, holdout F)


def grid_search(train_split, holdout_split, lambda_grid, omega_grid,
                base_config, inference=None):
    """Train each (lam, omega) cell; pick the best holdout F-score.

    Ties prefer the smaller lam, then the omega nearest 1.  Returns the
    winning config together with its trained parameters, so callers need
    not retrain.
    """
    if not holdout_split:
        raise ParameterError("grid search requires a non-empty holdout split")
    inference = inference or InferenceConfig()
    cells = sorted(
        ((lam, om) for lam in lambda_grid for om in omega_grid),
        key=lambda c: (c[0], abs(np.log(c[1]))),
    )
    best = None
    table = []
    for lam, om in cells:
        config = replace(base_config, lam=lam, omega=om)
        result = train(list(train_split), config)
        score = evaluate_params(
            holdout_split, result.params, config.similarity, inference
        )[2]
        table.append((lam, om, score))
        if best is None or score > best.best_holdout_fscore:
            best = GridSearchResult(config, result.params, score, ())
    return GridSearchResult(
        best.best_config, best.best_params, best.best_holdout_fscore, tuple(table)
    )


def _rep_seed(spec, replicate):
    return spec.synth.seed + replicate


def _fit_lme(ds, train_split, spec, train_config, omega_grid=(1.0,)):
    gs = grid_search(
        train_split, list(ds.holdout), spec.lambda_grid, omega_grid,
        train_config, spec.inference,
    )
    return gs.best_params


def run_fig1a(spec):
    """Learning theta only with the true similarity, across training sizes."""
    rows = []
    n_max = max(spec.train_sizes)
    base = replace(spec.train, similarity=TRUE_SIMILARITY)
    for rep in range(spec.replicates):
        synth = replace(spec.synth, n_train=n_max, seed=_rep_seed(spec, rep))
        ds = generate_dataset(synth)
        oracle = true_params(ds)
        for size in spec.train_sizes:
            split = list(ds.train[:size])
            t0 = time.perf_counter()
            prf = evaluate_params(ds.test, oracle, TRUE_SIMILARITY, spec.inference)
            rows.append(ResultRow("fig1a", rep, "oracle", size, *prf,
                                  time.perf_counter() - t0))
            if "mle" in spec.methods:
                t0 = time.perf_counter()
                result = train(split, replace(base, lam=0.0))
                prf = evaluate_params(ds.test, result.params, TRUE_SIMILARITY,
                                      spec.inference)
                rows.append(ResultRow("fig1a", rep, "mle", size, *prf,
                                      time.perf_counter() - t0))
            if "lme" in spec.methods:
                t0 = time.perf_counter()
                params = _fit_lme(ds, split, spec, base)
                prf = evaluate_params(ds.test, params, TRUE_SIMILARITY,
                                      spec.inference)
                rows.append(ResultRow("fig1a", rep, "lme", size, *prf,
                                      time.perf_counter() - t0))
    return rows


def run_fig1b(spec):
    """Learning theta only under mis-specified RBF similarity, per sigma."""
    rows = []
    for rep in range(spec.replicates):
        synth = replace(spec.synth, seed=_rep_seed(spec, rep))
        ds = generate_dataset(synth)
        split = list(ds.train)
        for sigma in spec.sigma_grid:
            sim = SimilarityConfig(bandwidths=(sigma,), include_linear=False)
            base = replace(spec.train, similarity=sim)
            if "mle" in spec.methods:
                t0 = time.perf_counter()
                result = train(split, replace(base, lam=0.0))
                prf = evaluate_params(ds.test, result.params, sim, spec.inference)
                rows.append(ResultRow("fig1b", rep, "mle", sigma, *prf,
                                      time.perf_counter() - t0))
            if "lme" in spec.methods:
                t0 = time.perf_counter()
                params = _fit_lme(ds, split, spec, base)
                prf = evaluate_params(ds.test, params, sim, spec.inference)
                rows.append(ResultRow("fig1b", rep, "lme", sigma, *prf,
                                      time.perf_counter() - t0))
    return rows


def run_fig1c(spec):
    """Learning theta and kernel weights jointly with the RBF bank.

    The linear kernel (the ground-truth similarity) is deliberately
    excluded from the bank.  Reference rows retrain with the true
    similarity on the same data, tagged ``mle_true_s``/``lme_true_s``.
    """
    rows = []
    n_max = max(spec.train_sizes)
    mkl_sim = SimilarityConfig(bandwidths=tuple(spec.sigma_grid),
                               include_linear=False)
    for rep in range(spec.replicates):
        synth = replace(spec.synth, n_train=n_max, seed=_rep_seed(spec, rep))
        ds = generate_dataset(synth)
        for size in spec.train_sizes:
            split = list(ds.train[:size])
            for sim, suffix in ((mkl_sim, ""), (TRUE_SIMILARITY, "_true_s")):
                base = replace(spec.train, similarity=sim)
                if "mle" in spec.methods:
                    t0 = time.perf_counter()
                    result = train(split, replace(base, lam=0.0))
                    prf = evaluate_params(ds.test, result.params, sim,
                                          spec.inference)
                    rows.append(ResultRow("fig1c", rep, "mle" + suffix, size,
                                          *prf, time.perf_counter() - t0))
                if "lme" in spec.methods:
                    t0 = time.perf_counter()
                    params = _fit_lme(ds, split, spec, base)
                    prf = evaluate_params(ds.test, params, sim, spec.inference)
                    rows.append(ResultRow("fig1c", rep, "lme" + suffix, size,
                                          *prf, time.perf_counter() - t0))
    return rows


def run_omega_sweep(spec):
    """Precision/recall tradeoff: train the lme method at each omega.

    Uses the multiple-kernel similarity (RBF bank over ``sigma_grid``), the
    parameterization under which the loss weight visibly steers subset
    sizes.  lam stays at ``spec.train.lam``.  Returns ``(rows, pr_points)``
    where pr_points interpolate the mean (recall, precision) polyline on a
    uniform recall grid.
    """
    sim = SimilarityConfig(bandwidths=tuple(spec.sigma_grid),
                           include_linear=False)
    base = replace(spec.train, similarity=sim)
    rows = []
    for rep in range(spec.replicates):
        synth = replace(spec.synth, seed=_rep_seed(spec, rep))
        ds = generate_dataset(synth)
        split = list(ds.train)
        for omega in spec.omega_grid:
            t0 = time.perf_counter()
            result = train(split, replace(base, omega=omega))
            prf = evaluate_params(ds.test, result.params, sim, spec.inference)
            rows.append(ResultRow("omega_sweep", rep, "lme", omega, *prf,
                                  time.perf_counter() - t0))
    cells = summarize(rows)
    pts = sorted((c["recall_mean"], c["precision_mean"]) for c in cells)
    recs = np.array([p[0] for p in pts])
    precs = np.array([p[1] for p in pts])
    if recs.size > 1 and recs[-1] > recs[0]:
        grid = np.linspace(recs[0], recs[-1], 101)
        interp = np.interp(grid, recs, precs)
        pr_points = list(zip(grid.tolist(), interp.tolist()))
    else:
        pr_points = [(float(r), float(p)) for r, p in pts]
    return rows, pr_points


def run_experiment(spec):
    if spec.kind == "fig1a":
        return run_fig1a(spec), None
    if spec.kind == "fig1b":
        return run_fig1b(spec), None
    if spec.kind == "fig1c":
        return run_fig1c(spec), None
    if spec.kind == "omega_sweep":
        return run_omega_sweep(spec)
    raise ParameterError(f"experiment kind {spec.kind!r} has no canned runner")


def summarize(rows):
    """Per-cell mean and standard error over replicates."""
    cells = {}
    for row in rows:
        cells.setdefault((row.experiment, row.method, row.cell), []).append(row)
    out = []
    for (exp, method, cell), group in sorted(cells.items()):
        n = len(group)
        entry = {"experiment": exp, "method": method, "cell": cell, "n": n}
        for metric in ("precision", "recall", "fscore"):
            vals = np.array([getattr(r, metric) for r in group])
            entry[f"{metric}_mean"] = float(vals.mean())
            entry[f"{metric}_stderr"] = (
                float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            )
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# file emission

RESULT_COLUMNS = ("experiment", "replicate", "method", "cell",
                  "precision", "recall", "fscore")
SUMMARY_COLUMNS = ("experiment", "method", "cell", "n",
                   "precision_mean", "precision_stderr",
                   "recall_mean", "recall_stderr",
                   "fscore_mean", "fscore_stderr")


def _fmt(value):
    # plain-float repr also for numpy scalars (np.float64 subclasses float)
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_rows_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(getattr(r, c)) for c in RESULT_COLUMNS) + "\n")


def write_timings_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("experiment,replicate,method,cell,runtime\n")
        for r in rows:
            fh.write(f"{r.experiment},{r.replicate},{r.method},{_fmt(r.cell)},"
                     f"{_fmt(r.runtime)}\n")


def write_summary_csv(path, cells):
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for cell in cells:
            fh.write(",".join(_fmt(cell[c]) for c in SUMMARY_COLUMNS) + "\n")


def write_pr_curve_csv(path, pr_points):
    with open(path, "w") as fh:
        fh.write("recall,precision\n")
        for rec, prec in pr_points:
            fh.write(f"{_fmt(float(rec))},{_fmt(float(prec))}\n")


def spec_to_dict(spec):
    from .serialize import train_config_to_dict

    return {
        "kind": spec.kind,
        "synth": {
            "n_items": spec.synth.n_items,
            "feature_dim": spec.synth.feature_dim,
            "noise_prob": spec.synth.noise_prob,
            "n_train": spec.synth.n_train,
            "n_holdout": spec.synth.n_holdout,
            "n_test": spec.synth.n_test,
            "seed": spec.synth.seed,
        },
        "train": train_config_to_dict(spec.train),
        "inference": {
            "mode": spec.inference.mode,
            "exhaustive_limit": spec.inference.exhaustive_limit,
            "mbr_samples": spec.inference.mbr_samples,
            "seed": spec.inference.seed,
        },
        "replicates": spec.replicates,
        "methods": list(spec.methods),
        "train_sizes": list(spec.train_sizes),
        "sigma_grid": list(spec.sigma_grid),
        "lambda_grid": list(spec.lambda_grid),
        "omega_grid": list(spec.omega_grid),
    }


def write_manifest(path, spec):
    doc = {
        "kind": "dpplearn-manifest",
        "seed": spec.synth.seed,
        "spec": spec_to_dict(spec),
        "versions": {
            "dpplearn": _package_version(),
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _package_version():
    from . import __version__

    return __version__


def run_and_write(spec, out_dir):
    """Run an experiment and write all output files into ``out_dir``."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, pr_points = run_experiment(spec)
    write_rows_csv(out / "results.csv", rows)
    write_timings_csv(out / "timings.csv", rows)
    write_summary_csv(out / "summary.csv", summarize(rows))
    write_manifest(out / "manifest.json", spec)
    if pr_points is not None:
        write_pr_curve_csv(out / "pr_curve.csv", pr_points)
    return rows
