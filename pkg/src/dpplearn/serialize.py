"""File formats: instance records, config files, and training results.

Ground-set files are line-delimited JSON.  The first line is a header
object with ``"kind": "dpplearn-instances"`` plus free-form metadata
(config echo, true theta, seed); every following line is one instance:

    {"n_items": N,
     "quality_features": [[...], ...],      # N rows of d_q reals
     "similarity_features": [[...], ...],   # N rows of d_s reals
     "label": [i, ...] or null,
     ...optional extras such as "noiseless_map"}

Config files are flat ``key = value`` text: one assignment per line,
values in JSON syntax, ``#`` comments allowed, dotted keys nesting into
sections (e.g. ``train.similarity.bandwidths = [0.5, 1.0]``).

Training results are a single JSON document with the final parameters, a
config echo, and the (iteration, objective) trace.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataFormatError
from .kernel import GroundSetInstance, ModelParams, SimilarityConfig
from .inference import InferenceConfig
from .learning import TrainConfig, TrainResult
from .synth import SynthConfig

INSTANCES_KIND = "dpplearn-instances"


def write_instances(path, instances, header=None):
    meta = {"kind": INSTANCES_KIND, **(header or {})}
    with open(path, "w") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for inst in instances:
            rec = {
                "n_items": inst.n_items,
                "quality_features": inst.quality_features.tolist(),
                "similarity_features": inst.similarity_features.tolist(),
                "label": list(inst.label) if inst.label is not None else None,
            }
            fh.write(json.dumps(rec) + "\n")


def read_instances(path):
    """Read one instance file; returns (header dict, list of instances)."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty instance file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: bad header line: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != INSTANCES_KIND:
        raise DataFormatError(
            f"{path}: header must be an object with kind={INSTANCES_KIND!r}"
        )
    instances = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            inst = GroundSetInstance(
                np.asarray(rec["quality_features"], dtype=float),
                np.asarray(rec["similarity_features"], dtype=float),
                rec.get("label"),
            )
            if inst.n_items != rec["n_items"]:
                raise DataFormatError(
                    f"n_items {rec['n_items']} does not match "
                    f"{inst.n_items} feature rows"
                )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"{path}:{lineno}: bad record: {exc}") from exc
        instances.append(inst)
    return header, instances


def parse_config(path):
    """Parse a flat key = value config file into a nested dict."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            try:
                parsed = json.loads(value.strip())
            except json.JSONDecodeError as exc:
                raise DataFormatError(
                    f"{path}:{lineno}: value for {key!r} is not valid JSON: {exc}"
                ) from exc
            node = out
            parts = key.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
                if not isinstance(node, dict):
                    raise DataFormatError(f"{path}:{lineno}: {key!r} nests into a scalar")
            node[parts[-1]] = parsed
    return out


def similarity_config_from_dict(d):
    d = dict(d or {})
    return SimilarityConfig(
        bandwidths=tuple(d.pop("bandwidths", ())),
        include_linear=bool(d.pop("include_linear", True)),
    )


def train_config_from_dict(d):
    d = dict(d or {})
    similarity = similarity_config_from_dict(d.pop("similarity", {}))
    return TrainConfig(similarity=similarity, **d)


def synth_config_from_dict(d):
    return SynthConfig(**dict(d or {}))


def inference_config_from_dict(d):
    return InferenceConfig(**dict(d or {}))


def _similarity_to_dict(sim):
    return {"bandwidths": list(sim.bandwidths), "include_linear": sim.include_linear}


def train_config_to_dict(config):
    return {
        "similarity": _similarity_to_dict(config.similarity),
        "lam": config.lam,
        "omega": config.omega,
        "max_outer_iterations": config.max_outer_iterations,
        "alternation_block": config.alternation_block,
        "step_size": config.step_size,
        "step_decay": config.step_decay,
        "rel_tolerance": config.rel_tolerance,
        "l2_theta": config.l2_theta,
        "seed": config.seed,
    }


def write_train_result(path, result, config):
    doc = {
        "kind": "dpplearn-train-result",
        "params": {
            "theta": result.params.theta.tolist(),
            "kernel_weights": result.params.kernel_weights.tolist(),
        },
        "config": train_config_to_dict(config),
        "converged": result.converged,
        "iterations_used": result.iterations_used,
        "objective_trace": [
            [i + 1, v] for i, v in enumerate(result.objective_trace)
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_train_result(path):
    """Returns (ModelParams, TrainConfig, TrainResult)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    try:
        params = ModelParams(
            np.asarray(doc["params"]["theta"], dtype=float),
            np.asarray(doc["params"]["kernel_weights"], dtype=float),
        )
        config = train_config_from_dict(doc["config"])
        trace = tuple(v for _, v in doc["objective_trace"])
        result = TrainResult(params, trace, doc["converged"], doc["iterations_used"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: bad train-result document: {exc}") from exc
    return params, config, result


def write_predictions(path, subsets):
    with open(path, "w") as fh:
        for idx, y in enumerate(subsets):
            fh.write(json.dumps({"index": idx, "subset": list(y)}) + "\n")


def read_predictions(path):
    subsets = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                subsets.append(tuple(int(i) for i in rec["subset"]))
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad prediction: {exc}") from exc
    return subsets
