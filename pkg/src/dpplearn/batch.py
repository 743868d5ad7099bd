"""Vectorized evaluation over many ground sets at once.

Training and the experiment harness repeatedly evaluate the hinge
objective, its subgradient, and exhaustive MAP predictions over hundreds
of small ground sets.  Doing that one instance at a time is dominated by
Python overhead, so this module stacks instances with equal item counts
into contiguous arrays and pushes the work through batched LAPACK calls.

Consistency with the per-instance reference implementations in
:mod:`dpplearn.learning` and :mod:`dpplearn.inference` is covered by tests;
the batched path is an internal engine, not a second definition.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import NotPositiveSemidefiniteError, ParameterError
from .kernel import EIG_CLAMP_TOL, base_similarity_stack

# Relative eigenvalue floor below which a label submatrix counts as
# numerically singular during training.
LABEL_SINGULAR_RTOL = 1e-8

# Jitter added to clamped submatrix eigenvalues when producing the finite
# surrogate log-determinant for a singular label.
LABEL_JITTER = 1e-10

LOG_FLOOR = 1e-300


class InstanceBatch:
    """Instances with a common item count, stacked for array evaluation."""

    __slots__ = ("indices", "X", "grams", "mask", "size_groups", "n", "n_items")

    def __init__(self, dataset_positions, instances, similarity):
        self.indices = np.asarray(dataset_positions, dtype=int)
        self.n = len(instances)
        self.n_items = instances[0].n_items
        self.X = np.stack([inst.quality_features for inst in instances])
        self.grams = np.stack(
            [base_similarity_stack(inst, similarity) for inst in instances]
        )
        self.mask = np.zeros((self.n, self.n_items), dtype=bool)
        by_size = {}
        for row, inst in enumerate(instances):
            label = inst.label if inst.label is not None else ()
            self.mask[row, list(label)] = True
            by_size.setdefault(len(label), []).append(row)
        self.size_groups = []
        for size, rows in sorted(by_size.items()):
            if size == 0:
                continue
            labs = np.array(
                [sorted(np.nonzero(self.mask[r])[0]) for r in rows], dtype=int
            )
            self.size_groups.append((size, np.asarray(rows, dtype=int), labs))


def stack_instances(dataset, similarity):
    """Group a dataset by item count into :class:`InstanceBatch` objects."""
    if not dataset:
        raise ParameterError("dataset is empty")
    d_q = dataset[0].quality_features.shape[1]
    groups = {}
    for pos, inst in enumerate(dataset):
        if inst.quality_features.shape[1] != d_q:
            raise ParameterError(
                "all instances must share the quality feature dimension "
                f"(instance {pos} has {inst.quality_features.shape[1]}, expected {d_q})"
            )
        groups.setdefault(inst.n_items, ([], []))
        groups[inst.n_items][0].append(pos)
        groups[inst.n_items][1].append(inst)
    return [
        InstanceBatch(pos, insts, similarity)
        for _, (pos, insts) in sorted(groups.items())
    ]


def build_L_stack(batch, theta, weights):
    """Qualities (n, N) and kernels (n, N, N) for every instance in a batch."""
    q = np.exp(batch.X @ theta)
    S = np.einsum("k,nkij->nij", weights, batch.grams)
    L = q[:, :, None] * q[:, None, :] * S
    return q, L


def _batched_inv_from_eigh(evals, evecs):
    return (evecs / evals[:, None, :]) @ np.swapaxes(evecs, -1, -2)


def _check_psd(evalsB, batch, context):
    # eigenvalues of L are those of B = L + I shifted down by one
    lam_min = evalsB[:, 0] - 1.0
    scale = np.maximum(np.abs(evalsB[:, 0] - 1.0), np.abs(evalsB[:, -1] - 1.0))
    floor = -np.maximum(EIG_CLAMP_TOL, 1e-12 * scale)
    bad = lam_min < floor
    if np.any(bad):
        row = int(np.argmax(bad))
        raise NotPositiveSemidefiniteError(
            f"kernel for instance {int(batch.indices[row])} has eigenvalue "
            f"{lam_min[row]:.3e}{context}"
        )


def hinge_terms(batch, theta, weights, lam, omega, want_grad, context=""):
    """Hinge objective pieces and (optionally) its subgradient for one batch.

    Returns ``(value, g_theta, g_weights, n_singular)`` where value sums
    max(0, -log P(y_n) + lam * log A_n) over the batch.  Instances whose
    label submatrix is numerically singular get a finite surrogate
    log-determinant (eigenvalues clamped and jittered) so the objective
    stays recordable, and contribute only the margin-term gradient.
    """
    n, N = batch.n, batch.n_items
    q, L = build_L_stack(batch, theta, weights)
    evalsB, evecsB = np.linalg.eigh(L + np.eye(N))
    _check_psd(evalsB, batch, context)
    evalsB = np.maximum(evalsB, 1.0)
    logdetB = np.sum(np.log(evalsB), axis=1)
    invB = _batched_inv_from_eigh(evalsB, evecsB)
    kdiag = 1.0 - np.diagonal(invB, axis1=1, axis2=2)

    A = np.sum(np.where(batch.mask, omega * (1.0 - kdiag), kdiag), axis=1)
    logA = np.full(n, -np.inf)
    ok = A >= LOG_FLOOR
    logA[ok] = np.log(A[ok])

    logdet_y = np.zeros(n)
    singular = np.zeros(n, dtype=bool)
    inv_pad = np.zeros((n, N, N)) if want_grad else None
    for size, rows, labs in batch.size_groups:
        sub = L[rows[:, None, None], labs[:, :, None], labs[:, None, :]]
        evals, evecs = np.linalg.eigh(sub)
        sing = evals[:, 0] <= np.maximum(0.0, LABEL_SINGULAR_RTOL * evals[:, -1])
        safe = np.where(
            sing[:, None], np.maximum(evals, 0.0) + LABEL_JITTER, evals
        )
        logdet_y[rows] = np.sum(np.log(safe), axis=1)
        singular[rows] = sing
        if want_grad and np.any(~sing):
            keep = ~sing
            inv = _batched_inv_from_eigh(evals[keep], evecs[keep])
            r = rows[keep]
            lb = labs[keep]
            inv_pad[r[:, None, None], lb[:, :, None], lb[:, None, :]] = inv

    z = logdetB - logdet_y
    if lam > 0:
        z = z + lam * logA
    value = float(np.sum(np.maximum(z, 0.0)))
    n_singular = int(np.count_nonzero(singular))
    if not want_grad:
        return value, None, None, n_singular

    act = np.nonzero(z > 0)[0]
    if act.size == 0:
        return value, np.zeros_like(theta), np.zeros_like(weights), n_singular

    U = np.zeros((act.size, N, N))
    ns = ~singular[act]
    if np.any(ns):
        U[ns] = invB[act][ns] - inv_pad[act][ns]
    if lam > 0:
        d = np.where(batch.mask[act], -omega, 1.0)
        Ba = invB[act]
        margin = (Ba * d[:, None, :]) @ Ba
        U += (lam / A[act])[:, None, None] * margin

    r = np.sum(U * L[act], axis=2)
    g_theta = 2.0 * np.einsum("mi,mid->d", r, batch.X[act])
    qq = q[act][:, :, None] * q[act][:, None, :]
    g_weights = np.einsum("mij,mkij->k", U * qq, batch.grams[act])
    return value, g_theta, g_weights, n_singular


def dataset_value_and_grad(batches, theta, weights, lam, omega, want_grad=True,
                           context=""):
    """Sum :func:`hinge_terms` over all batches of a dataset."""
    total = 0.0
    g_theta = np.zeros_like(theta) if want_grad else None
    g_weights = np.zeros_like(weights) if want_grad else None
    n_singular = 0
    for batch in batches:
        val, gt, gw, ns = hinge_terms(
            batch, theta, weights, lam, omega, want_grad, context
        )
        total += val
        n_singular += ns
        if want_grad:
            g_theta += gt
            g_weights += gw
    return total, g_theta, g_weights, n_singular


@lru_cache(maxsize=None)
def _combination_indices(n_items, size):
    return np.array(list(combinations(range(n_items), size)), dtype=int)


def map_exhaustive_stack(L_stack):
    """Exhaustive MAP subset for each kernel in a (n, N, N) stack.

    Ties broken exactly as in :func:`dpplearn.inference.map_exhaustive`:
    smaller subsets first, then lexicographic order.
    """
    L_stack = np.asarray(L_stack, dtype=float)
    n, N = L_stack.shape[0], L_stack.shape[1]
    best_val = np.zeros(n)  # empty set: det = 1
    best_sub = [() for _ in range(n)]
    for size in range(1, N + 1):
        combs = _combination_indices(N, size)
        sub = L_stack[:, combs[:, :, None], combs[:, None, :]]
        sign, logdet = np.linalg.slogdet(sub)
        logdet = np.where(sign > 0, logdet, -np.inf)
        pick = np.argmax(logdet, axis=1)
        vals = logdet[np.arange(n), pick]
        better = vals > best_val
        for row in np.nonzero(better)[0]:
            best_val[row] = vals[row]
            best_sub[row] = tuple(combs[pick[row]])
    return best_sub
