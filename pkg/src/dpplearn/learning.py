"""Estimation of DPP parameters: maximum likelihood and large margin.

Both estimators minimize the same hinge objective over labeled instances,

    sum_n [ -log P(y_n; L_n) + lam * log A_n ]_+ ,

where A_n = sum_{i not in y_n} K_ii + omega * sum_{i in y_n} (1 - K_ii)
is the loss-weighted probability mass of incorrect subsets, computable in
closed form from the marginal kernel diagonal.  lam = 0 recovers plain
maximum likelihood; lam > 0 additionally pushes probability mass away from
subsets that disagree with the label, weighted by how much they disagree.

Optimization is block-alternating projected subgradient descent: a block
of steps on theta with the kernel weights fixed, then a block of projected
steps on the kernel weights, repeating with a diminishing step size.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import batch as _batch
from .errors import DegenerateLabelError, NumericalError, ParameterError
from .kernel import (
    ModelParams,
    SimilarityConfig,
    as_subset,
    base_similarity_stack,
    build_kernel,
    build_quality_vector,
    log_probability,
    marginal_kernel_from_L,
    uniform_params,
)

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class TrainConfig:
    """Objective and optimizer settings.

    Parameters
    ----------
    similarity : SimilarityConfig
        Base-kernel layout used to build L from each instance.
    lam : float
        Tradeoff coefficient on the margin term; 0 gives maximum likelihood.
    omega : float
        Weight on missed label items in the generalized Hamming loss.
    step_size : float
        Initial step, applied to the per-instance average subgradient.
    step_decay : str
        "sqrt" for step_size / sqrt(t) at outer iteration t, or "constant".
    alternation_block : int
        Inner subgradient steps per parameter block.
    rel_tolerance : float
        Stop when the objective changes by less than this relative amount
        between outer iterations.
    grad_clip : float
        Cap on the norm of each block's average subgradient.  Labels that
        are nearly impossible under the current kernel make the inverse of
        the label submatrix, and hence the subgradient, arbitrarily large;
        clipping keeps single pathological instances from destroying the
        iterate while preserving the descent direction.
    l2_theta : float
        Optional ridge penalty 0.5 * l2 * ||theta||^2 added to the trained
        objective (off by default; kept out of the per-instance objectives).
    seed : int
        Recorded for provenance; the subgradient loop itself is
        deterministic and draws no random numbers.
    """

    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    lam: float = 0.0
    omega: float = 1.0
    max_outer_iterations: int = 40
    alternation_block: int = 3
    step_size: float = 0.5
    step_decay: str = "sqrt"
    rel_tolerance: float = 1e-7
    grad_clip: float = 10.0
    l2_theta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ParameterError(f"lam must be nonnegative, got {self.lam}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")
        if self.step_size <= 0:
            raise ParameterError(f"step_size must be positive, got {self.step_size}")
        if self.rel_tolerance <= 0:
            raise ParameterError("rel_tolerance must be positive")
        if self.max_outer_iterations < 1 or self.alternation_block < 1:
            raise ParameterError("iteration counts must be at least 1")
        if self.step_decay not in ("sqrt", "constant"):
            raise ParameterError(f"unknown step_decay {self.step_decay!r}")
        if self.grad_clip <= 0:
            raise ParameterError("grad_clip must be positive (inf disables)")
        if self.l2_theta < 0:
            raise ParameterError("l2_theta must be nonnegative")


@dataclass(frozen=True)
class TrainResult:
    params: ModelParams
    objective_trace: tuple
    converged: bool
    iterations_used: int


def softmax_margin_term(K, y_star, omega=1.0):
    """log of the loss-weighted incorrect-subset mass, from K's diagonal.

    Computes log(sum_{i not in y*} K_ii + omega * sum_{i in y*} (1 - K_ii)),
    which equals the log of sum_y loss_omega(y*, y) P(y; L) over all 2^N
    subsets.  Returns -inf when the argument underflows (all probability
    mass already sits on the correct subset).
    """
    if omega <= 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    kdiag = K.diagonal
    y = as_subset(y_star, kdiag.shape[0])
    mask = np.zeros(kdiag.shape[0], dtype=bool)
    mask[list(y)] = True
    A = float(np.sum(kdiag[~mask]) + omega * np.sum(1.0 - kdiag[mask]))
    if A < LOG_FLOOR:
        return -math.inf
    return math.log(A)


def instance_objective(params, instance, config):
    """Hinge objective of one labeled instance under the given parameters.

    [ -log P(y; L) + lam * softmax_margin_term ]_+ with L built from the
    instance features and ``params``.  An impossible label (log P = -inf)
    yields +inf.
    """
    if instance.label is None:
        raise ParameterError("instance has no label")
    L = build_kernel(instance, params, config.similarity)
    ll = log_probability(L, instance.label)
    if ll == -math.inf:
        return math.inf
    z = -ll
    if config.lam > 0:
        K = marginal_kernel_from_L(L)
        z += config.lam * softmax_margin_term(K, instance.label, config.omega)
    return max(0.0, z)


def total_objective(params, dataset, config):
    """Sum of :func:`instance_objective` over a dataset (0 when empty)."""
    return sum(instance_objective(params, inst, config) for inst in dataset)


def grad_loglik_wrt_L(L, y_star):
    """d log P(y*; L) / dL, treating every entry of L as independent.

    Equals the submatrix inverse (L_{y*})^{-1} zero-padded back to N x N,
    minus (L + I)^{-1}.  Raises DegenerateLabelError when L_{y*} is
    numerically singular.
    """
    y = as_subset(y_star, L.n_items)
    out = -L.resolvent()
    if y:
        sub = L.matrix[np.ix_(y, y)]
        evals, evecs = np.linalg.eigh(sub)
        tol = evals[-1] * len(y) * np.finfo(float).eps
        if evals[0] <= max(tol, 0.0):
            raise DegenerateLabelError(
                f"kernel submatrix for label {y} is numerically singular "
                f"(eigenvalue {evals[0]:.3e})"
            )
        inv = (evecs / evals) @ evecs.T
        out[np.ix_(y, y)] += inv
    return out


def grad_margin_wrt_L(L, K, y_star, omega=1.0):
    """Gradient of the softmax margin term with respect to L.

    (1/A) * (L+I)^{-1} D (L+I)^{-1} with D diagonal: D_ii = 1 off the
    label, -omega on it.  Follows from dK_ii/dL = b_i b_i^T where b_i is
    the i-th column of (L+I)^{-1}.
    """
    if omega <= 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    y = as_subset(y_star, L.n_items)
    kdiag = K.diagonal
    mask = np.zeros(L.n_items, dtype=bool)
    mask[list(y)] = True
    A = float(np.sum(kdiag[~mask]) + omega * np.sum(1.0 - kdiag[mask]))
    if A <= 0:
        raise NumericalError(f"margin-term mass must be positive, got {A!r}")
    d = np.where(mask, -omega, 1.0)
    B = L.resolvent()
    return (B * d) @ B / A


def chain_L_to_params(instance, params, similarity, upstream):
    """Chain an N x N gradient dF/dL to (theta, kernel_weights) gradients.

    dF/dtheta_k = sum_ij U_ij L_ij (x_ik + x_jk); dF/dw_k contracts U
    against q_i q_j times the k-th base Gram matrix.  Returns the pair
    (g_theta, g_weights).
    """
    U = np.asarray(upstream, dtype=float)
    n = instance.n_items
    if U.shape != (n, n):
        raise ParameterError(
            f"upstream gradient has shape {U.shape}, expected {(n, n)}"
        )
    q = build_quality_vector(instance, params.theta)
    grams = base_similarity_stack(instance, similarity)
    S = np.tensordot(params.kernel_weights, grams, axes=1)
    L = q[:, None] * q[None, :] * S
    M = U * L
    g_theta = instance.quality_features.T @ (M.sum(axis=1) + M.sum(axis=0))
    g_weights = np.einsum("ij,kij->k", U * (q[:, None] * q[None, :]), grams)
    return g_theta, g_weights


def project_to_simplex(v):
    """Euclidean projection onto {w >= 0, sum(w) = 1}."""
    v = np.ravel(np.asarray(v, dtype=float))
    if v.size == 0:
        raise ParameterError("cannot project an empty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


@dataclass(frozen=True)
class FiniteDifferenceReport:
    analytic: np.ndarray
    numeric: np.ndarray
    rel_errors: np.ndarray

    @property
    def max_rel_error(self):
        return float(np.max(self.rel_errors)) if self.rel_errors.size else 0.0


def finite_difference_check(f, grad, x0, step=1e-5):
    """Compare an analytic gradient against central finite differences.

    ``f`` maps a flat parameter vector to a scalar and ``grad`` to its
    gradient.  Relative errors use max(|analytic|, |numeric|, 1e-8) as the
    denominator.  Raises NumericalError if ``f`` is non-finite anywhere it
    is evaluated.
    """
    x0 = np.ravel(np.asarray(x0, dtype=float))
    analytic = np.ravel(np.asarray(grad(x0), dtype=float))
    numeric = np.empty_like(x0)
    for k in range(x0.size):
        hi, lo = x0.copy(), x0.copy()
        hi[k] += step
        lo[k] -= step
        f_hi, f_lo = f(hi), f(lo)
        if not (math.isfinite(f_hi) and math.isfinite(f_lo)):
            raise NumericalError(
                f"objective is non-finite near coordinate {k}: {f_hi!r}, {f_lo!r}"
            )
        numeric[k] = (f_hi - f_lo) / (2.0 * step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return FiniteDifferenceReport(analytic, numeric, np.abs(analytic - numeric) / denom)


def _clip(g, max_norm):
    norm = float(np.linalg.norm(g))
    if norm > max_norm:
        return g * (max_norm / norm)
    return g


def train(dataset, config, initial=None):
    """Fit parameters by block-alternating projected subgradient descent.

    Each outer iteration t runs ``alternation_block`` subgradient steps on
    theta, then the same number of projected steps on the kernel weights
    (skipped when there is a single base kernel, since the simplex then
    pins the weight at 1), with step ``step_size / sqrt(t)``.  Steps use
    the average subgradient over instances, so ``step_size`` is insensitive
    to dataset size.  The hinge subgradient is zero whenever the bracket is
    nonpositive.

    Instances whose label submatrix is numerically singular (the label is
    impossible under a rank-deficient similarity, e.g. after label noise
    inflates a subset past the feature rank) contribute a finite jittered
    surrogate to the recorded objective and only the margin-term gradient;
    a warning reports how many instances were affected.

    The recorded ``objective_trace`` holds the trained objective (hinge sum
    plus the optional ridge term) after every outer iteration.
    """
    if not dataset:
        raise ParameterError("training dataset is empty")
    for pos, inst in enumerate(dataset):
        if inst.label is None:
            raise ParameterError(f"training instance {pos} has no label")
    d_q = dataset[0].quality_features.shape[1]
    if initial is None:
        initial = uniform_params(d_q, config.similarity)
    theta = np.array(initial.theta, dtype=float)
    weights = np.array(initial.kernel_weights, dtype=float)
    if weights.size != config.similarity.n_weights:
        raise ParameterError(
            f"initial params carry {weights.size} kernel weights, similarity "
            f"config expects {config.similarity.n_weights}"
        )

    batches = _batch.stack_instances(dataset, config.similarity)
    n_total = len(dataset)
    learn_weights = weights.size > 1
    trace = []
    converged = False
    warned_singular = False
    prev = None
    t = 0

    def value_and_grad(want_grad, iteration):
        nonlocal warned_singular
        context = f" (training iteration {iteration})"
        val, g_t, g_w, n_sing = _batch.dataset_value_and_grad(
            batches, theta, weights, config.lam, config.omega,
            want_grad=want_grad, context=context,
        )
        if n_sing and not warned_singular:
            logger.warning(
                "%d of %d training instances have numerically singular label "
                "submatrices; using jittered objective surrogates and "
                "margin-term gradients for them", n_sing, n_total,
            )
            warned_singular = True
        if config.l2_theta > 0:
            val += 0.5 * config.l2_theta * float(theta @ theta)
            if want_grad:
                g_t = g_t + config.l2_theta * theta
        if want_grad:
            return val, _clip(g_t / n_total, config.grad_clip), _clip(
                g_w / n_total, config.grad_clip
            )
        return val

    for t in range(1, config.max_outer_iterations + 1):
        step = config.step_size
        if config.step_decay == "sqrt":
            step /= math.sqrt(t)
        for _ in range(config.alternation_block):
            _, g_t, _ = value_and_grad(True, t)
            theta = theta - step * g_t
        if learn_weights:
            for _ in range(config.alternation_block):
                _, _, g_w = value_and_grad(True, t)
                weights = project_to_simplex(weights - step * g_w)
        obj = value_and_grad(False, t)
        trace.append(obj)
        if prev is not None and abs(prev - obj) <= config.rel_tolerance * max(
            1.0, abs(prev)
        ):
            converged = True
            break
        prev = obj

    params = ModelParams(theta, project_to_simplex(weights))
    return TrainResult(params, tuple(trace), converged, t)
