"""Kernel construction and probability evaluation for L-ensemble DPPs.

A determinantal point process (DPP) over a ground set of N items assigns
every subset y the probability det(L_y) / det(L + I), where L is an N x N
positive semidefinite kernel and L_y its principal submatrix.  Here L is
factored into per-item qualities and pairwise similarities,

    L_ij = q_i * q_j * S_ij,     q_i = exp(theta . x_i),

with S a convex combination of Gaussian (RBF) base kernels on the
similarity features plus an optional linear kernel:

    S_ij = sum_k alpha_k * exp(-||phi_i - phi_j||^2 / sigma_k^2)
           + beta * (phi_i . phi_j),      sum_k alpha_k + beta = 1.

The marginal kernel K = L (L + I)^{-1} gives inclusion probabilities:
det(K_y) is the probability that a sampled subset contains y, and K_ii is
the marginal probability of item i.

All types here are immutable after construction (arrays are marked
read-only), so instances are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveSemidefiniteError, ParameterError

# Eigenvalues of L in [-EIG_CLAMP_TOL, 0) are treated as rounding noise and
# clamped to zero; anything lower means the caller supplied a broken S.
EIG_CLAMP_TOL = 1e-6

# det(L_y) at or below this floor is reported as log-probability -inf.
DET_UNDERFLOW_FLOOR = 1e-300

# Loose enough that finite-difference probes (step ~1e-5) of the objective
# remain inside the accepted domain; tight enough to catch real mistakes.
SIMPLEX_TOL = 1e-4
SYMMETRY_TOL = 1e-10


def as_subset(indices, n_items=None):
    """Normalize ``indices`` to a sorted tuple of distinct item indices.

    Raises ParameterError on duplicates, negative indices, or indices at or
    beyond ``n_items`` when a ground-set size is given.  The empty subset is
    valid.
    """
    idx = tuple(sorted(int(i) for i in indices))
    if len(set(idx)) != len(idx):
        raise ParameterError(f"subset has duplicate indices: {idx}")
    if idx and idx[0] < 0:
        raise ParameterError(f"subset has negative index: {idx[0]}")
    if n_items is not None and idx and idx[-1] >= n_items:
        raise ParameterError(
            f"subset index {idx[-1]} out of range for ground set of {n_items}"
        )
    return idx


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GroundSetInstance:
    """One ground set: per-item feature vectors and an optional label subset.

    Parameters
    ----------
    quality_features : array, shape (n_items, d_q)
        Features x_i feeding the per-item quality q_i = exp(theta . x_i).
    similarity_features : array, shape (n_items, d_s)
        Features phi_i feeding the pairwise similarity kernels.
    label : iterable of int, optional
        The annotated diverse subset; absent at inference time.
    """

    quality_features: np.ndarray
    similarity_features: np.ndarray
    label: tuple = None

    def __post_init__(self):
        x = _readonly(np.atleast_2d(self.quality_features))
        phi = _readonly(np.atleast_2d(self.similarity_features))
        if x.ndim != 2 or phi.ndim != 2:
            raise ParameterError("feature arrays must be 2-D (items, features)")
        if x.shape[0] != phi.shape[0]:
            raise ParameterError(
                f"quality features describe {x.shape[0]} items but similarity "
                f"features describe {phi.shape[0]}"
            )
        object.__setattr__(self, "quality_features", x)
        object.__setattr__(self, "similarity_features", phi)
        if self.label is not None:
            object.__setattr__(self, "label", as_subset(self.label, x.shape[0]))

    @property
    def n_items(self):
        return self.quality_features.shape[0]


@dataclass(frozen=True)
class SimilarityConfig:
    """Base-kernel layout for the similarity matrix S.

    ``bandwidths`` lists the RBF scales sigma_k; ``include_linear`` appends
    the linear kernel phi_i . phi_j as the final component.  Kernel weights
    elsewhere in the package are ordered (alpha_1, ..., alpha_K[, beta]) to
    match this layout.
    """

    bandwidths: tuple = ()
    include_linear: bool = True

    def __post_init__(self):
        bw = tuple(float(b) for b in self.bandwidths)
        if any(b <= 0 for b in bw):
            raise ParameterError(f"bandwidths must be strictly positive: {bw}")
        object.__setattr__(self, "bandwidths", bw)
        if self.n_weights == 0:
            raise ParameterError("similarity needs at least one base kernel")

    @property
    def n_weights(self):
        return len(self.bandwidths) + bool(self.include_linear)


@dataclass(frozen=True)
class ModelParams:
    """Learnable parameters: quality weights theta and kernel weights.

    ``kernel_weights`` concatenates (alpha_1, ..., alpha_K[, beta]) and must
    lie on the probability simplex.
    """

    theta: np.ndarray
    kernel_weights: np.ndarray

    def __post_init__(self):
        theta = _readonly(np.ravel(self.theta))
        w = np.ravel(np.asarray(self.kernel_weights, dtype=float))
        check_simplex(w)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "kernel_weights", _readonly(w))


def check_simplex(w, tol=SIMPLEX_TOL):
    """Raise ParameterError unless w is nonnegative and sums to one."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise ParameterError("kernel weight vector is empty")
    if np.min(w) < -tol:
        raise ParameterError(f"kernel weights must be nonnegative, got {w}")
    if abs(float(np.sum(w)) - 1.0) > tol:
        raise ParameterError(f"kernel weights must sum to 1, got sum {np.sum(w)!r}")


def uniform_params(d_q, similarity):
    """Default starting point: theta = 0 (all qualities 1), uniform weights."""
    k = similarity.n_weights
    return ModelParams(np.zeros(d_q), np.full(k, 1.0 / k))


def split_kernel_weights(weights, similarity):
    """Split a kernel-weight vector into (alpha array, beta float)."""
    w = np.ravel(np.asarray(weights, dtype=float))
    if w.size != similarity.n_weights:
        raise ParameterError(
            f"expected {similarity.n_weights} kernel weights, got {w.size}"
        )
    if similarity.include_linear:
        return w[:-1], float(w[-1])
    return w, 0.0


class EnsembleKernel:
    """The N x N DPP kernel L with its eigendecomposition cached.

    Construct via :func:`assemble_L` or :meth:`from_matrix`.  Eigenvalues in
    [-1e-6, 0) are clamped to zero (rounding repair); lower values raise
    NotPositiveSemidefiniteError.  Instances are immutable.
    """

    __slots__ = ("matrix", "eigenvalues", "eigenvectors")

    def __init__(self, matrix, eigenvalues, eigenvectors):
        self.matrix = _readonly(matrix)
        self.eigenvalues = _readonly(eigenvalues)
        self.eigenvectors = _readonly(eigenvectors)

    @classmethod
    def from_matrix(cls, L):
        L = np.asarray(L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ParameterError(f"kernel must be square, got shape {L.shape}")
        tol = SYMMETRY_TOL * max(1.0, float(np.max(np.abs(L))) if L.size else 1.0)
        if L.size and np.max(np.abs(L - L.T)) > tol:
            raise ParameterError("kernel matrix is not symmetric")
        evals, evecs = np.linalg.eigh(L)
        evals = clamp_psd_eigenvalues(evals)
        return cls(L, evals, evecs)

    @property
    def n_items(self):
        return self.matrix.shape[0]

    def log_normalizer(self):
        """log det(L + I), always finite since eigenvalues are >= 0."""
        return float(np.sum(np.log1p(self.eigenvalues)))

    def resolvent(self):
        """(L + I)^{-1}, rebuilt from the cached eigendecomposition."""
        v = self.eigenvectors
        return (v / (self.eigenvalues + 1.0)) @ v.T


@dataclass(frozen=True)
class MarginalKernel:
    """The marginal kernel K = L (L + I)^{-1}; K_ii is item i's marginal."""

    matrix: np.ndarray = field()

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))

    @property
    def diagonal(self):
        return self.matrix.diagonal()


def clamp_psd_eigenvalues(evals, tol=EIG_CLAMP_TOL):
    """Zero small negative eigenvalues; reject genuinely negative spectra.

    The error threshold is -max(tol, 1e-12 * max|eig|): absolute for
    unit-scale kernels, relative once the spectrum is large enough that
    rounding noise alone exceeds ``tol``.
    """
    evals = np.asarray(evals, dtype=float)
    if evals.size == 0:
        return evals
    floor = -max(tol, 1e-12 * float(np.max(np.abs(evals))))
    lowest = float(np.min(evals))
    if lowest < floor:
        raise NotPositiveSemidefiniteError(
            f"kernel has eigenvalue {lowest:.3e} below tolerance {floor:.3e}; "
            "the similarity matrix is not positive semidefinite"
        )
    return np.maximum(evals, 0.0)


def base_similarity_stack(instance, config):
    """All base kernel Gram matrices, stacked (n_weights, N, N).

    RBF components come first, one per bandwidth, followed by the linear
    Gram matrix when configured.  The stack depends only on the similarity
    features, so it can be computed once and reused across parameter values.
    """
    phi = instance.similarity_features
    n = phi.shape[0]
    grams = np.empty((config.n_weights, n, n))
    if config.bandwidths:
        sq = np.sum(phi**2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (phi @ phi.T)
        np.maximum(d2, 0.0, out=d2)
        np.fill_diagonal(d2, 0.0)
        for k, sigma in enumerate(config.bandwidths):
            grams[k] = np.exp(-d2 / sigma**2)
    if config.include_linear:
        grams[-1] = phi @ phi.T
    return grams


def build_similarity_matrix(instance, config, weights):
    """Weighted similarity matrix S for one ground set.

    S_ij = sum_k alpha_k exp(-||phi_i - phi_j||^2 / sigma_k^2)
           + beta phi_i . phi_j, with (alpha, beta) = ``weights`` on the
    simplex.  Symmetric by construction; positive semidefinite since every
    base Gram matrix is.
    """
    w = np.ravel(np.asarray(weights, dtype=float))
    if w.size != config.n_weights:
        raise ParameterError(
            f"expected {config.n_weights} kernel weights, got {w.size}"
        )
    check_simplex(w)
    grams = base_similarity_stack(instance, config)
    S = np.tensordot(w, grams, axes=1)
    return 0.5 * (S + S.T)


def build_quality_vector(instance, theta):
    """Per-item qualities q_i = exp(theta . x_i), strictly positive."""
    theta = np.ravel(np.asarray(theta, dtype=float))
    x = instance.quality_features
    if theta.size != x.shape[1]:
        raise ParameterError(
            f"theta has dimension {theta.size}, quality features have {x.shape[1]}"
        )
    return np.exp(x @ theta)


def assemble_L(q, S):
    """Assemble L_ij = q_i q_j S_ij and cache its eigendecomposition."""
    q = np.ravel(np.asarray(q, dtype=float))
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ParameterError(f"similarity matrix must be square, got {S.shape}")
    if q.size != S.shape[0]:
        raise ParameterError(
            f"{q.size} qualities for a {S.shape[0]}-item similarity matrix"
        )
    if q.size and np.min(q) <= 0:
        raise ParameterError("qualities must be strictly positive")
    if S.size and np.max(np.abs(S - S.T)) > SYMMETRY_TOL:
        raise ParameterError("similarity matrix is not symmetric")
    return EnsembleKernel.from_matrix(q[:, None] * q[None, :] * S)


def build_kernel(instance, params, similarity):
    """Ground-set features + parameters -> EnsembleKernel (one call)."""
    S = build_similarity_matrix(instance, similarity, params.kernel_weights)
    q = build_quality_vector(instance, params.theta)
    return assemble_L(q, S)


def marginal_kernel_from_L(L):
    """Marginal kernel K = L (L + I)^{-1} via the cached eigendecomposition.

    Each eigenvalue lambda of L maps to lambda / (lambda + 1), so K shares
    L's eigenvectors and has spectrum in [0, 1).
    """
    v = L.eigenvectors
    K = (v * (L.eigenvalues / (L.eigenvalues + 1.0))) @ v.T
    return MarginalKernel(0.5 * (K + K.T))


def log_subset_det(L_matrix, y):
    """log det of the principal submatrix indexed by y, -inf when singular.

    Uses the symmetric eigenvalues of the submatrix; any nonpositive
    eigenvalue, or a determinant at or below 1e-300, yields -inf.
    det over the empty index set is 1 by definition.
    """
    if not y:
        return 0.0
    sub = L_matrix[np.ix_(y, y)]
    evals = np.linalg.eigvalsh(sub)
    if evals[0] <= 0.0:
        return -math.inf
    logdet = float(np.sum(np.log(evals)))
    if logdet <= math.log(DET_UNDERFLOW_FLOOR):
        return -math.inf
    return logdet


def log_probability(L, y):
    """log P(y; L) = log det(L_y) - log det(L + I).

    Returns -inf (never raises) when det(L_y) underflows or the submatrix
    is numerically singular.
    """
    y = as_subset(y, L.n_items)
    return log_subset_det(L.matrix, y) - L.log_normalizer()


def subset_marginal(K, y):
    """det(K_y): probability that a sampled subset contains all of y."""
    y = as_subset(y, K.matrix.shape[0])
    if not y:
        return 1.0
    evals = np.linalg.eigvalsh(K.matrix[np.ix_(y, y)])
    det = float(np.prod(evals))
    if det < 0.0 and det > -1e-12:
        det = 0.0
    return det
