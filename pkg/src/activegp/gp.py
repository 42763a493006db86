"""Exact Gaussian-process regression with a fixed isotropic squared-exponential kernel.

The model is deliberately minimal: zero prior mean, fixed kernel parameters,
and a jittered Cholesky factorization that is rebuilt from scratch whenever a
training point is added.  Rebuilding keeps incremental updates bit-identical
to a fresh fit, which the artifact layer relies on when a model is restored
from CSV.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import ConditioningError, NumericalHealthError

__all__ = [
    "KernelParams",
    "TrainingSet",
    "GPModel",
    "kernel_eval",
    "kernel_vector",
    "kernel_matrix",
    "gp_fit",
    "gp_add_point",
    "gp_predict_mean",
    "gp_predict_var",
    "gp_predict_mean_many",
    "DEFAULT_JITTER_SCALE",
]

# Relative diagonal jitter guaranteeing factorization success for training
# sets that were assembled without the minimum-distance constraint.
DEFAULT_JITTER_SCALE = 1e-8

# Round-off tolerance below which a negative predictive variance is clamped
# to zero; anything more negative indicates a genuinely sick factorization.
_VAR_CLAMP_SCALE = -1e-10


@dataclass(frozen=True)
class KernelParams:
    """Fixed parameters of the squared-exponential kernel."""

    variance_s2: float
    length_scale_ell: float

    def __post_init__(self):
        if not (self.variance_s2 > 0 and np.isfinite(self.variance_s2)):
            raise ValueError(f"variance_s2 must be positive, got {self.variance_s2}")
        if not (self.length_scale_ell > 0 and np.isfinite(self.length_scale_ell)):
            raise ValueError(
                f"length_scale_ell must be positive, got {self.length_scale_ell}"
            )


@dataclass(frozen=True)
class TrainingSet:
    """Paired inputs (N, n) and observed log-likelihood values (N,)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float).ravel()
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError(
                f"inputs ({inputs.shape[0]}) and outputs ({outputs.shape[0]}) "
                "must have equal length"
            )
        if not np.all(np.isfinite(inputs)):
            raise ValueError("training inputs must be finite")
        i, j = _closest_pair(inputs)
        if i >= 0 and np.array_equal(inputs[i], inputs[j]):
            raise ConditioningError(
                f"training inputs {i} and {j} are identical; "
                "the kernel matrix would be singular"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class GPModel:
    """A fitted GP: training data, kernel, and the factorized kernel matrix.

    ``chol_factor`` is the lower-triangular factor of ``K_N + jitter*I`` and
    ``weights`` solves ``(K_N + jitter*I) w = L``.  Instances are immutable
    and safe for concurrent read-only prediction.
    """

    training: TrainingSet
    kernel: KernelParams
    jitter: float
    chol_factor: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.training)

    @property
    def dim(self) -> int:
        return self.training.dim


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``a`` and rows of ``b``."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _closest_pair(inputs: np.ndarray) -> tuple[int, int]:
    """Indices of the closest pair of rows, or (-1, -1) for N < 2."""
    n = inputs.shape[0]
    if n < 2:
        return -1, -1
    d2 = _sq_dists(inputs, inputs)
    np.fill_diagonal(d2, np.inf)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    return int(i), int(j)


def kernel_eval(a, b, p: KernelParams) -> float:
    """Squared-exponential kernel s^2 exp(-||a-b||^2 / (2 ell^2))."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d2 = float(np.sum((a - b) ** 2))
    return p.variance_s2 * float(np.exp(-0.5 * d2 / p.length_scale_ell**2))


def kernel_vector(inputs: np.ndarray, x: np.ndarray, p: KernelParams) -> np.ndarray:
    """Cross-kernel vector between a test point and each training input."""
    diff = inputs - x
    d2 = np.einsum("ij,ij->i", diff, diff)
    return p.variance_s2 * np.exp(-0.5 * d2 / p.length_scale_ell**2)


def kernel_matrix(inputs: np.ndarray, p: KernelParams) -> np.ndarray:
    """Dense kernel matrix over the training inputs."""
    d2 = _sq_dists(inputs, inputs)
    return p.variance_s2 * np.exp(-0.5 * d2 / p.length_scale_ell**2)


def gp_fit(training: TrainingSet, kernel: KernelParams, jitter: float | None = None) -> GPModel:
    """Factorize the (jittered) kernel matrix and solve for the weights.

    ``jitter=None`` selects the default ``1e-8 * s^2``; pass ``0.0`` to fit
    without a nugget.
    """
    if len(training) < 1:
        raise ValueError("training set must contain at least one point")
    if jitter is None:
        jitter = DEFAULT_JITTER_SCALE * kernel.variance_s2
    if jitter < 0:
        raise ValueError(f"jitter must be >= 0, got {jitter}")

    K = kernel_matrix(training.inputs, kernel)
    K[np.diag_indices_from(K)] += jitter
    try:
        chol, _ = cho_factor(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        i, j = _closest_pair(training.inputs)
        dist = float(np.linalg.norm(training.inputs[i] - training.inputs[j]))
        raise ConditioningError(
            f"kernel matrix is not positive definite at jitter={jitter:g}; "
            f"closest input pair is ({i}, {j}) at distance {dist:.3e}"
        ) from exc
    chol = np.tril(chol)
    weights = cho_solve((chol, True), training.outputs, check_finite=False)
    return GPModel(
        training=training,
        kernel=kernel,
        jitter=float(jitter),
        chol_factor=chol,
        weights=weights,
    )


def gp_add_point(model: GPModel, x, y: float) -> GPModel:
    """Return a new model fitted on the training set augmented with (x, y).

    Implemented as a full refit so the result is bit-identical to
    ``gp_fit`` on the augmented set, at O(N^3) cost that is negligible for
    the training-set sizes this package targets.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs model dim {model.dim}")
    if np.any(np.all(model.training.inputs == x, axis=1)):
        raise ValueError("new input duplicates an existing training input")
    augmented = TrainingSet(
        inputs=np.vstack([model.training.inputs, x]),
        outputs=np.append(model.training.outputs, float(y)),
    )
    return gp_fit(augmented, model.kernel, model.jitter)


def gp_predict_mean(model: GPModel, x) -> float:
    """Predictive mean at ``x`` (zero prior mean assumed)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs model dim {model.dim}")
    k = kernel_vector(model.training.inputs, x, model.kernel)
    return float(k @ model.weights)


def gp_predict_mean_many(model: GPModel, xs: np.ndarray) -> np.ndarray:
    """Predictive mean at each row of ``xs``; vector counterpart of the above."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    d2 = _sq_dists(xs, model.training.inputs)
    K = model.kernel.variance_s2 * np.exp(-0.5 * d2 / model.kernel.length_scale_ell**2)
    return K @ model.weights


def gp_predict_var(model: GPModel, x) -> float:
    """Predictive variance at ``x``, clamped into [0, s^2].

    Round-off can push the exact expression slightly negative; values in
    [-1e-10 s^2, 0) are clamped to zero while anything more negative raises,
    since that indicates a corrupted factorization rather than round-off.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs model dim {model.dim}")
    s2 = model.kernel.variance_s2
    k = kernel_vector(model.training.inputs, x, model.kernel)
    v = solve_triangular(model.chol_factor, k, lower=True, check_finite=False)
    var = s2 - float(v @ v)
    if var < 0:
        if var < _VAR_CLAMP_SCALE * s2:
            raise NumericalHealthError(
                f"predictive variance {var:.3e} is negative beyond round-off "
                f"(s^2={s2:g}, N={len(model)})"
            )
        var = 0.0
    return min(var, s2)
