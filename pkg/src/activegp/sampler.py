"""Affine-invariant ensemble MCMC with the stretch move.

One sampler serves three roles: preliminary exploration of the true
posterior, searching the acquisition surface, and drawing hold-out samples
for the accuracy diagnostics.  Walkers are updated sequentially within a
sweep (walker ``i`` may see already-updated walkers ``j < i``), which is the
deterministic mode every test in this package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError

__all__ = [
    "EnsembleState",
    "ChainSamples",
    "init_walkers",
    "z_from_uniform",
    "sample_z",
    "stretch_move",
    "run_chain",
    "DEGENERATE_ACCEPTANCE",
]

LogTarget = Callable[[np.ndarray], float]

# Below this overall acceptance rate a chain is flagged as degenerate.
DEGENERATE_ACCEPTANCE = 0.01


@dataclass
class EnsembleState:
    """Positions and cached log-target values of the walker ensemble."""

    walkers: np.ndarray
    log_target_values: np.ndarray | None
    rng: np.random.Generator
    step_index: int = 0
    last_accepted: np.ndarray | None = None
    n_proposals: int = 0
    n_accepted: int = 0
    nan_count: int = 0

    @property
    def n_walkers(self) -> int:
        return self.walkers.shape[0]

    @property
    def dim(self) -> int:
        return self.walkers.shape[1]


@dataclass(frozen=True)
class ChainSamples:
    """Pooled post-burn-in samples, stored sweep-major (walker index fastest)."""

    samples: np.ndarray
    log_target_values: np.ndarray
    accepted_flags: np.ndarray
    burn_in_used: int
    n_walkers: int
    acceptance_rate: float
    nan_count: int = 0
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def sweep_view(self) -> np.ndarray:
        """Samples reshaped to (n_sweeps, n_walkers, dim)."""
        return self.samples.reshape(-1, self.n_walkers, self.samples.shape[1])


def init_walkers(
    count: int,
    center,
    spread,
    seed: int,
    log_target: LogTarget | None = None,
) -> EnsembleState:
    """Draw ``count`` i.i.d. Gaussian walkers around ``center``.

    ``spread`` is the covariance matrix of the draw (a scalar or 1-D array is
    promoted to a diagonal).  The stretch move needs at least ``2n`` walkers
    to span an ``n``-dimensional space.  When ``log_target`` is given the
    cached values are filled immediately; otherwise they are computed on the
    first sweep.
    """
    center = np.asarray(center, dtype=float).ravel()
    n = center.shape[0]
    if count < 2 * n:
        raise ConfigError(
            f"ensemble needs at least 2n={2 * n} walkers for dimension {n}, got {count}"
        )
    spread = np.asarray(spread, dtype=float)
    if spread.ndim == 0:
        spread = np.eye(n) * float(spread)
    elif spread.ndim == 1:
        spread = np.diag(spread)
    if spread.shape != (n, n):
        raise ConfigError(f"spread must be {n}x{n}, got {spread.shape}")
    try:
        chol = np.linalg.cholesky(spread)
    except np.linalg.LinAlgError as exc:
        raise ConfigError("walker spread matrix is not positive definite") from exc

    rng = np.random.default_rng(seed)
    walkers = center + rng.standard_normal((count, n)) @ chol.T
    values = None
    if log_target is not None:
        values = np.array([log_target(w) for w in walkers], dtype=float)
    return EnsembleState(walkers=walkers, log_target_values=values, rng=rng)


def z_from_uniform(u, a: float = 2.0):
    """Inverse CDF of the stretch-move scale density g(z) ~ 1/sqrt(z) on [1/a, a]."""
    if a <= 1:
        raise ConfigError(f"stretch parameter a must exceed 1, got {a}")
    sqrt_a = np.sqrt(a)
    return (np.asarray(u) * (sqrt_a - 1.0 / sqrt_a) + 1.0 / sqrt_a) ** 2


def sample_z(a: float, rng: np.random.Generator, size: int | None = None):
    """Draw stretch scales from g(z) ~ 1/sqrt(z) on [1/a, a]."""
    if a <= 1:
        raise ConfigError(f"stretch parameter a must exceed 1, got {a}")
    u = rng.random() if size is None else rng.random(size)
    z = z_from_uniform(u, a)
    return float(z) if size is None else z


def stretch_move(
    state: EnsembleState,
    log_target: LogTarget,
    a: float = 2.0,
    rng: np.random.Generator | None = None,
) -> EnsembleState:
    """One full sweep: update every walker in turn via the stretch move.

    For walker ``X_i`` a complementary walker ``X_j`` (j != i) is chosen
    uniformly, a scale ``z`` is drawn, and ``Y = X_j + z (X_i - X_j)`` is
    accepted with probability ``min(1, z^(n-1) exp(logpi(Y) - logpi(X_i)))``.
    A NaN log-target is treated as a rejection and counted.  Exactly three
    RNG draws are consumed per walker regardless of the outcome.
    """
    if a <= 1:
        raise ConfigError(f"stretch parameter a must exceed 1, got {a}")
    rng = state.rng if rng is None else rng
    walkers = state.walkers.copy()
    w, n = walkers.shape
    if state.log_target_values is None:
        values = np.array([log_target(x) for x in walkers], dtype=float)
    else:
        values = state.log_target_values.copy()
    accepted = np.zeros(w, dtype=bool)
    nan_count = state.nan_count

    for i in range(w):
        j = int(rng.integers(w - 1))
        if j >= i:
            j += 1
        z = z_from_uniform(rng.random(), a)
        u = rng.random()
        proposal = walkers[j] + z * (walkers[i] - walkers[j])
        lp = log_target(proposal)
        if np.isnan(lp):
            nan_count += 1
            continue
        if lp == -np.inf:
            continue
        log_ratio = (n - 1) * np.log(z) + lp - values[i]
        if np.log(u) < log_ratio:
            walkers[i] = proposal
            values[i] = lp
            accepted[i] = True

    return replace(
        state,
        walkers=walkers,
        log_target_values=values,
        step_index=state.step_index + 1,
        last_accepted=accepted,
        n_proposals=state.n_proposals + w,
        n_accepted=state.n_accepted + int(accepted.sum()),
        nan_count=nan_count,
    )


def run_chain(
    state: EnsembleState,
    log_target: LogTarget,
    n_sweeps: int,
    burn_in: int,
    a: float = 2.0,
) -> ChainSamples:
    """Run ``n_sweeps`` sweeps and pool the post-burn-in walker positions.

    Returns ``W * (n_sweeps - burn_in)`` samples in sweep-major order with
    their cached log-target values and per-sweep acceptance flags.  An
    overall acceptance rate below 1% attaches a degenerate-chain warning.
    """
    if not 0 <= burn_in < n_sweeps:
        raise ConfigError(f"burn_in must satisfy 0 <= burn_in < n_sweeps, got {burn_in}/{n_sweeps}")
    w = state.n_walkers
    kept = n_sweeps - burn_in
    samples = np.empty((kept, w, state.dim))
    values = np.empty((kept, w))
    flags = np.empty((kept, w), dtype=bool)

    proposals_before = state.n_proposals
    accepted_before = state.n_accepted
    nan_before = state.nan_count
    for sweep in range(n_sweeps):
        state = stretch_move(state, log_target, a=a)
        k = sweep - burn_in
        if k >= 0:
            samples[k] = state.walkers
            values[k] = state.log_target_values
            flags[k] = state.last_accepted

    n_prop = state.n_proposals - proposals_before
    rate = (state.n_accepted - accepted_before) / n_prop if n_prop else 0.0
    warnings = ()
    if rate < DEGENERATE_ACCEPTANCE:
        warnings = (
            f"degenerate chain: acceptance rate {rate:.4f} below "
            f"{DEGENERATE_ACCEPTANCE:.0%} over {n_sweeps} sweeps",
        )
    return ChainSamples(
        samples=samples.reshape(kept * w, state.dim),
        log_target_values=values.reshape(kept * w),
        accepted_flags=flags.reshape(kept * w),
        burn_in_used=burn_in,
        n_walkers=w,
        acceptance_rate=float(rate),
        nan_count=state.nan_count - nan_before,
        warnings=warnings,
    )
