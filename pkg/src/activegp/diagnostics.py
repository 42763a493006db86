"""Surrogate accuracy measures: hold-out log-density errors and sample-weight spread.

Two ensemble chains supply hold-out points, one per surface, so the error is
probed both where the surrogate thinks the mass is and where the true
posterior actually puts it.  The weight-based measure R compares the first
two moments of w = pi_true / pi_surrogate at surrogate samples; R = 1 iff
the two unnormalized surfaces agree up to a constant factor with weights of
mean one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, NumericalHealthError
from .sampler import ChainSamples, init_walkers, run_chain

__all__ = [
    "DiagnosticsConfig",
    "DiagnosticsRecord",
    "abs_error",
    "r_measure",
    "r_measure_from_log",
    "evaluate_accuracy",
]


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Sampler settings for the two hold-out chains."""

    sweeps: int = 4000
    burn_in: int | None = None   # None -> 25% of sweeps
    walkers: int | None = None   # None -> 2n
    stretch_a: float = 2.0

    def resolved(self, dim: int) -> tuple[int, int]:
        walkers = 2 * dim if self.walkers is None else self.walkers
        burn = round(0.25 * self.sweeps) if self.burn_in is None else self.burn_in
        if burn >= self.sweeps:
            raise ConfigError("diagnostics burn-in must be below sweep count")
        return walkers, burn


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Accuracy snapshot at one training iteration."""

    iteration: int
    e_approx: float
    e_true: float
    e_approx_star: float
    e_true_star: float
    r_measure: float
    mean_weight: float
    n_samples_each: int
    n_excluded_approx: int = 0
    n_excluded_true: int = 0
    n_excluded_weights: int = 0
    warnings: tuple[str, ...] = ()


def _error_stats(delta: np.ndarray) -> tuple[float, float, int]:
    """Mean |delta| and its offset-corrected variant, excluding non-finite entries.

    The offset-corrected value subtracts the median, the minimizer of
    mean|delta - c| over constants c, so it ignores the arbitrary additive
    constant between two unnormalized log-densities.
    """
    finite = np.isfinite(delta)
    n_excluded = int(delta.size - finite.sum())
    kept = delta[finite]
    if kept.size == 0:
        raise NumericalHealthError("all hold-out samples had non-finite log-densities")
    e = float(np.mean(np.abs(kept)))
    e_star = float(np.mean(np.abs(kept - np.median(kept))))
    return e, e_star, n_excluded


def abs_error(samples: ChainSamples, log_true, log_surrogate) -> float:
    """Mean absolute difference of two unnormalized log-densities at the samples.

    Non-finite values at a sample exclude that sample from the mean.
    """
    lt = np.array([log_true(th) for th in samples.samples])
    ls = np.array([log_surrogate(th) for th in samples.samples])
    e, _, _ = _error_stats(ls - lt)
    return e


def r_measure(weights) -> tuple[float, float]:
    """Relative second moment R = E[w^2] / E[w]^2 of positive sample weights.

    Returns (R, mean weight).  Non-finite weights are excluded; R is computed
    in the single-rounding form n * sum(w^2) / sum(w)^2 and clamped at the
    theoretical minimum of 1 against round-off.
    """
    w = np.asarray(weights, dtype=float).ravel()
    finite = np.isfinite(w)
    w = w[finite]
    if w.size == 0:
        raise NumericalHealthError("all sample weights were non-finite")
    if np.any(w <= 0):
        raise ValueError("sample weights must be positive")
    s1 = float(np.sum(w))
    s2 = float(np.sum(w * w))
    r = w.size * s2 / (s1 * s1)
    return _clamp_r(r), s1 / w.size


def r_measure_from_log(log_weights) -> tuple[float, float, int]:
    """R and mean weight from log weights, shifted by the maximum before exponentiation.

    The shift cancels in R exactly and keeps the moments finite for weight
    ratios far beyond double-precision range.  The mean weight is computed
    at the original scale (and may overflow to inf for extreme mismatches).
    Returns (R, mean weight, number of excluded non-finite entries).
    """
    lw = np.asarray(log_weights, dtype=float).ravel()
    finite = np.isfinite(lw)
    n_excluded = int(lw.size - finite.sum())
    lw = lw[finite]
    if lw.size == 0:
        raise NumericalHealthError("all sample weights were non-finite")
    shifted = np.exp(lw - lw.max())
    s1 = float(np.sum(shifted))
    s2 = float(np.sum(shifted * shifted))
    r = lw.size * s2 / (s1 * s1)
    with np.errstate(over="ignore"):
        mean_w = float(np.exp(logsumexp(lw) - math.log(lw.size)))
    return _clamp_r(r), mean_w, n_excluded


def _clamp_r(r: float) -> float:
    # Cauchy-Schwarz guarantees R >= 1 exactly; only round-off can dip below.
    if r < 1.0 - 1e-9:
        raise NumericalHealthError(f"weight moment ratio {r} fell below 1 beyond round-off")
    return max(r, 1.0)


def evaluate_accuracy(
    surrogate,
    target,
    cfg: DiagnosticsConfig | None = None,
    seed=0,
    iteration: int = 0,
) -> DiagnosticsRecord:
    """Run hold-out chains on both surfaces and compute all accuracy measures.

    ``surrogate`` must provide ``log_density`` and a Gaussian ``prior`` used
    to initialize the walkers; ``target`` must provide ``log_posterior``.
    Deterministic given the seed: the two chains use independent spawned
    streams.
    """
    cfg = cfg or DiagnosticsConfig()
    dim = surrogate.prior.dim
    walkers, burn = cfg.resolved(dim)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seed_approx, seed_true = ss.spawn(2)

    mean, cov = surrogate.prior.mean, surrogate.prior.cov
    state_a = init_walkers(walkers, mean, cov, seed_approx, log_target=surrogate.log_density)
    chain_a = run_chain(state_a, surrogate.log_density, cfg.sweeps, burn, a=cfg.stretch_a)
    state_t = init_walkers(walkers, mean, cov, seed_true, log_target=target.log_posterior)
    chain_t = run_chain(state_t, target.log_posterior, cfg.sweeps, burn, a=cfg.stretch_a)

    # Cross evaluations; the sampled surface's own values are already cached.
    log_true_at_a = np.array([target.log_posterior(th) for th in chain_a.samples])
    log_surr_at_t = np.array([surrogate.log_density(th) for th in chain_t.samples])

    e_approx, e_approx_star, excl_a = _error_stats(chain_a.log_target_values - log_true_at_a)
    e_true, e_true_star, excl_t = _error_stats(log_surr_at_t - chain_t.log_target_values)
    r, mean_w, excl_w = r_measure_from_log(log_true_at_a - chain_a.log_target_values)

    return DiagnosticsRecord(
        iteration=iteration,
        e_approx=e_approx,
        e_true=e_true,
        e_approx_star=e_approx_star,
        e_true_star=e_true_star,
        r_measure=r,
        mean_weight=mean_w,
        n_samples_each=len(chain_a),
        n_excluded_approx=excl_a,
        n_excluded_true=excl_t,
        n_excluded_weights=excl_w,
        warnings=chain_a.warnings + chain_t.warnings,
    )
