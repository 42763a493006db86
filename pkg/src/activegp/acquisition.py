"""Point selection for GP training: probability-weighted variance search.

The acquisition score is the log of the point-wise variance of the
unnormalized surrogate posterior, ``2*phi_bar + sigma^2 + log(exp(sigma^2)-1)``
up to an additive constant.  Working in log space matters: the direct form
overflows double precision for realistic log-density magnitudes.  Candidates
come from running the ensemble sampler on the score surface; a minimum
distance to the existing training inputs keeps the kernel matrix
well-conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bayes import SurrogatePosterior, TruePosteriorTarget
from .diagnostics import DiagnosticsConfig, DiagnosticsRecord, evaluate_accuracy
from .errors import ConfigError, SaturationError
from .gp import GPModel
from .sampler import ChainSamples, init_walkers, run_chain

__all__ = [
    "AcquisitionConfig",
    "TrainingHistory",
    "IterationRecord",
    "log_utility_value",
    "log_utility",
    "distance_ok",
    "select_next_point",
    "select_random_point",
    "train_loop",
    "init_training_grid",
    "init_training_from_chain",
]


@dataclass(frozen=True)
class AcquisitionConfig:
    """Sampler and constraint settings for one acquisition search."""

    search_sweeps: int = 2000
    search_burn_in: int | None = None  # None -> 25% of sweeps
    walker_count: int | None = None    # None -> 2n
    stretch_a: float = 2.0
    distance_factor: float = 0.2
    tie_tolerance: float = 1e-9

    def __post_init__(self):
        if self.distance_factor <= 0:
            raise ConfigError(f"distance_factor must be positive, got {self.distance_factor}")
        if self.search_burn_in is not None and self.search_burn_in >= self.search_sweeps:
            raise ConfigError("search_burn_in must be below search_sweeps")

    def resolved(self, dim: int) -> tuple[int, int]:
        walkers = 2 * dim if self.walker_count is None else self.walker_count
        burn = (
            round(0.25 * self.search_sweeps)
            if self.search_burn_in is None
            else self.search_burn_in
        )
        return walkers, burn


def log_utility_value(phi_bar: float, var: float) -> float:
    """Stable log of exp(2*phi_bar) * (exp(2*var) - exp(var)).

    Returns -inf when the variance is zero (nothing left to learn there).
    """
    if var < 0:
        raise ValueError(f"variance must be non-negative, got {var}")
    if var == 0.0:
        return -math.inf
    if var > 30.0:
        # log(expm1(v)) = v + log1p(-exp(-v)); expm1 would overflow.
        log_gap = var + math.log1p(-math.exp(-var))
    else:
        log_gap = math.log(math.expm1(var))
    return 2.0 * phi_bar + var + log_gap


def log_utility(surrogate: SurrogatePosterior, theta) -> float:
    """Acquisition score at ``theta``; -inf at (effectively) observed points.

    Variances at or below the surrogate's jitter floor are treated as zero
    so that every training input is excluded exactly, matching the
    zero-variance sentinel of the ideal jitter-free model.
    """
    var = surrogate.gp_var(theta)
    if var <= surrogate.var_floor:
        return -math.inf
    return log_utility_value(surrogate.phi_bar(theta), var)


def distance_ok(theta, existing, ell: float, factor: float = 0.2) -> bool:
    """True iff ``theta`` is strictly farther than ``factor * ell`` from all rows."""
    existing = np.asarray(existing, dtype=float)
    if existing.size == 0:
        return True
    existing = np.atleast_2d(existing)
    diff = existing - np.asarray(theta, dtype=float)
    min_d2 = float(np.min(np.einsum("ij,ij->i", diff, diff)))
    return min_d2 > (factor * ell) ** 2


def _training_inputs(surrogate: SurrogatePosterior) -> np.ndarray:
    """Existing GP inputs in GP space (the space the distance rule lives in)."""
    if surrogate.gp is None:
        return np.empty((0, surrogate.dim))
    return surrogate.gp.training.inputs


def _search_chain(
    surrogate: SurrogatePosterior,
    cfg: AcquisitionConfig,
    log_target: Callable,
    seed,
) -> tuple[ChainSamples, np.random.Generator]:
    """Run one candidate-search chain; returns samples plus a tie-break RNG."""
    walkers, burn = cfg.resolved(surrogate.dim)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    chain_seed, pick_seed = ss.spawn(2)
    state = init_walkers(
        walkers, surrogate.prior.mean, surrogate.prior.cov, chain_seed, log_target=log_target
    )
    chain = run_chain(state, log_target, n_sweeps=cfg.search_sweeps, burn_in=burn, a=cfg.stretch_a)
    return chain, np.random.default_rng(pick_seed)


def select_next_point(
    surrogate: SurrogatePosterior, cfg: AcquisitionConfig, seed
) -> tuple[np.ndarray, float]:
    """Highest-utility admissible sample from a chain on the acquisition surface.

    Post-burn-in samples are ranked by utility; the best value among samples
    clearing the minimum-distance constraint defines the winner, and any
    admissible sample within ``tie_tolerance`` of it is drawn uniformly at
    random (seeded) to break ties between symmetric maxima.
    """
    chain, pick_rng = _search_chain(
        surrogate, cfg, lambda th: log_utility(surrogate, th), seed
    )
    existing = _training_inputs(surrogate)
    ell = surrogate.kernel.length_scale_ell

    values = chain.log_target_values
    order = np.argsort(-values, kind="stable")
    best = -math.inf
    candidates: list[int] = []
    for idx in order:
        v = values[idx]
        if candidates and v < best - cfg.tie_tolerance:
            break
        if v == -math.inf:
            break
        if distance_ok(
            surrogate.to_gp_space(chain.samples[idx]), existing, ell, cfg.distance_factor
        ):
            if not candidates:
                best = v
            candidates.append(int(idx))
    if not candidates:
        raise SaturationError(
            "no post-burn-in sample satisfies the minimum-distance constraint "
            f"({cfg.distance_factor:g} * ell = {cfg.distance_factor * ell:g})"
        )
    choice = candidates[int(pick_rng.integers(len(candidates)))]
    return chain.samples[choice].copy(), float(values[choice])


def select_random_point(
    surrogate: SurrogatePosterior, cfg: AcquisitionConfig, seed
) -> np.ndarray:
    """Uniformly random admissible post-burn-in sample of the surrogate posterior."""
    chain, pick_rng = _search_chain(surrogate, cfg, surrogate.log_density, seed)
    existing = _training_inputs(surrogate)
    ell = surrogate.kernel.length_scale_ell

    for idx in pick_rng.permutation(len(chain)):
        if distance_ok(
            surrogate.to_gp_space(chain.samples[idx]), existing, ell, cfg.distance_factor
        ):
            return chain.samples[idx].copy()
    raise SaturationError(
        "no post-burn-in surrogate sample satisfies the minimum-distance constraint"
    )


@dataclass(frozen=True)
class IterationRecord:
    """One training-loop step: the selected point and its observed value."""

    iteration: int
    theta: np.ndarray
    loglik: float
    acquisition_value: float


@dataclass
class TrainingHistory:
    """Everything the training loop did, in iteration order."""

    iterations: list[IterationRecord] = field(default_factory=list)
    diagnostics: list[DiagnosticsRecord] = field(default_factory=list)
    halt_reason: str | None = None
    n_likelihood_evals: int = 0

    def __len__(self):
        return len(self.iterations)


def _iteration_seed(base_seed: int, iteration: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(iteration,))


def train_loop(
    target: TruePosteriorTarget,
    surrogate: SurrogatePosterior,
    budget: int,
    cfg: AcquisitionConfig,
    diag_cadence: int = 0,
    mode: str = "active",
    seed: int = 0,
    diag_cfg: DiagnosticsConfig | None = None,
    diag_seed: int | None = None,
) -> tuple[SurrogatePosterior, TrainingHistory]:
    """Sequentially grow the GP training set for ``budget`` iterations.

    Each iteration selects a point (by acquisition search or, in random
    mode, by sampling the surrogate posterior), evaluates the true
    log-likelihood there (the only forward-model solves in the loop), and
    refits the GP.  With ``diag_cadence > 0`` accuracy diagnostics run before
    the first addition (the N_obs = 0 record), every ``diag_cadence``
    iterations, and at the end.  Saturation halts early with a partial
    history.
    """
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")
    if mode not in ("active", "random"):
        raise ConfigError(f"mode must be 'active' or 'random', got {mode!r}")
    history = TrainingHistory()
    diag_cfg = diag_cfg or DiagnosticsConfig()
    diag_seed = seed if diag_seed is None else diag_seed

    def run_diag(iteration: int):
        record = evaluate_accuracy(
            surrogate,
            target,
            diag_cfg,
            seed=_iteration_seed(diag_seed, iteration),
            iteration=iteration,
        )
        history.diagnostics.append(record)

    if diag_cadence > 0:
        run_diag(0)

    for it in range(1, budget + 1):
        it_seed = _iteration_seed(seed, it)
        try:
            if mode == "active":
                theta, acq = select_next_point(surrogate, cfg, it_seed)
            else:
                theta = select_random_point(surrogate, cfg, it_seed)
                acq = log_utility(surrogate, theta)
        except SaturationError as exc:
            history.halt_reason = str(exc)
            break
        loglik = target.log_likelihood(theta)
        history.n_likelihood_evals += 1
        surrogate = surrogate.with_point(theta, loglik)
        history.iterations.append(
            IterationRecord(iteration=it, theta=theta, loglik=loglik, acquisition_value=acq)
        )
        if diag_cadence > 0 and it % diag_cadence == 0:
            run_diag(it)

    # final record at the actual iteration count (also covers early halts)
    if diag_cadence > 0 and history.diagnostics[-1].iteration != len(history):
        run_diag(len(history))

    return surrogate, history


def init_training_grid(prior, per_dim: int, half_width_sds: float = 2.0) -> np.ndarray:
    """Regular grid centered on the prior mean, spanning +- a few prior SDs.

    Intended for low-dimensional problems (the point count is per_dim^n).
    """
    if per_dim < 1:
        raise ConfigError(f"per_dim must be >= 1, got {per_dim}")
    sds = np.sqrt(np.diag(prior.cov))
    offsets = (
        np.linspace(-half_width_sds, half_width_sds, per_dim)
        if per_dim > 1
        else np.zeros(1)
    )
    axes = [prior.mean[i] + offsets * sds[i] for i in range(prior.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def init_training_from_chain(
    chain: ChainSamples, walker_count: int, iteration_count: int, seed
) -> np.ndarray:
    """Walker positions from a random selection of post-burn-in sweeps.

    Exact duplicate positions (walkers that did not move between the chosen
    sweeps) are dropped, keeping first occurrences in sweep order.  No
    minimum-distance constraint is applied to this initial set.
    """
    if walker_count != chain.n_walkers:
        raise ConfigError(
            f"chain has {chain.n_walkers} walkers, init requested {walker_count}"
        )
    n_sweeps = len(chain) // chain.n_walkers
    if iteration_count > n_sweeps:
        raise ConfigError(
            f"chain has only {n_sweeps} post-burn-in sweeps, need {iteration_count}"
        )
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(n_sweeps, size=iteration_count, replace=False))
    points = chain.sweep_view()[picks].reshape(-1, chain.dim)
    _, first = np.unique(points, axis=0, return_index=True)
    return points[np.sort(first)]
