"""Posterior densities: Gaussian likelihood, priors, and the GP-augmented surrogate.

The GP approximates the log-likelihood surface only; all Gaussian structure
lives in the prior term.  The surrogate posterior is therefore
``exp(mu_GP(theta)) * pi_prior(theta)``, which collapses to the prior before
any training points exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular

from . import network as net_mod
from .errors import ConfigError, DegenerateChainError
from .gp import GPModel, KernelParams, gp_add_point, gp_fit, gp_predict_mean, gp_predict_var, TrainingSet
from .sampler import ChainSamples, init_walkers, run_chain

__all__ = [
    "POSITIVITY_PENALTY",
    "GaussianPrior",
    "TruePosteriorTarget",
    "SurrogatePosterior",
    "PriorBuildResult",
    "log_likelihood",
    "log_prior",
    "log_true_posterior",
    "log_surrogate_posterior",
    "build_gaussian_prior",
    "gaussian_prior_from_samples",
    "broad_prior",
]

# Log-density penalty assigning "negligibly low probability" to negative
# pre-exponential factors while keeping acceptance ratios well-defined.
POSITIVITY_PENALTY = -1.0e12


@dataclass(frozen=True)
class GaussianPrior:
    """Gaussian prior N(mean, cov) with a soft positivity constraint.

    Coordinates flagged in ``positivity_mask`` (pre-exponential factors)
    incur an additive penalty of ``POSITIVITY_PENALTY`` whenever they are
    non-positive.
    """

    mean: np.ndarray
    cov: np.ndarray
    positivity_mask: np.ndarray
    chol_factor: np.ndarray = field(init=False, repr=False)
    _log_norm: float = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        mask = np.asarray(self.positivity_mask, dtype=bool).ravel()
        n = mean.shape[0]
        if cov.shape != (n, n):
            raise ConfigError(f"covariance must be {n}x{n}, got {cov.shape}")
        if mask.shape[0] != n:
            raise ConfigError("positivity mask length must match dimension")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("prior covariance is not positive definite") from exc
        log_norm = -0.5 * n * math.log(2.0 * math.pi) - float(
            np.sum(np.log(np.diag(chol)))
        )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "positivity_mask", mask)
        object.__setattr__(self, "chol_factor", chol)
        object.__setattr__(self, "_log_norm", log_norm)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_density(self, theta) -> float:
        theta = np.asarray(theta, dtype=float).ravel()
        u = solve_triangular(self.chol_factor, theta - self.mean, lower=True, check_finite=False)
        value = self._log_norm - 0.5 * float(u @ u)
        if np.any(theta[self.positivity_mask] <= 0.0):
            value += POSITIVITY_PENALTY
        return value


def broad_prior(dim: int, positivity_mask, variance: float = 100.0, mean=None) -> GaussianPrior:
    """Wide zero-mean Gaussian used as the true posterior's prior by default."""
    mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=float)
    return GaussianPrior(
        mean=mean, cov=variance * np.eye(dim), positivity_mask=positivity_mask
    )


class TruePosteriorTarget:
    """Unnormalized true posterior of the free parameters of a reaction network.

    Couples the forward model to synthetic observations through an i.i.d.
    Gaussian likelihood with variance ``noise_var``, plus a (broad) Gaussian
    prior.  All evaluations are pure functions of theta.

    With ``center_likelihood=True`` the constant Gaussian normalization is
    dropped, so the log-likelihood is the pure misfit ``-sum(resid^2)/(2v)``
    with maximum ~0.  That is the convention a zero-mean GP surrogate needs:
    far from its training data the GP mean reverts to 0, i.e. to a relative
    likelihood of 1, rather than to an arbitrary level set by the noise
    normalization.  The posterior itself is unchanged (constant factor).
    """

    def __init__(
        self,
        pmap: net_mod.ParameterMap,
        experiments,
        observations: net_mod.ObservationSet,
        noise_var: float,
        prior: GaussianPrior,
        center_likelihood: bool = False,
    ):
        if len(observations) != len(experiments):
            raise ConfigError(
                f"{len(observations)} observations for {len(experiments)} experiments"
            )
        if noise_var <= 0:
            raise ConfigError(f"noise_var must be positive, got {noise_var}")
        if prior.dim != pmap.dim:
            raise ConfigError("prior dimension does not match free parameter count")
        self.pmap = pmap
        self.experiments = tuple(experiments)
        self.observations = observations
        self.noise_var = float(noise_var)
        self.prior = prior

        net = pmap.network
        self._conc = np.array([e.concentrations for e in self.experiments])
        self._beta = np.array([e.beta for e in self.experiments])
        self._y = observations.observations
        self._paths = [
            np.array([net.edge_index(i, j) for i, j in zip(p[:-1], p[1:])], dtype=int)
            for p in net_mod.enumerate_pathways(net)
        ]
        self._log_norm_term = (
            0.0
            if center_likelihood
            else -0.5 * len(self.experiments) * math.log(2.0 * math.pi * self.noise_var)
        )
        self.center_likelihood = center_likelihood

    @property
    def dim(self) -> int:
        return self.pmap.dim

    def model_outputs(self, theta) -> np.ndarray:
        """Slowest-pathway time for every experiment at ``theta``."""
        params = self.pmap.params_for(theta)
        rates = self._conc * params.A * np.exp(-np.outer(self._beta, params.E))
        with np.errstate(divide="ignore"):
            inv = np.where(rates > 0, 1.0 / rates, np.inf)
        times = [inv[:, p].sum(axis=1) for p in self._paths]
        return np.max(times, axis=0)

    def log_likelihood(self, theta) -> float:
        outputs = self.model_outputs(theta)
        if not np.all(np.isfinite(outputs)):
            return -math.inf
        resid = self._y - outputs
        value = self._log_norm_term - 0.5 * float(resid @ resid) / self.noise_var
        return value if math.isfinite(value) else -math.inf

    def log_posterior(self, theta) -> float:
        ll = self.log_likelihood(theta)
        if ll == -math.inf:
            return -math.inf
        return ll + self.prior.log_density(theta)


@dataclass(frozen=True)
class SurrogatePosterior:
    """Gaussian prior times exp(GP predicted log-likelihood).

    ``gp`` may be None (no training points yet), in which case the density
    equals the prior exactly and the predictive variance is the full kernel
    variance.  ``log_offset`` rescales the unnormalized density; it is part
    of ``log_density`` but deliberately not of the acquisition terms, so
    rescaling never changes which point gets selected.

    The GP may live in whitened coordinates: with ``gp_space_mean`` and
    ``gp_space_transform`` (a matrix W) set, training inputs and kernel
    distances use ``z = W (theta - mean)``.  Whitening by the inverse prior
    Cholesky factor is what makes one isotropic correlation length
    meaningful across parameters whose posterior scales differ by orders of
    magnitude, and it removes the leading correlation structure as well.
    """

    prior: GaussianPrior
    kernel: KernelParams
    gp: GPModel | None = None
    log_offset: float = 0.0
    gp_space_mean: np.ndarray | None = None
    gp_space_transform: np.ndarray | None = None

    def __post_init__(self):
        if self.gp is not None and self.gp.kernel != self.kernel:
            raise ConfigError("surrogate kernel differs from fitted GP kernel")
        if (self.gp_space_mean is None) != (self.gp_space_transform is None):
            raise ConfigError("gp_space_mean and gp_space_transform must be set together")

    @property
    def dim(self) -> int:
        return self.prior.dim

    def to_gp_space(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.gp_space_mean is None:
            return theta
        return self.gp_space_transform @ (theta - self.gp_space_mean)

    @property
    def n_training(self) -> int:
        return 0 if self.gp is None else len(self.gp)

    @property
    def var_floor(self) -> float:
        """Predictive variances at or below this are treated as exhausted.

        At a training input the jittered variance lands in [0, jitter], so a
        small multiple of the jitter cleanly separates "already observed"
        from genuinely informative candidates.
        """
        return 0.0 if self.gp is None else 16.0 * self.gp.jitter

    def gp_mean(self, theta) -> float:
        return 0.0 if self.gp is None else gp_predict_mean(self.gp, self.to_gp_space(theta))

    def gp_var(self, theta) -> float:
        if self.gp is None:
            return self.kernel.variance_s2
        return gp_predict_var(self.gp, self.to_gp_space(theta))

    def phi_bar(self, theta) -> float:
        """Log prior plus GP mean: the exponent of the unnormalized surrogate."""
        return self.prior.log_density(theta) + self.gp_mean(theta)

    def log_density(self, theta) -> float:
        return self.phi_bar(theta) + self.log_offset

    def with_point(self, theta, loglik: float, jitter: float | None = None) -> "SurrogatePosterior":
        """New surrogate with (theta, loglik) added to the GP training set."""
        z = self.to_gp_space(theta)
        if self.gp is None:
            training = TrainingSet(
                inputs=np.atleast_2d(z), outputs=np.array([loglik])
            )
            gp = gp_fit(training, self.kernel, jitter)
        else:
            gp = gp_add_point(self.gp, z, loglik)
        return replace(self, gp=gp)


def log_likelihood(target: TruePosteriorTarget, theta) -> float:
    """Gaussian log-likelihood of the observations at ``theta``."""
    return target.log_likelihood(theta)


def log_prior(prior: GaussianPrior, theta) -> float:
    """Gaussian log-prior with the positivity penalty applied."""
    return prior.log_density(theta)


def log_true_posterior(target: TruePosteriorTarget, theta) -> float:
    """Unnormalized true log-posterior: log-likelihood plus log-prior."""
    return target.log_posterior(theta)


def log_surrogate_posterior(surrogate: SurrogatePosterior, theta) -> float:
    """Unnormalized surrogate log-posterior: GP mean plus log-prior."""
    return surrogate.log_density(theta)


def gaussian_prior_from_samples(samples, inflation: float, positivity_mask) -> GaussianPrior:
    """Moment-matched Gaussian prior with inflated covariance.

    The sample covariance is symmetrized and, if factorization fails from
    borderline round-off, nudged by ``1e-10 * trace / n`` on the diagonal.
    A genuinely rank-deficient sample set (all walkers stuck, or walkers
    confined to a subspace) raises instead of being silently repaired.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[1]
    mean = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(n, n)
    cov = inflation * 0.5 * (cov + cov.T)
    eigs = np.linalg.eigvalsh(cov)
    if not np.all(np.isfinite(eigs)) or eigs[-1] <= 0 or eigs[0] <= 1e-12 * eigs[-1]:
        raise DegenerateChainError(
            "sample covariance is rank-deficient (all walkers stuck?); "
            "run a longer preliminary chain or widen the walker initialization"
        )
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        cov = cov + (1e-10 * np.trace(cov) / n) * np.eye(n)
    return GaussianPrior(mean=mean, cov=cov, positivity_mask=positivity_mask)


@dataclass(frozen=True)
class PriorBuildResult:
    """Outcome of the preliminary true-posterior exploration."""

    prior: GaussianPrior
    chain: ChainSamples
    proposal_abs_loglik_max: float
    n_proposals_recorded: int
    inflation: float


def build_gaussian_prior(
    target: TruePosteriorTarget,
    sweeps: int = 5000,
    burn_in: int | None = None,
    walkers: int | None = None,
    stretch_a: float = 2.0,
    inflation: float = 2.0,
    seed=0,
    init_center=None,
    init_spread=1.0,
) -> PriorBuildResult:
    """Construct the surrogate's Gaussian prior from a preliminary chain.

    Runs the ensemble sampler on the true posterior, then sets the prior
    mean to the post-burn-in sample mean and the covariance to ``inflation``
    times the (symmetrized, SPD-repaired) sample covariance.  Log-likelihood
    values of every proposed point, accepted or not, are tracked so the
    kernel variance can later be pinned to their maximum magnitude.

    ``init_spread`` is the standard deviation of the isotropic Gaussian the
    walkers start from (centered on ``init_center``, default the truth).
    """
    if inflation < 1.0:
        raise ConfigError(f"inflation factor must be >= 1, got {inflation}")
    n = target.dim
    n_walkers = 2 * n if walkers is None else int(walkers)
    burn = round(0.2 * sweeps) if burn_in is None else int(burn_in)

    tracker = {"max": -math.inf, "count": 0, "enabled": False}

    def recording_target(theta) -> float:
        ll = target.log_likelihood(theta)
        if tracker["enabled"] and math.isfinite(ll):
            tracker["count"] += 1
            if abs(ll) > tracker["max"]:
                tracker["max"] = abs(ll)
        if ll == -math.inf:
            return -math.inf
        return ll + target.prior.log_density(theta)

    center = target.pmap.truth_theta if init_center is None else np.asarray(init_center, float)
    state = init_walkers(n_walkers, center, init_spread**2, seed, log_target=recording_target)
    tracker["enabled"] = True
    chain = run_chain(state, recording_target, n_sweeps=sweeps, burn_in=burn, a=stretch_a)

    prior = gaussian_prior_from_samples(
        chain.samples, inflation, target.pmap.positivity_mask
    )
    return PriorBuildResult(
        prior=prior,
        chain=chain,
        proposal_abs_loglik_max=tracker["max"],
        n_proposals_recorded=tracker["count"],
        inflation=float(inflation),
    )
