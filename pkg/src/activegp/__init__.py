"""Iterative Gaussian-process surrogates for Bayesian posteriors.

The package builds a cheap surrogate of an expensive-to-evaluate posterior
by fitting a GP to observed log-likelihood values and growing the training
set one point at a time, choosing each point by a probability-weighted
predictive-variance score searched with an affine-invariant ensemble MCMC
sampler.  Bundled reaction-network toy problems exercise the full loop in
2, 6, and 7 dimensions.
"""

from .acquisition import (
    AcquisitionConfig,
    TrainingHistory,
    distance_ok,
    init_training_from_chain,
    init_training_grid,
    log_utility,
    select_next_point,
    select_random_point,
    train_loop,
)
from .bayes import (
    GaussianPrior,
    PriorBuildResult,
    SurrogatePosterior,
    TruePosteriorTarget,
    broad_prior,
    build_gaussian_prior,
    log_likelihood,
    log_prior,
    log_surrogate_posterior,
    log_true_posterior,
)
from .diagnostics import DiagnosticsConfig, DiagnosticsRecord, abs_error, evaluate_accuracy, r_measure
from .errors import (
    ActiveGPError,
    ArtifactError,
    ConditioningError,
    ConfigError,
    DegenerateChainError,
    NumericalHealthError,
    SaturationError,
)
from .gp import (
    GPModel,
    KernelParams,
    TrainingSet,
    gp_add_point,
    gp_fit,
    gp_predict_mean,
    gp_predict_var,
    kernel_eval,
)
from .network import (
    ExperimentCondition,
    NetworkDefinition,
    ObservationSet,
    ParameterMap,
    RateParams,
    ReactionNetwork,
    enumerate_pathways,
    generate_synthetic_data,
    load_network,
    model_output,
    pathway_time,
    reaction_rate,
)
from .sampler import ChainSamples, EnsembleState, init_walkers, run_chain, sample_z, stretch_move

__version__ = "0.1.0"
