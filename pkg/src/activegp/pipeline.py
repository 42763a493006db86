"""End-to-end experiment phases operating on an artifact directory.

Each phase reads what earlier phases wrote and records everything it
resolves into ``manifest.toml``, so any phase (and any re-run) can be
reproduced from the directory alone.  The full pipeline is:

    gen-data -> build-prior -> train -> sample/grid  (== run)

with ``diagnose`` and ``sample`` re-runnable on a finished directory.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__ as _version
from . import artifacts as art
from .acquisition import (
    AcquisitionConfig,
    TrainingHistory,
    init_training_from_chain,
    init_training_grid,
    train_loop,
)
from .bayes import (
    GaussianPrior,
    PriorBuildResult,
    SurrogatePosterior,
    TruePosteriorTarget,
    broad_prior,
    build_gaussian_prior,
)
from .config import RunConfig
from .diagnostics import DiagnosticsConfig, DiagnosticsRecord, evaluate_accuracy
from .errors import ArtifactError, ConfigError, NumericalHealthError
from .gp import KernelParams, TrainingSet, gp_fit
from .network import (
    NetworkDefinition,
    ObservationSet,
    ParameterMap,
    generate_synthetic_data,
    load_network,
    model_output,
)
from .sampler import ChainSamples, init_walkers, run_chain

__all__ = [
    "RunContext",
    "RunResult",
    "build_context",
    "resolve_s2",
    "gen_data",
    "build_prior",
    "train",
    "diagnose",
    "sample_surface",
    "run_experiment",
]


@dataclass
class RunContext:
    """Resolved problem assembly shared by all phases."""

    config: RunConfig
    netdef: NetworkDefinition
    pmap: ParameterMap
    experiments: tuple
    noise_sigma: float
    data_seed: int
    out_dir: Path


@dataclass
class RunResult:
    out_dir: Path
    s2: float
    n_iterations: int
    halt_reason: str | None
    final_diagnostics: DiagnosticsRecord | None


def _now() -> str:
    return _dt.datetime.now().isoformat(timespec="seconds")


def default_out_dir(config: RunConfig) -> Path:
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    return Path(config.output_root) / f"{config.name}-{config.config_hash()}-{stamp}"


def build_context(config: RunConfig, out_dir: Path) -> RunContext:
    netdef = load_network(config.network)
    pmap = ParameterMap(
        network=netdef.network, base=netdef.truth, free_names=tuple(config.free_parameters)
    )
    if config.data.experiments is None:
        experiments = netdef.experiments
    else:
        experiments = netdef.experiment_subset(config.data.experiments)
    noise_sigma = (
        netdef.noise_sigma if config.data.noise_sigma is None else config.data.noise_sigma
    )
    data_seed = netdef.data_seed if config.seeds.data is None else config.seeds.data
    return RunContext(
        config=config,
        netdef=netdef,
        pmap=pmap,
        experiments=experiments,
        noise_sigma=noise_sigma,
        data_seed=data_seed,
        out_dir=Path(out_dir),
    )


def _update_manifest(out_dir: Path, **sections) -> None:
    path = out_dir / art.MANIFEST
    manifest = art.read_manifest(path) if path.exists() else {}
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(manifest.get(key), dict):
            manifest[key].update(value)
        else:
            manifest[key] = value
    art.write_manifest(path, manifest)


def _init_manifest(config: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _update_manifest(
        out_dir,
        run={
            "status": "created",
            "package_version": _version,
            "schema": art.SCHEMA_VERSION,
            "started_at": _now(),
        },
        config=config.model_dump(mode="json"),
    )


def gen_data(ctx: RunContext) -> ObservationSet:
    """Phase 1: synthesize noisy observations and persist them."""
    obs = generate_synthetic_data(
        ctx.netdef.network,
        ctx.netdef.truth,
        ctx.experiments,
        sigma=ctx.noise_sigma,
        seed=ctx.data_seed,
    )
    clean = [model_output(ctx.netdef.network, ctx.netdef.truth, e) for e in ctx.experiments]
    art.write_observations(
        ctx.out_dir / art.OBSERVATIONS_CSV,
        [e.experiment_id for e in ctx.experiments],
        clean,
        obs.observations,
    )
    _update_manifest(
        ctx.out_dir,
        run={"status": "data-generated"},
        resolved={"data_seed": ctx.data_seed, "noise_sigma": ctx.noise_sigma},
    )
    return obs


def load_observations(ctx: RunContext) -> ObservationSet:
    _, _, observed = art.read_observations(ctx.out_dir / art.OBSERVATIONS_CSV)
    return ObservationSet(observations=observed, noise_sigma=ctx.noise_sigma, seed=ctx.data_seed)


def make_target(ctx: RunContext, obs: ObservationSet, prior: GaussianPrior | None = None) -> TruePosteriorTarget:
    """True posterior over the free parameters.

    Until the surrogate's Gaussian prior exists, the only available prior is
    the broad exploration one ([true_prior] in the config); that is what the
    preliminary chain runs on.  Every later phase passes the constructed
    prior so that the surrogate and the true surface share their prior term
    and the accuracy measures isolate the GP's likelihood approximation.
    """
    cfg = ctx.config
    if prior is None:
        prior = broad_prior(
            ctx.pmap.dim,
            ctx.pmap.positivity_mask,
            variance=cfg.true_prior.variance,
            mean=cfg.true_prior.mean,
        )
    mode = cfg.data.likelihood_variance
    if mode == "sigma":
        noise_var = ctx.noise_sigma
    elif mode == "sigma_squared":
        noise_var = ctx.noise_sigma**2
    else:
        noise_var = float(mode)
    return TruePosteriorTarget(
        pmap=ctx.pmap,
        experiments=ctx.experiments,
        observations=obs,
        noise_var=noise_var,
        prior=prior,
        center_likelihood=True,
    )


def resolve_s2(result: PriorBuildResult) -> float:
    """Kernel variance from the preliminary chain: max |log-likelihood| proposed."""
    if result.n_proposals_recorded == 0:
        raise NumericalHealthError("no finite log-likelihood proposals recorded")
    s2 = result.proposal_abs_loglik_max
    if not (s2 > 0 and math.isfinite(s2)):
        raise NumericalHealthError(f"cannot use s2 = {s2} from the proposal log")
    return s2


def build_prior(ctx: RunContext, target: TruePosteriorTarget) -> tuple[PriorBuildResult, float]:
    """Phase 2: preliminary chain, moment-matched prior, kernel variance."""
    cfg = ctx.config
    result = build_gaussian_prior(
        target,
        sweeps=cfg.prior.sweeps,
        burn_in=round(cfg.prior.burn_in_frac * cfg.prior.sweeps),
        walkers=cfg.prior.walkers,
        stretch_a=cfg.prior.stretch_a,
        inflation=cfg.prior.inflation,
        seed=cfg.seeds.prior,
        init_center=cfg.prior.init_center,
        init_spread=cfg.prior.init_spread,
    )
    s2 = cfg.kernel.s2 if cfg.kernel.s2 != "auto" else resolve_s2(result)
    art.write_chain(ctx.out_dir / art.PRIOR_CHAIN_CSV, "prior_chain", result.chain)
    _update_manifest(
        ctx.out_dir,
        run={"status": "prior-built"},
        resolved={
            "s2": float(s2),
            "jitter": cfg.kernel.jitter_scale * float(s2),
            "ell": cfg.kernel.ell,
            "prior_burn_in": round(cfg.prior.burn_in_frac * cfg.prior.sweeps),
            "prior_chain_walkers": result.chain.n_walkers,
            "prior_chain_acceptance": result.chain.acceptance_rate,
            "proposal_abs_loglik_max": result.proposal_abs_loglik_max,
            "n_proposals_recorded": result.n_proposals_recorded,
        },
        prior={
            "mean": result.prior.mean,
            "covariance": result.prior.cov,
            "inflation": result.inflation,
            "positivity_mask": result.prior.positivity_mask,
        },
    )
    return result, float(s2)


def _load_prior(ctx: RunContext) -> tuple[GaussianPrior, float]:
    manifest = art.read_manifest(ctx.out_dir / art.MANIFEST)
    if "prior" not in manifest or "resolved" not in manifest:
        raise ArtifactError("artifact directory has no prior; run build-prior first")
    p = manifest["prior"]
    prior = GaussianPrior(
        mean=np.array(p["mean"]),
        cov=np.array(p["covariance"]),
        positivity_mask=np.array(p["positivity_mask"], dtype=bool),
    )
    return prior, float(manifest["resolved"]["s2"])


def _load_prior_chain(ctx: RunContext) -> ChainSamples:
    manifest = art.read_manifest(ctx.out_dir / art.MANIFEST)
    samples, values = art.read_chain_points(ctx.out_dir / art.PRIOR_CHAIN_CSV)
    walkers = int(manifest["resolved"]["prior_chain_walkers"])
    return ChainSamples(
        samples=samples,
        log_target_values=values,
        accepted_flags=np.ones(len(samples), dtype=bool),
        burn_in_used=0,
        n_walkers=walkers,
        acceptance_rate=float(manifest["resolved"]["prior_chain_acceptance"]),
    )


def _acquisition_config(cfg: RunConfig) -> AcquisitionConfig:
    return AcquisitionConfig(
        search_sweeps=cfg.search.sweeps,
        search_burn_in=round(cfg.search.burn_in_frac * cfg.search.sweeps),
        walker_count=cfg.search.walkers,
        stretch_a=cfg.search.stretch_a,
        distance_factor=cfg.search.distance_factor,
        tie_tolerance=cfg.search.tie_tolerance,
    )


def _diagnostics_config(cfg: RunConfig) -> DiagnosticsConfig:
    return DiagnosticsConfig(
        sweeps=cfg.diagnostics.sweeps,
        burn_in=round(cfg.diagnostics.burn_in_frac * cfg.diagnostics.sweeps),
        walkers=cfg.diagnostics.walkers,
        stretch_a=cfg.diagnostics.stretch_a,
    )


def _whitening_transform(prior: GaussianPrior) -> np.ndarray:
    """Inverse of the prior Cholesky factor: z = W (theta - mean) has unit covariance."""
    from scipy.linalg import solve_triangular

    return solve_triangular(
        prior.chol_factor, np.eye(prior.dim), lower=True, check_finite=False
    )


def init_surrogate(
    ctx: RunContext,
    target: TruePosteriorTarget,
    prior: GaussianPrior,
    s2: float,
    prior_chain: ChainSamples | None = None,
) -> SurrogatePosterior:
    """Phase 3a: evaluate the initial training set and fit the starting GP.

    The GP lives in prior-whitened coordinates (z = L^-1 (theta - mean)
    with L the prior Cholesky factor), which is what makes the single
    isotropic correlation length meaningful across parameters of very
    different posterior scales and correlation structure.
    """
    cfg = ctx.config
    kernel = KernelParams(variance_s2=s2, length_scale_ell=cfg.kernel.ell)
    jitter = cfg.kernel.jitter_scale * s2
    if cfg.init.mode == "grid":
        points = init_training_grid(prior, cfg.init.per_dim, cfg.init.half_width_sds)
    else:
        if prior_chain is None:
            prior_chain = _load_prior_chain(ctx)
        points = init_training_from_chain(
            prior_chain,
            walker_count=prior_chain.n_walkers,
            iteration_count=cfg.init.iterations,
            seed=np.random.SeedSequence(entropy=cfg.seeds.training, spawn_key=(0,)),
        )
    outputs = np.array([target.log_likelihood(p) for p in points])
    art.write_training_points(
        ctx.out_dir / art.INITIAL_TRAINING_CSV, "initial_training", points, outputs
    )
    whiten = _whitening_transform(prior)
    z_points = (points - prior.mean) @ whiten.T
    gp = gp_fit(TrainingSet(inputs=z_points, outputs=outputs), kernel, jitter)
    _update_manifest(ctx.out_dir, resolved={"n_initial_points": len(points)})
    return SurrogatePosterior(
        prior=prior,
        kernel=kernel,
        gp=gp,
        gp_space_mean=prior.mean,
        gp_space_transform=whiten,
    )


def train(
    ctx: RunContext,
    target: TruePosteriorTarget,
    surrogate: SurrogatePosterior,
) -> tuple[SurrogatePosterior, TrainingHistory]:
    """Phase 3b: the sequential training loop plus its diagnostics records."""
    cfg = ctx.config
    surrogate, history = train_loop(
        target,
        surrogate,
        budget=cfg.budget,
        cfg=_acquisition_config(cfg),
        diag_cadence=cfg.diag_cadence,
        mode=cfg.mode,
        seed=cfg.seeds.training,
        diag_cfg=_diagnostics_config(cfg),
        diag_seed=cfg.seeds.diagnostics,
    )
    art.write_training_history(ctx.out_dir / art.TRAINING_HISTORY_CSV, history)
    art.write_diagnostics(ctx.out_dir / art.DIAGNOSTICS_CSV, history.diagnostics)
    art.write_training_points(
        ctx.out_dir / art.GP_TRAINING_CSV,
        "gp_training",
        surrogate.gp.training.inputs,
        surrogate.gp.training.outputs,
    )
    _update_manifest(
        ctx.out_dir,
        run={"status": "trained"},
        resolved={
            "search_burn_in": round(cfg.search.burn_in_frac * cfg.search.sweeps),
            "diagnostics_burn_in": round(cfg.diagnostics.burn_in_frac * cfg.diagnostics.sweeps),
            "n_iterations_completed": len(history),
            "halt_reason": history.halt_reason or "",
            "n_gp_points": surrogate.n_training,
        },
    )
    return surrogate, history


def load_surrogate(ctx: RunContext) -> SurrogatePosterior:
    """Rebuild the trained surrogate from gp_training.csv plus the manifest.

    gp_training.csv stores the GP-space (prior-standardized) inputs with
    shortest round-trip decimals, so the refit kernel matrix and factor are
    bit-identical to the in-run model.
    """
    prior, s2 = _load_prior(ctx)
    manifest = art.read_manifest(ctx.out_dir / art.MANIFEST)
    kernel = KernelParams(variance_s2=s2, length_scale_ell=ctx.config.kernel.ell)
    inputs, outputs = art.read_training_points(ctx.out_dir / art.GP_TRAINING_CSV)
    gp = gp_fit(
        TrainingSet(inputs=inputs, outputs=outputs),
        kernel,
        jitter=float(manifest["resolved"]["jitter"]),
    )
    return SurrogatePosterior(
        prior=prior,
        kernel=kernel,
        gp=gp,
        gp_space_mean=prior.mean,
        gp_space_transform=_whitening_transform(prior),
    )


def diagnose(out_dir: Path, seed: int | None = None) -> DiagnosticsRecord:
    """Re-run the accuracy diagnostics on a saved surrogate.

    With the default seed this reproduces the final in-run diagnostics
    record exactly.
    """
    out_dir = Path(out_dir)
    manifest = art.read_manifest(out_dir / art.MANIFEST)
    config = RunConfig.model_validate(manifest["config"])
    ctx = build_context(config, out_dir)
    surrogate = load_surrogate(ctx)
    target = make_target(ctx, load_observations(ctx), prior=surrogate.prior)
    iteration = int(manifest["resolved"]["n_iterations_completed"])
    if seed is None:
        seed_seq = np.random.SeedSequence(
            entropy=config.seeds.diagnostics, spawn_key=(iteration,)
        )
    else:
        seed_seq = np.random.SeedSequence(seed)
    record = evaluate_accuracy(
        surrogate, target, _diagnostics_config(config), seed=seed_seq, iteration=iteration
    )
    art.write_diagnostics(out_dir / art.DIAGNOSE_CSV, [record])
    return record


def sample_surface(
    out_dir: Path,
    surface: str,
    sweeps: int | None = None,
    seed: int | None = None,
    out_name: str | None = None,
) -> Path:
    """Emit a chain CSV for either the true or the surrogate surface."""
    out_dir = Path(out_dir)
    manifest = art.read_manifest(out_dir / art.MANIFEST)
    config = RunConfig.model_validate(manifest["config"])
    ctx = build_context(config, out_dir)
    prior, _ = _load_prior(ctx)
    target = make_target(ctx, load_observations(ctx), prior=prior)
    if surface == "surrogate":
        surrogate = load_surrogate(ctx)
        log_target = surrogate.log_density
        default_name, tag = art.SURROGATE_SAMPLES_CSV, 0
    elif surface == "true":
        log_target = target.log_posterior
        default_name, tag = art.TRUE_SAMPLES_CSV, 1
    else:
        raise ConfigError(f"surface must be 'true' or 'surrogate', got {surface!r}")

    dcfg = _diagnostics_config(config)
    n_sweeps = dcfg.sweeps if sweeps is None else sweeps
    walkers, _ = dcfg.resolved(ctx.pmap.dim)
    burn = round(config.diagnostics.burn_in_frac * n_sweeps)
    seed_seq = (
        np.random.SeedSequence(entropy=config.seeds.sample, spawn_key=(tag,))
        if seed is None
        else np.random.SeedSequence(seed)
    )
    state = init_walkers(walkers, prior.mean, prior.cov, seed_seq, log_target=log_target)
    chain = run_chain(state, log_target, n_sweeps=n_sweeps, burn_in=burn, a=dcfg.stretch_a)
    path = out_dir / (out_name or default_name)
    art.write_chain(path, f"{surface}_samples", chain)
    return path


def eval_grid(ctx: RunContext, target: TruePosteriorTarget, surrogate: SurrogatePosterior) -> None:
    """Phase 4 (2-D only): dense log-density grid over both surfaces."""
    cfg = ctx.config.grid
    prior = surrogate.prior
    if cfg.ranges is not None:
        ranges = [(float(lo), float(hi)) for lo, hi in cfg.ranges]
    else:
        sds = np.sqrt(np.diag(prior.cov))
        ranges = [
            (prior.mean[i] - cfg.half_width_sds * sds[i], prior.mean[i] + cfg.half_width_sds * sds[i])
            for i in range(2)
        ]
    axes = [np.linspace(lo, hi, cfg.points_per_dim) for lo, hi in ranges]
    t0, t1 = np.meshgrid(axes[0], axes[1], indexing="ij")
    pts = np.stack([t0.ravel(), t1.ravel()], axis=-1)
    log_true = np.array([target.log_posterior(p) for p in pts])
    log_surr = np.array([surrogate.log_density(p) for p in pts])
    art.write_grid(ctx.out_dir / art.GRID_CSV, pts[:, 0], pts[:, 1], log_true, log_surr)


def context_from_dir(out_dir: Path) -> RunContext:
    """Rebuild the run context from a directory's manifest."""
    out_dir = Path(out_dir)
    manifest = art.read_manifest(out_dir / art.MANIFEST)
    if "config" not in manifest:
        raise ArtifactError(f"{out_dir} has no config in its manifest")
    config = RunConfig.model_validate(manifest["config"])
    return build_context(config, out_dir)


def run_gen_data(config: RunConfig, out_dir: Path | None = None) -> Path:
    """Standalone phase 1: create the artifact directory and observations."""
    out_dir = Path(out_dir) if out_dir is not None else default_out_dir(config)
    _init_manifest(config, out_dir)
    try:
        ctx = build_context(config, out_dir)
        gen_data(ctx)
    except Exception as exc:
        _update_manifest(out_dir, run={"status": "error", "error": f"{type(exc).__name__}: {exc}"})
        raise
    return out_dir


def run_build_prior(out_dir: Path) -> float:
    """Standalone phase 2 on an existing directory; returns the resolved s2."""
    ctx = context_from_dir(out_dir)
    target = make_target(ctx, load_observations(ctx))
    _, s2 = build_prior(ctx, target)
    return s2


def run_train(out_dir: Path) -> RunResult:
    """Standalone phase 3 on a directory holding observations and a prior."""
    ctx = context_from_dir(out_dir)
    prior, s2 = _load_prior(ctx)
    target = make_target(ctx, load_observations(ctx), prior=prior)
    surrogate = init_surrogate(ctx, target, prior, s2)
    surrogate, history = train(ctx, target, surrogate)
    final = history.diagnostics[-1] if history.diagnostics else None
    return RunResult(
        out_dir=Path(out_dir),
        s2=s2,
        n_iterations=len(history),
        halt_reason=history.halt_reason,
        final_diagnostics=final,
    )


def run_experiment(config: RunConfig, out_dir: Path | None = None) -> RunResult:
    """Execute the full pipeline into one artifact directory."""
    out_dir = Path(out_dir) if out_dir is not None else default_out_dir(config)
    _init_manifest(config, out_dir)
    try:
        ctx = build_context(config, out_dir)
        obs = gen_data(ctx)
        prior_result, s2 = build_prior(ctx, make_target(ctx, obs))
        target = make_target(ctx, obs, prior=prior_result.prior)
        surrogate = init_surrogate(
            ctx, target, prior_result.prior, s2, prior_chain=prior_result.chain
        )
        surrogate, history = train(ctx, target, surrogate)
        sample_surface(out_dir, "surrogate")
        sample_surface(out_dir, "true")
        if ctx.pmap.dim == 2:
            eval_grid(ctx, target, surrogate)
        _update_manifest(out_dir, run={"status": "completed", "finished_at": _now()})
    except Exception as exc:
        _update_manifest(
            out_dir,
            run={"status": "error", "error": f"{type(exc).__name__}: {exc}", "finished_at": _now()},
        )
        raise
    final = history.diagnostics[-1] if history.diagnostics else None
    return RunResult(
        out_dir=out_dir,
        s2=s2,
        n_iterations=len(history),
        halt_reason=history.halt_reason,
        final_diagnostics=final,
    )
