"""FastAPI service wrapping the experiment pipeline.

Endpoints execute synchronously: this is a compute service for batch
experiments, so a /run request returns when the run's artifacts are on
disk.  Clients needing progress can drive the phases individually
(/gen-data, /build-prior, /train) against one artifact directory.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import (
    RunConfig,
    apply_seed_overrides,
    load_config,
    packaged_config_names,
)
from ..errors import (
    ArtifactError,
    ConditioningError,
    ConfigError,
    DegenerateChainError,
    NumericalHealthError,
    SaturationError,
)
from .. import pipeline
from . import schemas

_KIND_STATUS = {"config": 400, "numerical": 422, "io": 404}


def _error_kind(exc: Exception) -> str:
    if isinstance(exc, (ConfigError, ValueError)):
        return "config"
    if isinstance(
        exc, (ConditioningError, NumericalHealthError, SaturationError, DegenerateChainError)
    ):
        return "numerical"
    if isinstance(exc, (ArtifactError, OSError)):
        return "io"
    return "internal"


def _resolve_config(req: schemas.RunRequest) -> RunConfig:
    if isinstance(req.config, dict):
        try:
            config = RunConfig.model_validate(req.config)
        except Exception as exc:
            raise ConfigError(f"invalid inline config: {exc}") from None
    else:
        config = load_config(req.config)
    if req.seed_overrides:
        config = apply_seed_overrides(config, req.seed_overrides)
    return config


def create_app() -> FastAPI:
    app = FastAPI(title="activegp", version=__version__)

    @app.exception_handler(Exception)
    async def handle_error(request: Request, exc: Exception):
        kind = _error_kind(exc)
        body = schemas.ErrorResponse(error_kind=kind, message=f"{type(exc).__name__}: {exc}")
        return JSONResponse(status_code=_KIND_STATUS.get(kind, 500), content=body.model_dump())

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/configs", response_model=schemas.ConfigListResponse)
    def configs():
        return schemas.ConfigListResponse(configs=packaged_config_names())

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        config = _resolve_config(req)
        result = pipeline.run_experiment(config, out_dir=req.out_dir)
        diag = result.final_diagnostics
        return schemas.RunResponse(
            artifact_dir=str(result.out_dir),
            status="completed",
            s2=result.s2,
            n_iterations=result.n_iterations,
            halt_reason=result.halt_reason,
            final_diagnostics=schemas.DiagnosticsOut.from_record(diag) if diag else None,
        )

    @app.post("/gen-data", response_model=schemas.PhaseResponse)
    def gen_data(req: schemas.RunRequest):
        config = _resolve_config(req)
        out_dir = pipeline.run_gen_data(config, out_dir=req.out_dir)
        return schemas.PhaseResponse(artifact_dir=str(out_dir), status="data-generated")

    @app.post("/build-prior", response_model=schemas.PriorResponse)
    def build_prior(req: schemas.ArtifactRequest):
        s2 = pipeline.run_build_prior(req.artifact_dir)
        return schemas.PriorResponse(
            artifact_dir=req.artifact_dir, status="prior-built", s2=s2
        )

    @app.post("/train", response_model=schemas.RunResponse)
    def train(req: schemas.ArtifactRequest):
        result = pipeline.run_train(req.artifact_dir)
        diag = result.final_diagnostics
        return schemas.RunResponse(
            artifact_dir=str(result.out_dir),
            status="trained",
            s2=result.s2,
            n_iterations=result.n_iterations,
            halt_reason=result.halt_reason,
            final_diagnostics=schemas.DiagnosticsOut.from_record(diag) if diag else None,
        )

    @app.post("/diagnose", response_model=schemas.DiagnoseResponse)
    def diagnose(req: schemas.DiagnoseRequest):
        record = pipeline.diagnose(req.artifact_dir, seed=req.seed)
        return schemas.DiagnoseResponse(
            artifact_dir=req.artifact_dir,
            status="diagnosed",
            record=schemas.DiagnosticsOut.from_record(record),
        )

    @app.post("/sample", response_model=schemas.SampleResponse)
    def sample(req: schemas.SampleRequest):
        path = pipeline.sample_surface(
            req.artifact_dir,
            req.surface,
            sweeps=req.sweeps,
            seed=req.seed,
            out_name=req.out_name,
        )
        return schemas.SampleResponse(
            artifact_dir=req.artifact_dir,
            status="sampled",
            csv_path=str(path),
            surface=req.surface,
        )

    return app


app = create_app()
