"""Request/response models of the experiment service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    """Launch a pipeline phase from a config (packaged name, path, or inline table)."""

    config: Union[str, dict]
    seed_overrides: dict[str, int] = Field(default_factory=dict)
    out_dir: Optional[str] = None


class ArtifactRequest(BaseModel):
    """Operate on an existing artifact directory."""

    artifact_dir: str


class DiagnoseRequest(ArtifactRequest):
    seed: Optional[int] = None


class SampleRequest(ArtifactRequest):
    surface: Literal["true", "surrogate"]
    sweeps: Optional[int] = None
    seed: Optional[int] = None
    out_name: Optional[str] = None


class DiagnosticsOut(BaseModel):
    iteration: int
    e_approx: float
    e_true: float
    e_approx_star: float
    e_true_star: float
    r_measure: float
    mean_weight: float
    n_samples_each: int
    n_excluded_approx: int
    n_excluded_true: int
    n_excluded_weights: int

    @classmethod
    def from_record(cls, record) -> "DiagnosticsOut":
        return cls(
            iteration=record.iteration,
            e_approx=record.e_approx,
            e_true=record.e_true,
            e_approx_star=record.e_approx_star,
            e_true_star=record.e_true_star,
            r_measure=record.r_measure,
            mean_weight=record.mean_weight,
            n_samples_each=record.n_samples_each,
            n_excluded_approx=record.n_excluded_approx,
            n_excluded_true=record.n_excluded_true,
            n_excluded_weights=record.n_excluded_weights,
        )


class PhaseResponse(BaseModel):
    artifact_dir: str
    status: str


class PriorResponse(PhaseResponse):
    s2: float


class RunResponse(PhaseResponse):
    s2: float
    n_iterations: int
    halt_reason: Optional[str] = None
    final_diagnostics: Optional[DiagnosticsOut] = None


class DiagnoseResponse(PhaseResponse):
    record: DiagnosticsOut


class SampleResponse(PhaseResponse):
    csv_path: str
    surface: str


class HealthResponse(BaseModel):
    status: str
    version: str


class ConfigListResponse(BaseModel):
    configs: list[str]


class ErrorResponse(BaseModel):
    error_kind: Literal["config", "numerical", "io", "internal"]
    message: str
