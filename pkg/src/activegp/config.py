"""Run configuration: TOML schema, packaged study configs, seed overrides.

A run config is structured key-value text (TOML).  Every value has an
explicit default except the study identity (name, network, free parameters,
budget), and all resolved values are echoed into the run manifest so a
finished run can be reproduced from the manifest alone.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

__all__ = [
    "RunConfig",
    "Seeds",
    "load_config",
    "packaged_config_path",
    "packaged_config_names",
    "apply_seed_overrides",
]


class DataSettings(BaseModel):
    """Synthetic-observation generation and the likelihood noise model.

    ``likelihood_variance`` sets the Gaussian likelihood's variance: the noise
    scale itself ("sigma", reproducing the benchmark studies), its square
    ("sigma_squared"), or an explicit number.
    """

    experiments: Optional[list[int]] = None  # None -> all experiments in the network file
    noise_sigma: Optional[float] = None      # None -> network file value
    likelihood_variance: float | Literal["sigma", "sigma_squared"] = "sigma_squared"


class KernelSettings(BaseModel):
    ell: float = 0.5
    s2: float | Literal["auto"] = "auto"
    jitter_scale: float = 1e-8               # jitter = jitter_scale * s2

    @field_validator("s2")
    @classmethod
    def _positive_s2(cls, v):
        if v != "auto" and v <= 0:
            raise ValueError("explicit s2 must be positive")
        return v


class TruePriorSettings(BaseModel):
    """The broad Gaussian prior entering the true posterior."""

    variance: float = 100.0
    mean: Optional[list[float]] = None       # None -> zero vector


class PriorSettings(BaseModel):
    """Preliminary chain and moment inflation for the surrogate prior."""

    sweeps: int = 5000
    burn_in_frac: float = 0.2
    walkers: Optional[int] = None            # None -> 2n
    stretch_a: float = 2.0
    inflation: float = 2.0
    init_spread: float = 1.0                 # walker init: N(center, spread^2 I)
    init_center: Optional[list[float]] = None  # None -> truth values


class InitSettings(BaseModel):
    """GP initialization: a regular grid or sweeps of the preliminary chain."""

    mode: Literal["grid", "chain"] = "grid"
    per_dim: int = 4
    half_width_sds: float = 2.0
    iterations: int = 10


class SearchSettings(BaseModel):
    sweeps: int = 2000
    burn_in_frac: float = 0.25
    walkers: Optional[int] = None
    stretch_a: float = 2.0
    distance_factor: float = 0.2
    tie_tolerance: float = 1e-9


class DiagnosticsSettings(BaseModel):
    sweeps: int = 4000
    burn_in_frac: float = 0.25
    walkers: Optional[int] = None
    stretch_a: float = 2.0


class GridSettings(BaseModel):
    """200 x 200 log-density grid written for 2-D problems."""

    points_per_dim: int = 200
    half_width_sds: float = 3.0
    ranges: Optional[list[list[float]]] = None  # explicit [[lo, hi], ...] overrides


class Seeds(BaseModel):
    data: Optional[int] = None               # None -> network file data_seed
    prior: int = 2001
    training: int = 3001
    diagnostics: int = 4001
    sample: int = 5001


class RunConfig(BaseModel):
    name: str
    network: str
    free_parameters: list[str] = Field(min_length=1)
    mode: Literal["active", "random"] = "active"
    budget: int = Field(ge=1)
    diag_cadence: int = 25
    output_root: str = "runs"

    data: DataSettings = DataSettings()
    kernel: KernelSettings = KernelSettings()
    true_prior: TruePriorSettings = TruePriorSettings()
    prior: PriorSettings = PriorSettings()
    init: InitSettings = InitSettings()
    search: SearchSettings = SearchSettings()
    diagnostics: DiagnosticsSettings = DiagnosticsSettings()
    grid: GridSettings = GridSettings()
    seeds: Seeds = Seeds()

    @property
    def dim(self) -> int:
        return len(self.free_parameters)

    def config_hash(self) -> str:
        """Short stable hash of the fully resolved configuration."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:8]


def packaged_config_names() -> list[str]:
    base = Path(__file__).parent / "data" / "configs"
    return sorted(p.stem for p in base.glob("*.toml"))


def packaged_config_path(name: str) -> Path:
    stem = name if name.endswith(".toml") else f"{name}.toml"
    path = Path(__file__).parent / "data" / "configs" / stem
    if not path.exists():
        raise ConfigError(
            f"no packaged config named {name!r}; available: {packaged_config_names()}"
        )
    return path


def load_config(source) -> RunConfig:
    """Load a run config from a path, packaged name, or manifest file.

    A manifest (the TOML written at the end of a run) is recognized by its
    top-level ``config`` table and loads that table, so re-running from a
    manifest reproduces the original run.
    """
    path = Path(source)
    if not path.exists():
        path = packaged_config_path(str(source))
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid run config {path}: {exc}") from None


def apply_seed_overrides(config: RunConfig, overrides: dict[str, int]) -> RunConfig:
    """New config with the given seeds replaced (keys as in the [seeds] table)."""
    valid = set(Seeds.model_fields)
    seeds = config.seeds.model_dump()
    for key, value in overrides.items():
        if key not in valid:
            raise ConfigError(f"unknown seed {key!r}; valid: {sorted(valid)}")
        seeds[key] = int(value)
    return config.model_copy(update={"seeds": Seeds(**seeds)})
