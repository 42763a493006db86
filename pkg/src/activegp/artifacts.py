"""Artifact directory layout and CSV/manifest serialization.

Every CSV starts with a schema-version comment line followed by a header
row.  Floats are written with ``repr``, the shortest decimal that
round-trips to the same double, so numeric artifacts from identical runs
are byte-identical and models restored from CSV are bit-exact.
"""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path

import numpy as np
import tomlkit

from .diagnostics import DiagnosticsRecord
from .errors import ArtifactError
from .sampler import ChainSamples

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

SCHEMA_VERSION = 1

OBSERVATIONS_CSV = "observations.csv"
PRIOR_CHAIN_CSV = "prior_chain.csv"
INITIAL_TRAINING_CSV = "initial_training.csv"
TRAINING_HISTORY_CSV = "training_history.csv"
DIAGNOSTICS_CSV = "diagnostics.csv"
GP_TRAINING_CSV = "gp_training.csv"
SURROGATE_SAMPLES_CSV = "surrogate_samples.csv"
TRUE_SAMPLES_CSV = "true_samples.csv"
GRID_CSV = "grid.csv"
DIAGNOSE_CSV = "diagnose.csv"
MANIFEST = "manifest.toml"


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# activegp csv schema {SCHEMA_VERSION}: {schema}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing artifact {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ArtifactError(f"artifact {path} is empty")
    return rows[0], rows[1:]


def theta_columns(dim: int) -> list[str]:
    return [f"theta_{i}" for i in range(dim)]


def write_observations(path: Path, experiment_ids, clean, observed) -> None:
    write_csv(
        path,
        "observations",
        ["experiment_id", "clean_output", "observed"],
        zip(experiment_ids, clean, observed),
    )


def read_observations(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header, rows = read_csv(path)
    ids = np.array([int(r[0]) for r in rows])
    clean = np.array([float(r[1]) for r in rows])
    observed = np.array([float(r[2]) for r in rows])
    return ids, clean, observed


def write_chain(path: Path, schema: str, chain: ChainSamples) -> None:
    header = theta_columns(chain.dim) + ["log_target", "accepted"]
    rows = (
        list(s) + [v, f]
        for s, v, f in zip(chain.samples, chain.log_target_values, chain.accepted_flags)
    )
    write_csv(path, schema, header, rows)


def read_chain_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Sample coordinates and log-target values from a chain CSV."""
    header, rows = read_csv(path)
    dim = sum(1 for h in header if h.startswith("theta_"))
    samples = np.array([[float(v) for v in r[:dim]] for r in rows])
    values = np.array([float(r[dim]) for r in rows])
    return samples, values


def write_training_points(path: Path, schema: str, inputs: np.ndarray, outputs: np.ndarray) -> None:
    header = theta_columns(inputs.shape[1]) + ["loglik"]
    write_csv(path, schema, header, (list(x) + [y] for x, y in zip(inputs, outputs)))


def read_training_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = read_csv(path)
    dim = len(header) - 1
    inputs = np.array([[float(v) for v in r[:dim]] for r in rows])
    outputs = np.array([float(r[dim]) for r in rows])
    return inputs, outputs


def write_training_history(path: Path, history) -> None:
    if history.iterations:
        dim = history.iterations[0].theta.shape[0]
    else:
        dim = 0
    header = ["iteration"] + theta_columns(dim) + ["loglik", "acquisition", "halt_reason"]
    rows = []
    for k, rec in enumerate(history.iterations):
        last = k == len(history.iterations) - 1
        halt = history.halt_reason if (last and history.halt_reason) else ""
        rows.append([rec.iteration] + list(rec.theta) + [rec.loglik, rec.acquisition_value, halt])
    write_csv(path, "training_history", header, rows)


def read_training_history(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, str]:
    """Returns (thetas, logliks, acquisition values, halt_reason)."""
    header, rows = read_csv(path)
    dim = sum(1 for h in header if h.startswith("theta_"))
    thetas = np.array([[float(v) for v in r[1 : 1 + dim]] for r in rows])
    logliks = np.array([float(r[1 + dim]) for r in rows])
    acq = np.array([float(r[2 + dim]) for r in rows])
    halt = rows[-1][3 + dim] if rows else ""
    return thetas, logliks, acq, halt


_DIAG_FIELDS = [
    "iteration",
    "e_approx",
    "e_true",
    "e_approx_star",
    "e_true_star",
    "r_measure",
    "mean_weight",
    "n_samples_each",
    "n_excluded_approx",
    "n_excluded_true",
    "n_excluded_weights",
]


def write_diagnostics(path: Path, records) -> None:
    rows = []
    for rec in records:
        d = asdict(rec)
        rows.append([d[f] for f in _DIAG_FIELDS])
    write_csv(path, "diagnostics", _DIAG_FIELDS, rows)


def read_diagnostics(path: Path) -> list[DiagnosticsRecord]:
    header, rows = read_csv(path)
    records = []
    for r in rows:
        kw = dict(zip(header, r))
        records.append(
            DiagnosticsRecord(
                iteration=int(kw["iteration"]),
                e_approx=float(kw["e_approx"]),
                e_true=float(kw["e_true"]),
                e_approx_star=float(kw["e_approx_star"]),
                e_true_star=float(kw["e_true_star"]),
                r_measure=float(kw["r_measure"]),
                mean_weight=float(kw["mean_weight"]),
                n_samples_each=int(kw["n_samples_each"]),
                n_excluded_approx=int(kw["n_excluded_approx"]),
                n_excluded_true=int(kw["n_excluded_true"]),
                n_excluded_weights=int(kw["n_excluded_weights"]),
            )
        )
    return records


def write_grid(path: Path, theta0, theta1, log_true, log_surrogate) -> None:
    write_csv(
        path,
        "grid",
        ["theta_0", "theta_1", "log_true_posterior", "log_surrogate_posterior"],
        zip(theta0, theta1, log_true, log_surrogate),
    )


def read_grid(path: Path) -> dict[str, np.ndarray]:
    header, rows = read_csv(path)
    data = np.array([[float(v) for v in r] for r in rows])
    return {h: data[:, i] for i, h in enumerate(header)}


def _tomlify(value):
    if isinstance(value, dict):
        return {k: _tomlify(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_tomlify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_tomlify(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    return value


def write_manifest(path: Path, manifest: dict) -> None:
    doc = tomlkit.document()
    for key, value in _tomlify(manifest).items():
        doc[key] = value
    with open(path, "w") as fh:
        fh.write(tomlkit.dumps(doc))


def read_manifest(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing manifest {path}")
    with open(path, "rb") as fh:
        return tomllib.load(fh)
