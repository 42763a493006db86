"""Reaction-network forward model: Arrhenius-like edge rates on a DAG.

Reactions are irreversible and proceed from node 1 toward the highest
numbered node, so every edge (i, j) has i < j.  An experiment's observable
is the completion time of the slowest source-to-terminal pathway, where a
pathway's time is the sum of inverse edge rates along it.  Non-positive
rates yield an infinite-time sentinel instead of an error so samplers can
visit (and softly reject) unphysical parameter regions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

__all__ = [
    "ReactionNetwork",
    "RateParams",
    "ExperimentCondition",
    "ObservationSet",
    "NetworkDefinition",
    "ParameterMap",
    "reaction_rate",
    "enumerate_pathways",
    "pathway_time",
    "model_output",
    "generate_synthetic_data",
    "load_network",
    "packaged_network_path",
]


@dataclass(frozen=True)
class ReactionNetwork:
    """A DAG of irreversible reactions from node 1 to node ``node_count``."""

    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.node_count < 2:
            raise ConfigError(f"network needs at least 2 nodes, got {self.node_count}")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (1 <= i < j <= self.node_count):
                raise ConfigError(
                    f"edge ({i}, {j}) must go from a lower to a higher node "
                    f"within 1..{self.node_count}"
                )
        if len(set(edges)) != len(edges):
            raise ConfigError("duplicate edges in network definition")
        object.__setattr__(self, "edges", edges)
        if not enumerate_pathways(self):
            raise ConfigError(
                f"no directed path from node 1 to terminal node {self.node_count}"
            )

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_index(self, i: int, j: int) -> int:
        try:
            return self.edges.index((i, j))
        except ValueError:
            raise ConfigError(f"network has no edge ({i}, {j})") from None


@dataclass(frozen=True)
class RateParams:
    """Per-edge pre-exponential factors A and activation energies E."""

    A: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).ravel()
        E = np.asarray(self.E, dtype=float).ravel()
        if A.shape != E.shape:
            raise ConfigError("A and E must have one value per edge each")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "E", E)


@dataclass(frozen=True)
class ExperimentCondition:
    """Per-edge concentrations and the inverse temperature of one experiment."""

    experiment_id: int
    concentrations: np.ndarray
    beta: float

    def __post_init__(self):
        conc = np.asarray(self.concentrations, dtype=float).ravel()
        if np.any(conc <= 0):
            raise ConfigError(
                f"experiment {self.experiment_id}: concentrations must be positive"
            )
        if self.beta <= 0:
            raise ConfigError(f"experiment {self.experiment_id}: beta must be positive")
        object.__setattr__(self, "concentrations", conc)


@dataclass(frozen=True)
class ObservationSet:
    """Noisy slowest-pathway times, one per experiment."""

    observations: np.ndarray
    noise_sigma: float
    seed: int

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float).ravel()
        object.__setattr__(self, "observations", obs)

    def __len__(self):
        return self.observations.shape[0]


def reaction_rate(A: float, E: float, C: float, beta: float) -> float:
    """Arrhenius-like rate C * A * exp(-beta * E)."""
    return C * A * math.exp(-beta * E)


_PATH_CACHE: dict[tuple[int, tuple[tuple[int, int], ...]], tuple[tuple[int, ...], ...]] = {}


def enumerate_pathways(net: ReactionNetwork) -> tuple[tuple[int, ...], ...]:
    """All simple directed paths from node 1 to the terminal node.

    Paths are strictly increasing node sequences, returned in lexicographic
    order.  Results are cached per edge set.
    """
    key = (net.node_count, tuple(net.edges))
    cached = _PATH_CACHE.get(key)
    if cached is not None:
        return cached

    successors: dict[int, list[int]] = {}
    for i, j in net.edges:
        successors.setdefault(i, []).append(j)
    for succ in successors.values():
        succ.sort()

    paths: list[tuple[int, ...]] = []

    def walk(node: int, prefix: list[int]):
        if node == net.node_count:
            paths.append(tuple(prefix))
            return
        for nxt in successors.get(node, ()):
            prefix.append(nxt)
            walk(nxt, prefix)
            prefix.pop()

    walk(1, [1])
    result = tuple(paths)
    _PATH_CACHE[key] = result
    return result


def pathway_time(path, params: RateParams, exp: ExperimentCondition, net: ReactionNetwork) -> float:
    """Sum of inverse edge rates along ``path``; inf if any rate is <= 0."""
    total = 0.0
    for i, j in zip(path[:-1], path[1:]):
        k = net.edge_index(i, j)
        rate = reaction_rate(params.A[k], params.E[k], exp.concentrations[k], exp.beta)
        if rate <= 0.0 or not math.isfinite(rate):
            return math.inf
        total += 1.0 / rate
    return total


def model_output(net: ReactionNetwork, params: RateParams, exp: ExperimentCondition) -> float:
    """Completion time of the slowest pathway under one experiment."""
    return max(pathway_time(p, params, exp, net) for p in enumerate_pathways(net))


def generate_synthetic_data(
    net: ReactionNetwork,
    true_params: RateParams,
    experiments,
    sigma: float,
    seed: int,
) -> ObservationSet:
    """Clean model outputs plus i.i.d. Gaussian noise of scale ``sigma``."""
    if sigma <= 0:
        raise ConfigError(f"noise sigma must be positive, got {sigma}")
    clean = np.array([model_output(net, true_params, e) for e in experiments])
    noise = np.random.default_rng(seed).standard_normal(len(clean))
    return ObservationSet(observations=clean + sigma * noise, noise_sigma=sigma, seed=seed)


_PARAM_NAME = re.compile(r"^([AE])_(\d+)_(\d+)$")


@dataclass(frozen=True)
class ParameterMap:
    """Mapping between a free-parameter vector theta and per-edge (A, E).

    Free coordinates are named ``A_i_j`` / ``E_i_j``; every other edge
    parameter stays pinned at the base (truth) values.  The coordinate order
    of theta is the order of ``free_names``.
    """

    network: ReactionNetwork
    base: RateParams
    free_names: tuple[str, ...]
    _kinds: tuple[str, ...] = field(init=False, repr=False)
    _edge_idx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        kinds = []
        idx = []
        seen = set()
        for name in self.free_names:
            m = _PARAM_NAME.match(name)
            if not m:
                raise ConfigError(
                    f"bad parameter name {name!r}; expected A_i_j or E_i_j"
                )
            kind, i, j = m.group(1), int(m.group(2)), int(m.group(3))
            if name in seen:
                raise ConfigError(f"parameter {name!r} listed twice")
            seen.add(name)
            kinds.append(kind)
            idx.append(self.network.edge_index(i, j))
        object.__setattr__(self, "free_names", tuple(self.free_names))
        object.__setattr__(self, "_kinds", tuple(kinds))
        object.__setattr__(self, "_edge_idx", np.array(idx, dtype=int))

    @property
    def dim(self) -> int:
        return len(self.free_names)

    @property
    def positivity_mask(self) -> np.ndarray:
        """True for pre-exponential (A) coordinates, which must stay positive."""
        return np.array([k == "A" for k in self._kinds], dtype=bool)

    @property
    def truth_theta(self) -> np.ndarray:
        """Base (truth) values of the free coordinates."""
        out = np.empty(self.dim)
        for c, (kind, e) in enumerate(zip(self._kinds, self._edge_idx)):
            out[c] = self.base.A[e] if kind == "A" else self.base.E[e]
        return out

    def params_for(self, theta) -> RateParams:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape[0] != self.dim:
            raise ValueError(f"theta has {theta.shape[0]} coords, expected {self.dim}")
        A = self.base.A.copy()
        E = self.base.E.copy()
        for c, (kind, e) in enumerate(zip(self._kinds, self._edge_idx)):
            if kind == "A":
                A[e] = theta[c]
            else:
                E[e] = theta[c]
        return RateParams(A=A, E=E)


@dataclass(frozen=True)
class NetworkDefinition:
    """A packaged or user-supplied network file: topology, truth, experiments."""

    name: str
    network: ReactionNetwork
    truth: RateParams
    experiments: tuple[ExperimentCondition, ...]
    noise_sigma: float
    data_seed: int

    def experiment_subset(self, ids) -> tuple[ExperimentCondition, ...]:
        by_id = {e.experiment_id: e for e in self.experiments}
        try:
            return tuple(by_id[int(i)] for i in ids)
        except KeyError as exc:
            raise ConfigError(f"unknown experiment id {exc.args[0]}") from None


def packaged_network_path(name: str) -> Path:
    """Path of a packaged network file such as ``network3`` or ``network6.cfg``."""
    stem = name if name.endswith(".cfg") else f"{name}.cfg"
    path = Path(__file__).parent / "data" / stem
    if not path.exists():
        raise ConfigError(f"no packaged network named {name!r}")
    return path


def load_network(source) -> NetworkDefinition:
    """Parse a network definition file (TOML key-value text).

    ``source`` may be a filesystem path or the name of a packaged network
    (``network3``, ``network6``).
    """
    path = Path(source)
    if not path.exists():
        path = packaged_network_path(str(source))
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    try:
        edges = tuple((int(i), int(j)) for i, j in raw["edges"])
        net = ReactionNetwork(node_count=int(raw["node_count"]), edges=edges)
        truth = RateParams(A=raw["A_true"], E=raw["E_true"])
        if truth.A.shape[0] != net.n_edges:
            raise ConfigError("A_true/E_true must list one value per edge")
        experiments = []
        for entry in raw["experiment"]:
            conc = np.asarray(entry["concentrations"], dtype=float)
            if conc.shape[0] != net.n_edges:
                raise ConfigError(
                    f"experiment {entry['id']}: expected {net.n_edges} concentrations"
                )
            experiments.append(
                ExperimentCondition(
                    experiment_id=int(entry["id"]),
                    concentrations=conc,
                    beta=float(entry["beta"]),
                )
            )
        ids = [e.experiment_id for e in experiments]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate experiment ids")
        return NetworkDefinition(
            name=str(raw.get("name", path.stem)),
            network=net,
            truth=truth,
            experiments=tuple(experiments),
            noise_sigma=float(raw["noise_sigma"]),
            data_seed=int(raw["data_seed"]),
        )
    except KeyError as exc:
        raise ConfigError(f"network file {path} is missing key {exc.args[0]!r}") from None
