"""Experiment scenario files and run manifests.

A scenario is one TOML file describing network, initial state, design
method, observer, adversary, and horizons.  Everything downstream is a
pure function of the scenario plus its seed, so reruns are byte-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ConfigError
from .netgraph import Topology, from_text, loads as topology_loads, random_topology, validate

METHODS = frozenset({
    "none", "laplacian", "unobservable", "invariant_subspace", "kernel_pb",
    "distributed", "noise_adjacent", "noise_independent",
})
ESTIMATORS = frozenset({"ols", "subspace", "lag"})


@dataclass(frozen=True)
class ExperimentScenario:
    scenario_id: str
    seed: int
    network: dict
    x0: dict
    method: dict
    observer: dict
    adversary: dict
    horizons: tuple[int, ...]
    runs: int
    source_bytes: bytes = field(repr=False, default=b"")

    @property
    def method_name(self) -> str:
        return self.method["name"]

    @property
    def estimator(self) -> str:
        return self.adversary["estimator"]

    def build_topology(self) -> Topology:
        net = self.network
        kind = net.get("kind", "generate")
        if kind == "generate":
            return random_topology(int(net["n"]), float(net.get("density", 0.4)), int(net.get("seed", self.seed)))
        if kind == "inline":
            return validate(np.array(net["matrix"], dtype=float))
        if kind == "file":
            path = Path(net["path"])
            if not path.exists():
                raise ConfigError(f"network file {path} does not exist")
            text = path.read_text()
            if path.suffix == ".json":
                return topology_loads(text)
            return from_text(text)
        raise ConfigError(f"unknown network kind {kind!r}")

    def build_x0(self, n: int) -> np.ndarray:
        spec = self.x0
        kind = spec.get("kind", "seeded")
        if kind == "inline":
            values = np.array(spec["values"], dtype=float)
            if values.shape != (n,):
                raise ConfigError("x0 length does not match the network size")
            return values
        if kind == "seeded":
            scale = float(spec.get("scale", 10.0))
            rng = np.random.default_rng((self.seed, 1))
            return rng.uniform(-scale, scale, n)
        raise ConfigError(f"unknown x0 kind {kind!r}")

    def build_observation_matrix(self, n: int) -> np.ndarray | None:
        obs = self.observer
        if obs.get("kind", "full") == "full":
            return None
        if "matrix" in obs:
            c = np.array(obs["matrix"], dtype=float)
        else:
            m = int(obs["m"])
            if not 1 <= m <= n:
                raise ConfigError("observer row count must lie in [1, n]")
            rng = np.random.default_rng((self.seed, 2))
            c = rng.standard_normal((m, n))
        if c.shape[1] != n:
            raise ConfigError("observation matrix width does not match the network")
        return c


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def parse_scenario(path: str | Path) -> ExperimentScenario:
    """Load and validate one scenario file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file {path} does not exist")
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"scenario file is not valid TOML: {exc}") from exc

    _require(int(data.get("version", 0)) == 1, "scenario version must be 1")
    method = dict(data.get("method", {}))
    _require(method.get("name") in METHODS, f"method.name must be one of {sorted(METHODS)}")
    observer = dict(data.get("observer", {"kind": "full"}))
    _require(observer.get("kind", "full") in ("full", "partial"), "observer.kind must be full or partial")
    adversary = dict(data.get("adversary", {"estimator": "ols"}))
    _require(adversary.get("estimator") in ESTIMATORS, f"adversary.estimator must be one of {sorted(ESTIMATORS)}")

    if observer.get("kind", "full") == "partial":
        _require(adversary["estimator"] == "subspace", "partial observation requires the subspace estimator")
    else:
        _require(adversary["estimator"] in ("ols", "lag"), "full observation uses the ols or lag estimator")
    if method["name"] == "distributed":
        _require(float(method.get("tau", 0.0)) > 0.0, "distributed method needs tau > 0")
    if method["name"] == "unobservable":
        _require(observer.get("kind") == "partial", "unobservable design needs a partial observer (it uses C)")

    run = dict(data.get("run", {}))
    horizons = tuple(int(t) for t in run.get("horizons", [100]))
    _require(len(horizons) >= 1 and all(t >= 1 for t in horizons), "run.horizons must be positive")
    runs = int(run.get("runs", 1))
    _require(runs >= 1, "run.runs must be >= 1")
    network = dict(data.get("network", {}))
    _require(network.get("kind", "generate") in ("generate", "inline", "file"), "unknown network.kind")

    scenario = ExperimentScenario(
        scenario_id=str(data.get("id", path.stem)),
        seed=int(data.get("seed", 0)),
        network=network,
        x0=dict(data.get("x0", {"kind": "seeded"})),
        method=method,
        observer=observer,
        adversary=adversary,
        horizons=horizons,
        runs=runs,
        source_bytes=raw,
    )
    # Fail fast on anything structurally wrong before the pipeline runs.
    topo = scenario.build_topology()
    scenario.build_x0(topo.n)
    scenario.build_observation_matrix(topo.n)
    for t in horizons:
        _require(t >= topo.n, f"horizon {t} is below the network size {topo.n}")
    return scenario


def scenario_hash(scenario: ExperimentScenario) -> str:
    return hashlib.sha256(scenario.source_bytes).hexdigest()


def write_manifest(
    out_dir: Path,
    scenario: ExperimentScenario,
    outputs: list[str],
    cell_seeds: dict[str, int],
    wall_clock_s: float,
) -> Path:
    manifest = {
        "scenario_id": scenario.scenario_id,
        "scenario_sha256": scenario_hash(scenario),
        "library_version": __version__,
        "wall_clock_s": wall_clock_s,
        "cell_seeds": cell_seeds,
        "outputs": sorted(outputs),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
