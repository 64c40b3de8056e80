"""Synthetic structural causal models: ground-truth graphs, interventional
sampling, and exact/Monte-Carlo effect oracles.

Interventional variables are exogenous roots drawn Uniform[0, 1] (a method's
intensity ratio).  Each observational variable is a weighted sum of its
parents, optionally squashed through tanh, plus Gaussian noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import (
    AteQuery,
    CausalGraph,
    ObservationMatrix,
    VariableKind,
    VariableSpec,
    build_graph,
    dumps_json,
)
from .errors import ConfigError, ParseError, SchemaError, UnknownNodeError


@dataclass(frozen=True)
class Mechanism:
    """Structural assignment of one observational node."""

    parents: tuple[str, ...]
    weights: tuple[float, ...]
    noise_sigma: float
    nonlinear: bool = False
    scale: float = 1.0

    def __post_init__(self) -> None:
        if len(self.parents) != len(self.weights):
            raise ConfigError("mechanism needs one weight per parent")
        if self.noise_sigma <= 0:
            raise ConfigError("noise_sigma must be positive")
        if not all(math.isfinite(w) for w in self.weights):
            raise ConfigError("mechanism weights must be finite")

    def evaluate(self, parent_cols: Sequence[np.ndarray], n: int) -> np.ndarray:
        total = np.zeros(n)
        for w, col in zip(self.weights, parent_cols):
            total += w * col
        if self.nonlinear:
            total = self.scale * np.tanh(total)
        return total


@dataclass(frozen=True)
class Scm:
    """An immutable structural causal model over named variables."""

    variables: tuple[VariableSpec, ...]
    graph: CausalGraph
    mechanisms: Mapping[str, Mechanism]
    seed: int = 0

    def __post_init__(self) -> None:
        names = {s.name for s in self.variables}
        if set(self.graph.nodes) != names:
            raise ConfigError("graph nodes must equal the variable set")
        for spec in self.variables:
            if spec.kind is VariableKind.INTERVENTIONAL:
                if self.graph.parents(spec.name):
                    raise ConfigError(
                        f"interventional node {spec.name!r} must have no parents"
                    )
                if spec.name in self.mechanisms:
                    raise ConfigError(
                        f"interventional node {spec.name!r} cannot carry a mechanism"
                    )
            else:
                mech = self.mechanisms.get(spec.name)
                if mech is None:
                    raise ConfigError(f"missing mechanism for {spec.name!r}")
                if set(mech.parents) != set(self.graph.parents(spec.name)):
                    raise ConfigError(
                        f"mechanism parents of {spec.name!r} disagree with the graph"
                    )

    @property
    def is_linear(self) -> bool:
        return not any(m.nonlinear for m in self.mechanisms.values())

    def spec(self, name: str) -> VariableSpec:
        for s in self.variables:
            if s.name == name:
                return s
        raise UnknownNodeError(f"unknown variable: {name!r}")


@dataclass(frozen=True)
class ScmConfig:
    n_nodes: int
    n_interventional: int
    expected_in_degree: float = 2.0
    weight_range: tuple[float, float] = (0.5, 2.0)
    noise_sigma: float = 0.5
    nonlinear: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_interventional < 1 or self.n_interventional >= self.n_nodes:
            raise ConfigError("need 1 <= n_interventional < n_nodes")
        if self.expected_in_degree < 0:
            raise ConfigError("expected_in_degree must be >= 0")
        lo, hi = self.weight_range
        if not (0 < lo <= hi):
            raise ConfigError("weight_range must satisfy 0 < low <= high")
        if self.noise_sigma <= 0:
            raise ConfigError("noise_sigma must be positive")


def random_scm(cfg: ScmConfig) -> Scm:
    """Draw a random SCM: interventional roots first in a random causal order,
    each later pair wired with probability expected_in_degree / (n_nodes - 1).
    """
    rng = np.random.default_rng(cfg.seed)
    n_obs = cfg.n_nodes - cfg.n_interventional
    t_names = [f"T{i + 1}" for i in range(cfg.n_interventional)]
    x_names = [f"X{i + 1}" for i in range(n_obs)]
    order = t_names + [x_names[i] for i in rng.permutation(n_obs)]
    kind_of = {n: VariableKind.INTERVENTIONAL for n in t_names}
    kind_of.update({n: VariableKind.OBSERVATIONAL for n in x_names})

    p_edge = min(1.0, cfg.expected_in_degree / (cfg.n_nodes - 1))
    lo, hi = cfg.weight_range
    edges: list[tuple[str, str]] = []
    parent_weights: dict[str, list[tuple[str, float]]] = {n: [] for n in x_names}
    for j in range(1, cfg.n_nodes):
        target = order[j]
        if kind_of[target] is VariableKind.INTERVENTIONAL:
            continue
        for i in range(j):
            source = order[i]
            if rng.random() < p_edge:
                w = rng.uniform(lo, hi) * (1.0 if rng.random() < 0.5 else -1.0)
                edges.append((source, target))
                parent_weights[target].append((source, w))

    names = t_names + x_names
    specs = tuple(
        VariableSpec(name=n, kind=kind_of[n]) for n in names
    )
    graph = build_graph(specs, edges)
    mechanisms = {
        n: Mechanism(
            parents=tuple(p for p, _ in parent_weights[n]),
            weights=tuple(w for _, w in parent_weights[n]),
            noise_sigma=cfg.noise_sigma,
            nonlinear=cfg.nonlinear,
        )
        for n in x_names
    }
    return Scm(variables=specs, graph=graph, mechanisms=mechanisms, seed=cfg.seed)


def _generate(
    scm: Scm,
    n: int,
    seed: int,
    assignments: Mapping[str, float] | None,
) -> ObservationMatrix:
    # noise is drawn for every node in topological order regardless of
    # clamping, so interventions never shift the random stream of other nodes
    if n < 1:
        raise ConfigError("need n >= 1 samples")
    assignments = dict(assignments or {})
    known = set(scm.graph.nodes)
    for name in assignments:
        if name not in known:
            raise UnknownNodeError(f"unknown variable: {name!r}")
    rng = np.random.default_rng(seed)
    cols: dict[str, np.ndarray] = {}
    for name in scm.graph.topological_order():
        spec = scm.spec(name)
        if spec.kind is VariableKind.INTERVENTIONAL:
            draw = rng.uniform(0.0, 1.0, size=n)
        else:
            mech = scm.mechanisms[name]
            noise = rng.normal(0.0, mech.noise_sigma, size=n)
            draw = mech.evaluate([cols[p] for p in mech.parents], n) + noise
        if name in assignments:
            cols[name] = np.full(n, float(assignments[name]))
        else:
            cols[name] = draw
    order = [s.name for s in scm.variables]
    data = np.column_stack([cols[name] for name in order])
    # clamping an interventional node outside [0, 1] fails matrix validation
    return ObservationMatrix(scm.variables, data)


def sample(scm: Scm, n: int, seed: int) -> ObservationMatrix:
    """Draw n i.i.d. runs from the observational distribution."""
    return _generate(scm, n, seed, None)


def do_sample(
    scm: Scm, assignments: Mapping[str, float], n: int, seed: int
) -> ObservationMatrix:
    """Draw n runs under do(assignments): clamped nodes are held constant,
    all other mechanisms run normally."""
    return _generate(scm, n, seed, assignments)


def path_effect(scm: Scm, treatment: str, outcome: str) -> float:
    """Total linear effect: sum over directed paths of the weight products."""
    if not scm.is_linear:
        raise ConfigError("path_effect is only defined for linear SCMs")
    effect = {treatment: 1.0}
    for name in scm.graph.topological_order():
        if name == treatment:
            continue
        mech = scm.mechanisms.get(name)
        if mech is None:
            continue
        acc = 0.0
        for p, w in zip(mech.parents, mech.weights):
            acc += w * effect.get(p, 0.0)
        effect[name] = acc
    return effect.get(outcome, 0.0)


def true_ate_mc(scm: Scm, q: AteQuery, n_mc: int = 100_000) -> tuple[float, float]:
    """Monte-Carlo oracle for E[Y | do(x1)] - E[Y | do(x2)].

    Both arms share one noise stream (common random numbers), so the returned
    standard error reflects the paired difference.
    """
    seed = scm.seed + 1
    a = do_sample(scm, {q.treatment: q.x1}, n_mc, seed).column(q.outcome)
    b = do_sample(scm, {q.treatment: q.x2}, n_mc, seed).column(q.outcome)
    diff = a - b
    se = float(diff.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return float(diff.mean()), se


def true_ate(scm: Scm, q: AteQuery, n_mc: int = 100_000) -> float:
    """Ground-truth average treatment effect of the SCM.

    Linear models use the exact path-coefficient sum; nonlinear models fall
    back to Monte-Carlo with ``n_mc`` draws per arm.
    """
    for name in (q.treatment, q.outcome):
        if name not in scm.graph.nodes:
            raise UnknownNodeError(f"unknown variable: {name!r}")
    if q.x1 == q.x2:
        return 0.0
    if scm.is_linear:
        return path_effect(scm, q.treatment, q.outcome) * (q.x1 - q.x2)
    return true_ate_mc(scm, q, n_mc)[0]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def scm_to_dict(scm: Scm) -> dict:
    return {
        "seed": scm.seed,
        "variables": [
            {"name": s.name, "kind": s.kind.value} for s in scm.variables
        ],
        "edges": sorted([a, b] for a, b in scm.graph.edges),
        "mechanisms": {
            name: {
                "parents": list(m.parents),
                "weights": list(m.weights),
                "noise_sigma": m.noise_sigma,
                "nonlinear": m.nonlinear,
                "scale": m.scale,
            }
            for name, m in sorted(scm.mechanisms.items())
        },
    }


def scm_from_dict(doc: Mapping) -> Scm:
    try:
        specs = tuple(
            VariableSpec(name=str(v["name"]), kind=VariableKind(v["kind"]))
            for v in doc["variables"]
        )
        edges = [(str(a), str(b)) for a, b in doc["edges"]]
        mechanisms = {
            str(name): Mechanism(
                parents=tuple(str(p) for p in m["parents"]),
                weights=tuple(float(w) for w in m["weights"]),
                noise_sigma=float(m["noise_sigma"]),
                nonlinear=bool(m["nonlinear"]),
                scale=float(m.get("scale", 1.0)),
            )
            for name, m in doc["mechanisms"].items()
        }
        seed = int(doc["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed SCM document: {exc}") from exc
    return Scm(
        variables=specs,
        graph=build_graph(specs, edges),
        mechanisms=mechanisms,
        seed=seed,
    )


def save_scm(scm: Scm, path: str | Path) -> None:
    Path(path).write_text(dumps_json(scm_to_dict(scm)), encoding="utf-8")


def load_scm(path: str | Path) -> Scm:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return scm_from_dict(doc)
