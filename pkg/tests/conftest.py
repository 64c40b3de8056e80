"""Shared builders for hand-specified SCMs used across test modules."""

from __future__ import annotations

import pytest

from tradecause.core import (
    SignSpec,
    VariableKind,
    VariableSpec,
    build_graph,
)
from tradecause.scm import Mechanism, Scm

OBS = VariableKind.OBSERVATIONAL
INT = VariableKind.INTERVENTIONAL


def make_scm(
    kinds: dict[str, VariableKind],
    mechanisms: dict[str, tuple[dict[str, float], float]],
    seed: int = 0,
    nonlinear: frozenset[str] = frozenset(),
    signs: dict[str, SignSpec] | None = None,
) -> Scm:
    """Assemble an SCM from {node: kind} and {node: ({parent: weight}, sigma)}."""
    signs = signs or {}
    specs = tuple(
        VariableSpec(name, kind, sign=signs.get(name, SignSpec()))
        for name, kind in kinds.items()
    )
    edges = [
        (parent, node)
        for node, (weights, _) in mechanisms.items()
        for parent in weights
    ]
    graph = build_graph(specs, edges)
    mechs = {
        node: Mechanism(
            parents=tuple(weights.keys()),
            weights=tuple(weights.values()),
            noise_sigma=sigma,
            nonlinear=node in nonlinear,
        )
        for node, (weights, sigma) in mechanisms.items()
    }
    return Scm(variables=specs, graph=graph, mechanisms=mechs, seed=seed)


@pytest.fixture
def chain_scm() -> Scm:
    """T (interventional) -> X -> Y, linear, weights 2 and -1."""
    return make_scm(
        {"T": INT, "X": OBS, "Y": OBS},
        {"X": ({"T": 2.0}, 0.5), "Y": ({"X": -1.0}, 0.5)},
        seed=0,
    )


@pytest.fixture
def confounded_scm() -> Scm:
    """Z -> T (w=1), Z -> Y (w=1), T -> Y (w=2); all noise 0.5."""
    return make_scm(
        {"Z": OBS, "T": OBS, "Y": OBS},
        {
            "Z": ({}, 0.5),
            "T": ({"Z": 1.0}, 0.5),
            "Y": ({"Z": 1.0, "T": 2.0}, 0.5),
        },
        seed=0,
    )
