"""Choosing intervention settings that optimize a weighted multi-metric
objective: response surfaces over method ratios plus exhaustive grid search
over small method combinations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CausalGraph,
    Direction,
    ObservationMatrix,
    SignSpec,
    VariableKind,
    is_cause,
)
from .errors import RankError, SchemaError


@dataclass(frozen=True)
class ObjectiveTerm:
    metric: str
    weight: float
    sign: SignSpec

    def __post_init__(self) -> None:
        if not math.isfinite(self.weight) or self.weight < 0:
            raise SchemaError("term weights must be finite and >= 0")


@dataclass(frozen=True)
class Objective:
    """Weighted improvement over several metrics.

    Predicted changes are normalized per metric (default: the metric's sample
    standard deviation in the run table) and oriented so improvement is
    positive before weighting.
    """

    terms: tuple[ObjectiveTerm, ...]
    normalization: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if not self.terms:
            raise SchemaError("objective needs at least one term")
        if not any(t.weight > 0 for t in self.terms):
            raise SchemaError("objective needs at least one positive weight")
        names = [t.metric for t in self.terms]
        if len(set(names)) != len(names):
            raise SchemaError("objective metrics must be unique")


@dataclass(frozen=True)
class SelectionPlan:
    assignments: Mapping[str, float]
    predicted_changes: Mapping[str, float]
    objective_value: float


class ResponseSurface:
    """Least-squares fit of one metric on method ratios: intercept, linear
    terms, and pairwise interactions."""

    def __init__(self, methods: Sequence[str], metric: str, coef: np.ndarray):
        self.methods = tuple(methods)
        self.metric = metric
        self.coef = coef
        self._pairs = list(itertools.combinations(range(len(self.methods)), 2))

    def _design_row(self, ratios: np.ndarray) -> np.ndarray:
        row = np.empty(1 + len(self.methods) + len(self._pairs))
        row[0] = 1.0
        row[1 : 1 + len(self.methods)] = ratios
        for t, (i, j) in enumerate(self._pairs):
            row[1 + len(self.methods) + t] = ratios[i] * ratios[j]
        return row

    def predict(self, assignments: Mapping[str, float]) -> float:
        ratios = np.asarray([assignments.get(m, 0.0) for m in self.methods])
        return float(self._design_row(ratios) @ self.coef)

    @property
    def linear_coefs(self) -> dict[str, float]:
        return {m: float(self.coef[1 + i]) for i, m in enumerate(self.methods)}


def _design_matrix(cols: list[np.ndarray], n: int) -> np.ndarray:
    k = len(cols)
    pairs = list(itertools.combinations(range(k), 2))
    out = np.empty((n, 1 + k + len(pairs)))
    out[:, 0] = 1.0
    for i, c in enumerate(cols):
        out[:, 1 + i] = c
    for t, (i, j) in enumerate(pairs):
        out[:, 1 + k + t] = cols[i] * cols[j]
    return out


def fit_response(
    data: ObservationMatrix, methods: Sequence[str], metric: str
) -> ResponseSurface:
    """Fit metric ~ methods with linear and pairwise-interaction terms."""
    for m in methods:
        if data.spec(m).kind is not VariableKind.INTERVENTIONAL:
            raise SchemaError(f"method {m!r} must be interventional")
    if data.spec(metric).kind is not VariableKind.OBSERVATIONAL:
        raise SchemaError(f"metric {metric!r} must be observational")
    cols = [data.column(m) for m in methods]
    design = _design_matrix(cols, data.n_runs)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise RankError("method ratio columns are collinear")
    coef, *_ = np.linalg.lstsq(design, data.column(metric), rcond=None)
    return ResponseSurface(methods, metric, coef)


def _grid_values(grid_step: float) -> list[float]:
    steps = int(math.floor(1.0 / grid_step + 1e-9))
    values = [round(i * grid_step, 12) for i in range(steps + 1)]
    if values[-1] < 1.0 - 1e-9:
        values.append(1.0)
    return values


def objective_scales(data: ObservationMatrix, objective: Objective) -> dict[str, float]:
    """Per-metric normalization: sample standard deviation unless overridden."""
    scales = {}
    for term in objective.terms:
        if objective.normalization and term.metric in objective.normalization:
            s = float(objective.normalization[term.metric])
        else:
            s = float(data.column(term.metric).std(ddof=1))
        scales[term.metric] = s if s > 0 else 1.0
    return scales


def score_assignment(
    assignments: Mapping[str, float],
    surfaces: Mapping[str, ResponseSurface],
    objective: Objective,
    scales: Mapping[str, float],
) -> tuple[float, dict[str, float]]:
    """Objective value of one assignment plus the predicted metric changes."""
    total = 0.0
    changes: dict[str, float] = {}
    for term in objective.terms:
        surface = surfaces[term.metric]
        base = surface.predict({})
        pred = surface.predict(assignments)
        change = pred - base
        changes[term.metric] = change
        if term.sign.direction is Direction.MAXIMIZE:
            improvement = change
        elif term.sign.direction is Direction.MINIMIZE:
            improvement = -change
        else:
            improvement = abs(base - term.sign.target) - abs(pred - term.sign.target)
        total += term.weight * improvement / scales[term.metric]
    return total, changes


def select_methods(
    data: ObservationMatrix,
    g: CausalGraph,
    objective: Objective,
    methods: Sequence[str],
    grid_step: float = 0.1,
    max_active: int = 2,
) -> SelectionPlan:
    """Exhaustive search over method subsets and ratio grids.

    Only methods with a directed path to at least one objective metric are
    candidates; the rest stay at zero.  Ties prefer fewer active methods,
    then the lexicographically first subset and the smallest ratios.
    """
    if not (0.0 < grid_step <= 0.5):
        raise SchemaError("grid_step must lie in (0, 0.5]")
    if max_active < 1:
        raise SchemaError("max_active must be >= 1")
    methods = sorted(methods)
    metric_names = [t.metric for t in objective.terms]
    candidates = [
        m for m in methods if any(is_cause(g, m, metric) for metric in metric_names)
    ]
    surfaces = {
        metric: fit_response(data, methods, metric) for metric in metric_names
    }
    scales = objective_scales(data, objective)

    best_value, best_changes = score_assignment({}, surfaces, objective, scales)
    best_assign: dict[str, float] = {}
    nonzero = [v for v in _grid_values(grid_step) if v > 0.0]
    for size in range(1, min(max_active, len(candidates)) + 1):
        for subset in itertools.combinations(candidates, size):
            for values in itertools.product(nonzero, repeat=size):
                assign = dict(zip(subset, values))
                value, changes = score_assignment(assign, surfaces, objective, scales)
                if value > best_value:
                    best_value, best_changes, best_assign = value, changes, assign
    return SelectionPlan(
        assignments=best_assign,
        predicted_changes=best_changes,
        objective_value=best_value,
    )
