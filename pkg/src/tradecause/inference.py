"""Average treatment effect estimation via cross-fitted double machine
learning, with graph-derived backdoor adjustment, plus the polynomial
conditional means used by the trade-off analysis.

The model is partially linear: residualize treatment and outcome on the
adjustment set with cross-fitted nuisance models, then regress residual on
residual.  The two-point effect E[Y|do(x1)] - E[Y|do(x2)] is theta * (x1 - x2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels
from .core import AteQuery, CausalGraph, ObservationMatrix
from .errors import (
    DegenerateTreatmentError,
    ExtrapolationError,
    InvalidAdjustmentError,
    RankError,
    SchemaError,
)


@dataclass(frozen=True)
class LinearRidge:
    """Ridge regression nuisance on standardized covariates."""

    lam: float = 1e-3

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise SchemaError("ridge penalty must be positive")


@dataclass(frozen=True)
class KNearest:
    """k-nearest-neighbor nuisance for nonlinear confounding."""

    k: int = 10

    def __post_init__(self) -> None:
        if self.k < 1:
            raise SchemaError("k must be >= 1")


@dataclass(frozen=True)
class DmlConfig:
    folds: int = 5
    nuisance: LinearRidge | KNearest = field(default_factory=LinearRidge)
    cond_mean_degree: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise SchemaError("folds must be >= 2")
        if self.cond_mean_degree < 0:
            raise SchemaError("cond_mean_degree must be >= 0")


@dataclass(frozen=True)
class EffectEstimate:
    theta: float
    std_error: float
    n: int
    adjustment_set: frozenset[str]


def adjustment_set(g: CausalGraph, treatment: str, outcome: str) -> frozenset[str]:
    """The treatment's parents: a backdoor set valid in any DAG."""
    if treatment == outcome:
        raise ValueError("treatment and outcome must differ")
    parents = g.parents(treatment)
    g._require(outcome)
    if outcome in parents:
        raise InvalidAdjustmentError(
            f"outcome {outcome!r} is a parent of treatment {treatment!r}"
        )
    return frozenset(parents)


def _fit_predict(
    train_z: np.ndarray,
    train_y: np.ndarray,
    test_z: np.ndarray,
    nuisance: LinearRidge | KNearest,
) -> np.ndarray:
    """Train a nuisance model on (train_z, train_y), predict at test_z.

    With no covariates the prediction is the training mean (cross-fitted
    constant)."""
    y_bar = train_y.mean()
    if train_z.shape[1] == 0:
        return np.full(test_z.shape[0], y_bar)
    mu = train_z.mean(axis=0)
    sd = train_z.std(axis=0)
    sd[sd == 0.0] = 1.0
    a = (train_z - mu) / sd
    b = (test_z - mu) / sd
    if isinstance(nuisance, LinearRidge):
        d = a.shape[1]
        coef = np.linalg.solve(
            a.T @ a + nuisance.lam * np.eye(d), a.T @ (train_y - y_bar)
        )
        return y_bar + b @ coef
    k = min(nuisance.k, train_z.shape[0])
    return _kernels.knn_regress(
        np.ascontiguousarray(a),
        np.ascontiguousarray(train_y, dtype=np.float64),
        np.ascontiguousarray(b),
        k,
    )


def dml_effect(
    data: ObservationMatrix,
    treatment: str,
    outcome: str,
    adjust: Iterable[str],
    cfg: DmlConfig | None = None,
) -> EffectEstimate:
    """Cross-fitted partially linear DML estimate of the treatment coefficient.

    On each held-out fold, treatment and outcome residuals come from nuisance
    models trained on the complement; theta is the residual-on-residual
    regression coefficient and the standard error comes from the influence
    function.
    """
    cfg = cfg or DmlConfig()
    adjust = frozenset(adjust)
    if treatment in adjust or outcome in adjust:
        raise ValueError("treatment and outcome cannot be in the adjustment set")
    n = data.n_runs
    if n < 10 * cfg.folds:
        raise SchemaError(f"need at least {10 * cfg.folds} runs for {cfg.folds} folds")
    t_col = data.column(treatment)
    y_col = data.column(outcome)
    z_cols = [data.column(a) for a in sorted(adjust)]
    z = np.column_stack(z_cols) if z_cols else np.empty((n, 0))

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, cfg.folds)
    r_t = np.empty(n)
    r_y = np.empty(n)
    for held in folds:
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        r_t[held] = t_col[held] - _fit_predict(z[mask], t_col[mask], z[held], cfg.nuisance)
        r_y[held] = y_col[held] - _fit_predict(z[mask], y_col[mask], z[held], cfg.nuisance)

    denom = float(r_t @ r_t)
    if denom < 1e-12:
        raise DegenerateTreatmentError(
            f"treatment {treatment!r} has no residual variation after adjustment"
        )
    theta = float(r_t @ r_y) / denom
    psi = r_t * (r_y - theta * r_t) / (denom / n)
    std_error = float(psi.std(ddof=1) / math.sqrt(n))
    return EffectEstimate(
        theta=theta, std_error=std_error, n=n, adjustment_set=adjust
    )


def ate(
    data: ObservationMatrix,
    g: CausalGraph,
    q: AteQuery,
    cfg: DmlConfig | None = None,
) -> float:
    """Two-point average treatment effect theta * (x1 - x2) with backdoor
    adjustment on the treatment's parents."""
    adjust = adjustment_set(g, q.treatment, q.outcome)
    est = dml_effect(data, q.treatment, q.outcome, adjust, cfg)
    return est.theta * (q.x1 - q.x2)


def conditional_mean(
    data: ObservationMatrix,
    var: str,
    given: str,
    value: float,
    cfg: DmlConfig | None = None,
) -> float:
    """Polynomial least-squares estimate of E[var | given = value]."""
    cfg = cfg or DmlConfig()
    degree = cfg.cond_mean_degree
    x = data.column(given)
    y = data.column(var)
    n_distinct = np.unique(x).size
    if n_distinct < degree + 1:
        raise RankError(
            f"{given!r} has {n_distinct} distinct values; degree {degree} needs {degree + 1}"
        )
    lo, hi = float(x.min()), float(x.max())
    if value < lo - 0.05 or value > hi + 0.05:
        raise ExtrapolationError(
            f"value {value} outside observed range [{lo}, {hi}] of {given!r}"
        )
    poly = np.polynomial.Polynomial.fit(x, y, deg=degree)
    return float(poly(value))
