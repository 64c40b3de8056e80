"""Group and individual fairness metrics over binary prediction tables.

Conventions: ``sensitive == 1`` marks the privileged group, ``label == 1``
and ``prediction == 1`` the favorable class.  Difference metrics are oriented
unprivileged minus privileged, ratios unprivileged over privileged, so 0
(resp. 1) denotes parity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    DivisionByZeroError,
    EmptyGroupError,
    InsufficientRowsError,
    ParseError,
    SchemaError,
)


@dataclass(frozen=True, eq=False)
class PredictionTable:
    """Per-individual sensitive attribute, true label, prediction, features."""

    sensitive: np.ndarray
    label: np.ndarray
    prediction: np.ndarray
    features: np.ndarray

    def __init__(
        self,
        sensitive: Sequence[int] | np.ndarray,
        label: Sequence[int] | np.ndarray,
        prediction: Sequence[int] | np.ndarray,
        features: Sequence[Sequence[float]] | np.ndarray | None = None,
    ) -> None:
        s = np.asarray(sensitive, dtype=np.int64)
        y = np.asarray(label, dtype=np.int64)
        p = np.asarray(prediction, dtype=np.int64)
        n = s.shape[0]
        if n == 0:
            raise SchemaError("prediction table must be nonempty")
        if y.shape != (n,) or p.shape != (n,):
            raise SchemaError("sensitive, label and prediction must have equal length")
        for name, col in (("sensitive", s), ("label", y), ("prediction", p)):
            if not np.isin(col, (0, 1)).all():
                raise ParseError(f"{name} column must be binary 0/1")
        if features is None:
            f = np.empty((n, 0), dtype=np.float64)
        else:
            f = np.asarray(features, dtype=np.float64)
            if f.ndim == 1:
                f = f[:, None]
            if f.shape[0] != n:
                raise SchemaError("features must have one row per individual")
            if not np.isfinite(f).all():
                raise ParseError("features contain NaN or infinite entries")
        for arr in (s, y, p, f):
            arr.setflags(write=False)
        object.__setattr__(self, "sensitive", s)
        object.__setattr__(self, "label", y)
        object.__setattr__(self, "prediction", p)
        object.__setattr__(self, "features", f)

    @property
    def n_rows(self) -> int:
        return self.sensitive.shape[0]

    @classmethod
    def from_csv(cls, path: str | Path) -> "PredictionTable":
        """Load ``sensitive,label,prediction,f1..fd`` columns from a CSV file."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file") from None
            if header[:3] != ["sensitive", "label", "prediction"]:
                raise SchemaError(
                    f"{path}: header must start with sensitive,label,prediction"
                )
            rows = []
            for lineno, raw in enumerate(reader, start=2):
                if len(raw) != len(header):
                    raise SchemaError(f"{path}:{lineno}: wrong number of cells")
                try:
                    rows.append([float(c) for c in raw])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-numeric cell") from None
        if not rows:
            raise SchemaError(f"{path}: no data rows")
        arr = np.asarray(rows)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3:])


@dataclass(frozen=True)
class GroupRates:
    """Selection, true-positive and false-positive rates per group."""

    sel_priv: float
    sel_unpriv: float
    tpr_priv: float
    tpr_unpriv: float
    fpr_priv: float
    fpr_unpriv: float


def _selection_rates(t: PredictionTable) -> tuple[float, float]:
    priv = t.sensitive == 1
    unpriv = ~priv
    if not priv.any() or not unpriv.any():
        raise EmptyGroupError("both groups must be nonempty")
    return float(t.prediction[priv].mean()), float(t.prediction[unpriv].mean())


def group_rates(t: PredictionTable) -> GroupRates:
    sel_priv, sel_unpriv = _selection_rates(t)
    rates = {}
    for tag, mask in (("priv", t.sensitive == 1), ("unpriv", t.sensitive == 0)):
        pos = mask & (t.label == 1)
        neg = mask & (t.label == 0)
        if not pos.any() or not neg.any():
            raise EmptyGroupError(
                f"{tag} group needs at least one positive and one negative label"
            )
        rates[f"tpr_{tag}"] = float(t.prediction[pos].mean())
        rates[f"fpr_{tag}"] = float(t.prediction[neg].mean())
    return GroupRates(sel_priv=sel_priv, sel_unpriv=sel_unpriv, **rates)


def spd(t: PredictionTable) -> float:
    """Statistical parity difference: P(yhat=1 | unpriv) - P(yhat=1 | priv)."""
    sel_priv, sel_unpriv = _selection_rates(t)
    return sel_unpriv - sel_priv


def di(t: PredictionTable) -> float:
    """Disparate impact: P(yhat=1 | unpriv) / P(yhat=1 | priv)."""
    sel_priv, sel_unpriv = _selection_rates(t)
    if sel_priv == 0.0:
        raise DivisionByZeroError("privileged selection rate is zero")
    return sel_unpriv / sel_priv


def aod(t: PredictionTable) -> float:
    """Average odds difference: mean of the FPR and TPR gaps between groups."""
    r = group_rates(t)
    return 0.5 * ((r.fpr_unpriv - r.fpr_priv) + (r.tpr_unpriv - r.tpr_priv))


def theil(t: PredictionTable) -> float:
    """Generalized-entropy index of the per-row benefit b = yhat - y + 1."""
    b = t.prediction - t.label + 1.0
    mu = b.mean()
    if mu == 0.0:  # every benefit is zero: perfectly equal
        return 0.0
    ratio = b / mu
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(ratio > 0.0, ratio * np.log(ratio), 0.0)
    return float(terms.mean())


def consistency(t: PredictionTable, k: int = 5) -> float:
    """Local agreement of predictions among the k nearest individuals.

    Neighbors are found by Euclidean distance on the standardized feature
    columns (the sensitive attribute is not a feature); distance ties break
    by row index.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    n = t.n_rows
    if n <= k:
        raise InsufficientRowsError(f"need more than k={k} rows, got {n}")
    if t.features.shape[1] == 0:
        raise SchemaError("consistency requires feature columns")
    feats = np.ascontiguousarray(t.features, dtype=np.float64)
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    sd[sd == 0.0] = 1.0
    feats = (feats - mu) / sd
    preds = np.ascontiguousarray(t.prediction, dtype=np.float64)
    neighbor_means = _kernels.knn_mean_neighbor_values(feats, preds, k)
    return float(1.0 - np.abs(preds - neighbor_means).mean())


def accuracy_f1(t: PredictionTable) -> tuple[float, float]:
    """Accuracy and F1 of the favorable class; F1 is 0 when P + R = 0."""
    acc = float((t.prediction == t.label).mean())
    tp = int(((t.prediction == 1) & (t.label == 1)).sum())
    fp = int(((t.prediction == 1) & (t.label == 0)).sum())
    fn = int(((t.prediction == 0) & (t.label == 1)).sum())
    denom = 2 * tp + fp + fn
    f1 = 2.0 * tp / denom if denom > 0 else 0.0
    return acc, f1


def metrics_row(t: PredictionTable, k: int = 5) -> dict[str, float]:
    """All computable metrics as one flat record (CLI ``metrics`` output)."""
    acc, f1 = accuracy_f1(t)
    return {
        "accuracy": acc,
        "f1": f1,
        "di": di(t),
        "spd": spd(t),
        "aod": aod(t),
        "consistency": consistency(t, k=k),
        "theil": theil(t),
    }
