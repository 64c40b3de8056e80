from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradecause.errors import (
    DivisionByZeroError,
    EmptyGroupError,
    InsufficientRowsError,
)
from tradecause.fairmetrics import (
    PredictionTable,
    accuracy_f1,
    aod,
    consistency,
    di,
    group_rates,
    metrics_row,
    spd,
    theil,
)


def table(sensitive, label, prediction, features=None):
    return PredictionTable(sensitive, label, prediction, features)


# --- SPD / DI: 4 rows, priv selects 2/2, unpriv 1/2 -> SPD 0.5 - 1.0 = -0.5


def test_spd_hand_case():
    t = table([1, 1, 0, 0], [1, 1, 1, 1], [1, 1, 1, 0])
    assert spd(t) == pytest.approx(-0.5)


def test_spd_parity_and_extreme():
    parity = table([1, 1, 0, 0], [1, 0, 1, 0], [1, 0, 1, 0])
    assert spd(parity) == 0.0
    extreme = table([1, 1, 0, 0], [1, 0, 1, 0], [0, 0, 1, 1])
    assert spd(extreme) == 1.0


def test_spd_empty_group():
    with pytest.raises(EmptyGroupError):
        spd(table([1, 1], [1, 0], [1, 0]))


def test_di_hand_case():
    t = table([1, 1, 0, 0], [1, 1, 1, 1], [1, 1, 1, 0])
    assert di(t) == pytest.approx(0.5)


def test_di_equal_rates_and_zero_denominator():
    assert di(table([1, 1, 0, 0], [1, 0, 1, 0], [1, 0, 1, 0])) == pytest.approx(1.0)
    with pytest.raises(DivisionByZeroError):
        di(table([1, 1, 0, 0], [1, 0, 1, 0], [0, 0, 1, 1]))


# --- AOD: unpriv TPR 1.0 FPR 0, priv TPR 0.5 FPR 0 -> 0.5 * 0.5 = +0.25


def test_aod_hand_case():
    t = table(
        sensitive=[0, 0, 0, 0, 1, 1, 1, 1],
        label=[1, 1, 0, 0, 1, 1, 0, 0],
        prediction=[1, 1, 0, 0, 1, 0, 0, 0],
    )
    assert aod(t) == pytest.approx(0.25)


def test_aod_perfect_classifier_is_zero():
    t = table([0, 0, 1, 1], [1, 0, 1, 0], [1, 0, 1, 0])
    assert aod(t) == 0.0


def test_aod_antisymmetric_under_group_swap():
    t = table(
        sensitive=[0, 0, 0, 0, 1, 1, 1, 1],
        label=[1, 1, 0, 0, 1, 1, 0, 0],
        prediction=[1, 0, 1, 0, 1, 1, 0, 0],
    )
    swapped = table(1 - t.sensitive, t.label, t.prediction)
    assert aod(swapped) == pytest.approx(-aod(t))


def test_aod_needs_both_labels_per_group():
    with pytest.raises(EmptyGroupError):
        aod(table([0, 0, 1, 1], [1, 1, 1, 0], [1, 0, 1, 0]))


# --- Theil: b = (2, 1, 1, 0) -> (1/4) * 2 ln 2 = 0.346574


def test_theil_hand_case():
    t = table(
        sensitive=[0, 1, 0, 1],
        label=[0, 0, 1, 1],
        prediction=[1, 0, 1, 0],
    )
    # benefits: 1-0+1=2, 0-0+1=1, 1-1+1=1, 0-1+1=0
    expected = 0.25 * (2.0 * math.log(2.0))
    assert theil(t) == pytest.approx(expected, abs=1e-12)
    assert round(theil(t), 4) == 0.3466


def test_theil_zero_when_all_correct():
    t = table([0, 1, 0, 1], [1, 0, 1, 0], [1, 0, 1, 0])
    assert theil(t) == 0.0


@given(
    st.lists(
        st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)),
        min_size=1,
        max_size=40,
    )
)
@settings(max_examples=80, deadline=None)
def test_theil_nonnegative_and_zero_iff_constant_benefit(rows):
    s, y, p = zip(*rows)
    t = table(list(s), list(y), list(p))
    value = theil(t)
    assert value >= -1e-15
    benefits = {pi - yi + 1 for yi, pi in zip(y, p)}
    if len(benefits) == 1:
        assert value == pytest.approx(0.0, abs=1e-12)
    else:
        assert value > 0.0


# --- Consistency: n=6, k=1; mutual nearest pair (rows 0, 1) disagree


def test_consistency_hand_case():
    feats = [[0.0], [1.0], [10.0], [11.0], [20.0], [21.0]]
    t = table(
        sensitive=[0, 1, 0, 1, 0, 1],
        label=[1, 1, 1, 1, 1, 1],
        prediction=[1, 0, 1, 1, 1, 1],
        features=feats,
    )
    assert consistency(t, k=1) == pytest.approx(1.0 - 2.0 / 6.0, abs=1e-9)


def test_consistency_identical_predictions():
    feats = np.arange(12, dtype=float).reshape(6, 2)
    t = table([0, 1] * 3, [1, 0] * 3, [1] * 6, feats)
    assert consistency(t, k=2) == 1.0


def test_consistency_requires_enough_rows():
    t = table([0, 1], [1, 0], [1, 0], [[0.0], [1.0]])
    with pytest.raises(InsufficientRowsError):
        consistency(t, k=5)


@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.integers(min_value=1, max_value=4),
)
@settings(max_examples=30, deadline=None)
def test_consistency_bounded_and_order_invariant(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(k + 2, 20))
    t = table(
        rng.integers(0, 2, n),
        rng.integers(0, 2, n),
        rng.integers(0, 2, n),
        rng.normal(size=(n, 2)),
    )
    value = consistency(t, k=k)
    assert 0.0 <= value <= 1.0
    perm = rng.permutation(n)
    shuffled = table(
        t.sensitive[perm], t.label[perm], t.prediction[perm], t.features[perm]
    )
    assert consistency(shuffled, k=k) == pytest.approx(value, abs=1e-12)


# --- accuracy / F1


def test_accuracy_f1_hand_case():
    t = table([0, 1, 0, 1], [1, 1, 0, 0], [1, 0, 0, 0])
    acc, f1 = accuracy_f1(t)
    assert acc == pytest.approx(0.75)
    assert f1 == pytest.approx(2.0 / 3.0)


def test_accuracy_f1_perfect_and_zero_recall():
    acc, f1 = accuracy_f1(table([0, 1], [1, 0], [1, 0]))
    assert (acc, f1) == (1.0, 1.0)
    acc, f1 = accuracy_f1(table([0, 1, 0], [1, 1, 0], [0, 0, 0]))
    assert f1 == 0.0


# --- invariances


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_group_metrics_row_order_invariant(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 30))
    s = rng.integers(0, 2, n)
    s[:3] = [0, 1, 0]  # both groups present
    y = rng.integers(0, 2, n)
    p = rng.integers(0, 2, n)
    t = table(s, y, p)
    perm = rng.permutation(n)
    t2 = table(s[perm], y[perm], p[perm])
    assert spd(t2) == pytest.approx(spd(t), abs=1e-12)
    try:
        assert di(t2) == pytest.approx(di(t), abs=1e-12)
    except DivisionByZeroError:
        pass


def test_spd_antisymmetry_and_di_reciprocal_under_group_swap():
    t = table([1, 1, 1, 0, 0], [1, 0, 1, 1, 0], [1, 0, 1, 1, 1])
    swapped = table(1 - t.sensitive, t.label, t.prediction)
    assert spd(swapped) == pytest.approx(-spd(t))
    assert di(swapped) == pytest.approx(1.0 / di(t))


def test_group_rates_fields_in_unit_interval():
    t = table(
        sensitive=[0, 0, 0, 1, 1, 1],
        label=[1, 0, 1, 1, 0, 0],
        prediction=[1, 1, 0, 1, 0, 1],
    )
    r = group_rates(t)
    for value in (r.sel_priv, r.sel_unpriv, r.tpr_priv, r.tpr_unpriv, r.fpr_priv, r.fpr_unpriv):
        assert 0.0 <= value <= 1.0


def test_metrics_row_keys():
    rng = np.random.default_rng(1)
    n = 40
    t = table(
        rng.integers(0, 2, n),
        rng.integers(0, 2, n),
        rng.integers(0, 2, n),
        rng.normal(size=(n, 3)),
    )
    row = metrics_row(t)
    assert set(row) == {"accuracy", "f1", "di", "spd", "aod", "consistency", "theil"}
