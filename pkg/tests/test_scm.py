from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import INT, OBS, make_scm
from tradecause.core import AteQuery, VariableKind
from tradecause.errors import ConfigError, UnknownNodeError
from tradecause.scm import (
    Mechanism,
    Scm,
    ScmConfig,
    do_sample,
    path_effect,
    random_scm,
    sample,
    scm_from_dict,
    scm_to_dict,
    true_ate,
    true_ate_mc,
)


def test_config_guards():
    with pytest.raises(ConfigError):
        ScmConfig(n_nodes=3, n_interventional=3)
    with pytest.raises(ConfigError):
        ScmConfig(n_nodes=3, n_interventional=0)
    with pytest.raises(ConfigError):
        ScmConfig(n_nodes=3, n_interventional=1, expected_in_degree=-1.0)
    with pytest.raises(ConfigError):
        ScmConfig(n_nodes=3, n_interventional=1, noise_sigma=0.0)


def test_two_node_forced_edge():
    model = random_scm(ScmConfig(n_nodes=2, n_interventional=1, expected_in_degree=1.0))
    assert model.graph.edges == frozenset({("T1", "X1")})


def test_random_scm_deterministic_serialization():
    cfg = ScmConfig(n_nodes=8, n_interventional=3, expected_in_degree=2.0, seed=42)
    doc1 = json.dumps(scm_to_dict(random_scm(cfg)), sort_keys=True)
    doc2 = json.dumps(scm_to_dict(random_scm(cfg)), sort_keys=True)
    assert doc1 == doc2


def test_random_scm_interventional_are_roots():
    model = random_scm(ScmConfig(n_nodes=10, n_interventional=4, expected_in_degree=3.0, seed=5))
    for spec in model.variables:
        if spec.kind is VariableKind.INTERVENTIONAL:
            assert model.graph.parents(spec.name) == ()


def test_scm_round_trip():
    model = random_scm(ScmConfig(n_nodes=6, n_interventional=2, seed=9))
    again = scm_from_dict(scm_to_dict(model))
    assert scm_to_dict(again) == scm_to_dict(model)


def test_sample_determinism_and_slope():
    model = make_scm(
        {"T": INT, "X": OBS},
        {"X": ({"T": 2.0}, 0.01)},
    )
    a = sample(model, 10_000, seed=1)
    b = sample(model, 10_000, seed=1)
    assert np.array_equal(a.data, b.data)
    t, x = a.column("T"), a.column("X")
    slope = np.cov(t, x)[0, 1] / np.var(t)
    assert 1.99 <= slope <= 2.01


def test_interventional_column_mean_is_half():
    model = random_scm(ScmConfig(n_nodes=4, n_interventional=2, seed=0))
    table = sample(model, 100_000, seed=3)
    for name in ("T1", "T2"):
        assert table.column(name).mean() == pytest.approx(0.5, abs=0.01)
        assert table.column(name).min() >= 0.0
        assert table.column(name).max() <= 1.0


def test_do_sample_clamps_and_shifts_mean(chain_scm):
    table = do_sample(chain_scm, {"T": 0.3}, 20_000, seed=2)
    assert np.all(table.column("T") == 0.3)
    sem = 3 * 0.5 / np.sqrt(20_000)
    assert table.column("X").mean() == pytest.approx(0.6, abs=3 * sem)


def test_do_sample_unknown_node(chain_scm):
    with pytest.raises(UnknownNodeError):
        do_sample(chain_scm, {"W": 0.5}, 10, seed=0)


def test_do_on_sink_leaves_other_columns_identical(chain_scm):
    plain = sample(chain_scm, 5_000, seed=4)
    clamped = do_sample(chain_scm, {"Y": 0.0}, 5_000, seed=4)
    # same noise stream: non-descendant columns match exactly
    assert np.array_equal(plain.column("T"), clamped.column("T"))
    assert np.array_equal(plain.column("X"), clamped.column("X"))
    assert np.all(clamped.column("Y") == 0.0)


def test_do_on_fork_branch_leaves_sibling_unchanged():
    model = make_scm(
        {"Z": OBS, "X": OBS, "Y": OBS},
        {"Z": ({}, 1.0), "X": ({"Z": 1.0}, 0.5), "Y": ({"Z": 1.0}, 0.5)},
    )
    plain = sample(model, 5_000, seed=6)
    clamped = do_sample(model, {"X": 5.0}, 5_000, seed=6)
    assert np.array_equal(plain.column("Y"), clamped.column("Y"))


def test_true_ate_single_edge(chain_scm):
    assert true_ate(chain_scm, AteQuery("T", "X", 1.0, 0.0)) == 2.0


def test_true_ate_path_sum():
    # T -> M (1) -> Y (-1) plus direct T -> Y (0.5): total 1 * (-1) + 0.5
    model = make_scm(
        {"T": INT, "M": OBS, "Y": OBS},
        {"M": ({"T": 1.0}, 0.2), "Y": ({"M": -1.0, "T": 0.5}, 0.2)},
    )
    assert true_ate(model, AteQuery("T", "Y", 1.0, 0.0)) == pytest.approx(-0.5)


def test_true_ate_identical_arms_and_antisymmetry(chain_scm):
    assert true_ate(chain_scm, AteQuery("T", "Y", 0.4, 0.4)) == 0.0
    fwd = true_ate(chain_scm, AteQuery("T", "Y", 0.9, 0.1))
    rev = true_ate(chain_scm, AteQuery("T", "Y", 0.1, 0.9))
    assert fwd == -rev


def test_true_ate_no_path_is_zero():
    model = make_scm(
        {"T": INT, "X": OBS, "Y": OBS},
        {"X": ({"T": 1.0}, 0.2), "Y": ({}, 0.2)},
    )
    assert true_ate(model, AteQuery("T", "Y", 1.0, 0.0)) == 0.0


def test_mc_matches_path_sum_on_linear_scms():
    for seed in range(5):
        model = random_scm(
            ScmConfig(n_nodes=6, n_interventional=2, expected_in_degree=2.0, seed=seed)
        )
        q = AteQuery("T1", model.variables[-1].name, 1.0, 0.0)
        exact = true_ate(model, q)
        mc, se = true_ate_mc(model, q, n_mc=20_000)
        assert mc == pytest.approx(exact, abs=max(4 * se, 1e-8))


def test_nonlinear_uses_monte_carlo():
    model = make_scm(
        {"T": INT, "X": OBS},
        {"X": ({"T": 2.0}, 0.1)},
        nonlinear=frozenset({"X"}),
    )
    est = true_ate(model, AteQuery("T", "X", 1.0, 0.0), n_mc=50_000)
    assert est == pytest.approx(np.tanh(2.0) - np.tanh(0.0), abs=0.02)
    with pytest.raises(ConfigError):
        path_effect(model, "T", "X")


def test_sample_and_do_sample_no_assignments_agree(chain_scm):
    a = sample(chain_scm, 2_000, seed=8)
    b = do_sample(chain_scm, {}, 2_000, seed=8)
    assert np.array_equal(a.data, b.data)


def test_mechanism_validation():
    with pytest.raises(ConfigError):
        Mechanism(("A",), (1.0, 2.0), 0.5)
    with pytest.raises(ConfigError):
        Mechanism(("A",), (1.0,), 0.0)
    with pytest.raises(ConfigError):
        Mechanism(("A",), (float("nan"),), 0.5)


def test_scm_mechanism_graph_mismatch():
    from tradecause.core import VariableSpec, build_graph

    specs = (VariableSpec("T", INT), VariableSpec("X", OBS))
    g = build_graph(specs, [("T", "X")])
    with pytest.raises(ConfigError):
        Scm(specs, g, {"X": Mechanism((), (), 0.5)}, seed=0)
    with pytest.raises(ConfigError):
        Scm(specs, g, {}, seed=0)
