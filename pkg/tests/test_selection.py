from __future__ import annotations

import itertools

import numpy as np
import pytest

from conftest import INT, OBS, make_scm
from tradecause.core import Direction, ObservationMatrix, SignSpec, VariableSpec
from tradecause.errors import RankError, SchemaError
from tradecause.scm import do_sample, sample
from tradecause.selection import (
    Objective,
    ObjectiveTerm,
    fit_response,
    objective_scales,
    score_assignment,
    select_methods,
)

MAX = SignSpec(Direction.MAXIMIZE)


def _two_method_scm(seed=3):
    """F = T1 - 0.5*T2 + eps (target 0.4), P = T2 + eps (maximize)."""
    return make_scm(
        {"T1": INT, "T2": INT, "F": OBS, "P": OBS},
        {"F": ({"T1": 1.0, "T2": -0.5}, 0.05), "P": ({"T2": 1.0}, 0.05)},
        seed=seed,
        signs={"F": SignSpec(Direction.TARGET, target=0.4), "P": MAX},
    )


def _objective():
    return Objective(
        terms=(
            ObjectiveTerm("F", 1.0, SignSpec(Direction.TARGET, target=0.4)),
            ObjectiveTerm("P", 0.3, MAX),
        )
    )


def test_objective_validation():
    with pytest.raises(SchemaError):
        Objective(terms=())
    with pytest.raises(SchemaError):
        Objective(terms=(ObjectiveTerm("F", 0.0, MAX),))
    with pytest.raises(SchemaError):
        ObjectiveTerm("F", -1.0, MAX)
    with pytest.raises(SchemaError):
        Objective(terms=(ObjectiveTerm("F", 1.0, MAX), ObjectiveTerm("F", 2.0, MAX)))


def test_fit_response_recovers_weights():
    model = make_scm(
        {"T1": INT, "T2": INT, "Y": OBS},
        {"Y": ({"T1": 2.0, "T2": -1.0}, 0.3)},
    )
    data = sample(model, 5000, seed=1)
    surface = fit_response(data, ["T1", "T2"], "Y")
    coefs = surface.linear_coefs
    assert coefs["T1"] == pytest.approx(2.0, abs=0.1)
    assert coefs["T2"] == pytest.approx(-1.0, abs=0.1)


def test_fit_response_null_metric():
    model = make_scm(
        {"T1": INT, "T2": INT, "Y": OBS},
        {"Y": ({}, 0.5)},
    )
    data = sample(model, 5000, seed=2)
    surface = fit_response(data, ["T1", "T2"], "Y")
    for coef in surface.linear_coefs.values():
        assert abs(coef) < 0.1  # roughly 3 standard errors at this n


def test_fit_response_baseline_intercept():
    model = make_scm(
        {"T1": INT, "Y": OBS},
        {"Y": ({"T1": 2.0}, 0.2)},
    )
    data = sample(model, 5000, seed=3)
    surface = fit_response(data, ["T1"], "Y")
    assert surface.predict({}) == pytest.approx(0.0, abs=0.05)


def test_fit_response_collinear_inputs():
    from tradecause.core import VariableKind

    t = np.linspace(0, 1, 100)
    specs = [
        VariableSpec("T1", VariableKind.INTERVENTIONAL),
        VariableSpec("T2", VariableKind.INTERVENTIONAL),
        VariableSpec("Y", VariableKind.OBSERVATIONAL),
    ]
    data = ObservationMatrix(specs, np.column_stack([t, t, 2 * t]))
    with pytest.raises(RankError):
        fit_response(data, ["T1", "T2"], "Y")


def test_select_monotone_single_method():
    model = make_scm(
        {"T1": INT, "Y": OBS},
        {"Y": ({"T1": 1.0}, 0.05)},
        signs={"Y": MAX},
    )
    data = sample(model, 3000, seed=4)
    objective = Objective(terms=(ObjectiveTerm("Y", 1.0, MAX),))
    plan = select_methods(data, model.graph, objective, ["T1"])
    assert plan.assignments == {"T1": 1.0}


def test_select_matches_do_sampling_oracle():
    model = _two_method_scm()
    data = sample(model, 5000, seed=3)
    objective = _objective()
    grid_step = 0.1
    plan = select_methods(data, model.graph, objective, ["T1", "T2"], grid_step=grid_step)

    # oracle: score every grid point by clamping the SCM itself
    scales = objective_scales(data, objective)
    base_f = do_sample(model, {"T1": 0.0, "T2": 0.0}, 20_000, seed=99).column("F").mean()
    base_p = do_sample(model, {"T1": 0.0, "T2": 0.0}, 20_000, seed=99).column("P").mean()
    grid = [round(i * grid_step, 12) for i in range(11)]
    best_value, best_point = -np.inf, None
    for v1, v2 in itertools.product(grid, grid):
        table = do_sample(model, {"T1": v1, "T2": v2}, 20_000, seed=99)
        f, p = table.column("F").mean(), table.column("P").mean()
        value = (
            1.0 * (abs(base_f - 0.4) - abs(f - 0.4)) / scales["F"]
            + 0.3 * (p - base_p) / scales["P"]
        )
        if value > best_value:
            best_value, best_point = value, (v1, v2)

    chosen = (plan.assignments.get("T1", 0.0), plan.assignments.get("T2", 0.0))
    for got, want in zip(chosen, best_point):
        assert abs(got - want) <= grid_step + 1e-9


def test_select_plan_is_argmax_over_grid():
    model = _two_method_scm()
    data = sample(model, 5000, seed=3)
    objective = _objective()
    plan = select_methods(data, model.graph, objective, ["T1", "T2"], grid_step=0.2)
    surfaces = {t.metric: fit_response(data, ["T1", "T2"], t.metric) for t in objective.terms}
    scales = objective_scales(data, objective)
    grid = [round(i * 0.2, 12) for i in range(6)]
    for v1, v2 in itertools.product(grid, grid):
        value, _ = score_assignment({"T1": v1, "T2": v2}, surfaces, objective, scales)
        assert plan.objective_value >= value - 1e-12


def test_select_ignores_methods_without_paths():
    # T2 has no edge to the metric: the graph prunes it from candidates
    model = make_scm(
        {"T1": INT, "T2": INT, "Y": OBS},
        {"Y": ({"T1": 1.0}, 0.05)},
        signs={"Y": MAX},
    )
    data = sample(model, 3000, seed=5)
    objective = Objective(terms=(ObjectiveTerm("Y", 1.0, MAX),))
    plan = select_methods(data, model.graph, objective, ["T1", "T2"])
    assert "T2" not in plan.assignments


def test_select_max_active_one_degenerates_to_single_method():
    model = _two_method_scm()
    data = sample(model, 5000, seed=6)
    plan = select_methods(data, model.graph, _objective(), ["T1", "T2"], max_active=1)
    assert len(plan.assignments) <= 1


def test_select_tie_prefers_fewer_methods():
    # metric ignores both methods: every assignment scores ~0, baseline wins
    model = make_scm(
        {"T1": INT, "T2": INT, "Y": OBS},
        {"Y": ({}, 0.5)},
        signs={"Y": MAX},
    )
    data = sample(model, 3000, seed=7)
    objective = Objective(terms=(ObjectiveTerm("Y", 1.0, MAX),))
    plan = select_methods(data, model.graph, objective, ["T1", "T2"])
    assert plan.assignments == {}


def test_objective_scale_invariance_with_default_normalization():
    model = _two_method_scm()
    data = sample(model, 4000, seed=8)
    objective = Objective(
        terms=(ObjectiveTerm("P", 1.0, MAX), ObjectiveTerm("F", 0.5, MAX))
    )
    plan1 = select_methods(data, model.graph, objective, ["T1", "T2"], grid_step=0.25)
    scaled = data.data.copy()
    scaled[:, list(data.names).index("P")] *= 37.0
    data2 = ObservationMatrix(data.variables, scaled)
    plan2 = select_methods(data2, model.graph, objective, ["T1", "T2"], grid_step=0.25)
    assert plan1.assignments == plan2.assignments
    assert plan1.objective_value == pytest.approx(plan2.objective_value, rel=1e-9)


def test_select_grid_step_validation():
    model = _two_method_scm()
    data = sample(model, 3000, seed=9)
    with pytest.raises(SchemaError):
        select_methods(data, model.graph, _objective(), ["T1"], grid_step=0.0)
    with pytest.raises(SchemaError):
        select_methods(data, model.graph, _objective(), ["T1"], max_active=0)
