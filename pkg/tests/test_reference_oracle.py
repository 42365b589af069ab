from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import LINEAR_EH
from xlmimo_swipt import reference_oracle
from xlmimo_swipt.errors import InvalidInputError
from xlmimo_swipt.geometry import build_array
from xlmimo_swipt.metrics import satisfies_floors
from xlmimo_swipt.orchestrator import Scenario, run_pa_fa
from xlmimo_swipt.printer import Printer
from xlmimo_swipt.reference_oracle import enumerate_sa, grid_pa
from xlmimo_swipt.structs import ActivationState, AdmmConfig, QoSThresholds


def two_user_scenario(make_tables, make_power, rate: float) -> Scenario:
    coupling = np.sqrt([[[0.05, 0.005], [0.01, 0.2]]])
    return Scenario(
        geometry=build_array(1, 2, 2, 0.1, 0.025, 0.05),
        users=(),
        tables=make_tables(coupling, n_id=1, noise=0.01),
        thresholds=QoSThresholds(
            rate_floor=np.array([rate]), energy_floor=np.array([0.1])
        ),
        power=make_power(1, 4.0),
        eh=LINEAR_EH,
        admm=AdmmConfig(),
        delta=1e-7,
        seed=0,
    )


def test_enumeration_covers_every_activation(scenario_factory):
    scenario = scenario_factory(subarrays=3, seed=17)
    result = enumerate_sa(scenario)
    assert result.evaluated == 7
    assert len({c.activation for c in result.candidates}) == 7
    assert all(any(c.activation) for c in result.candidates)

    assert result.status == "feasible"
    feasible = [c.p_c for c in result.candidates if c.feasible]
    assert result.best_pc == min(feasible)

    act = ActivationState.from_binary(result.best_activation)
    assert satisfies_floors(
        result.best_allocation, act, scenario.tables, scenario.thresholds, scenario.eh
    )


def test_enumeration_bounds_full_activation(scenario_factory):
    scenario = scenario_factory(subarrays=3, seed=18)
    pa_fa = run_pa_fa(scenario)
    if pa_fa.status != "infeasible":
        assert enumerate_sa(scenario).best_pc <= pa_fa.p_c + 1e-9


def test_failed_solves_are_listed_as_infeasible(scenario_factory, monkeypatch):
    scenario = scenario_factory(subarrays=3, seed=17)
    solve = reference_oracle.solve_allocation

    def failing_without_first(scenario, weights, initial=None):
        if weights[0] == 0:
            return None
        return solve(scenario, weights, initial)

    monkeypatch.setattr(reference_oracle, "solve_allocation", failing_without_first)
    result = enumerate_sa(scenario)
    assert result.evaluated == 7
    failed = [c for c in result.candidates if not c.activation[0]]
    assert len(failed) == 3
    assert all(c.p_c == math.inf and not c.feasible for c in failed)
    if result.best_activation is not None:
        assert result.best_activation[0]


def test_two_subarray_enumeration_completes(scenario_factory):
    result = enumerate_sa(scenario_factory(subarrays=2, seed=3))
    assert result.evaluated == 3
    assert all(math.isfinite(c.p_c) for c in result.candidates if c.feasible)


def test_enumeration_limit(scenario_factory):
    with pytest.raises(InvalidInputError):
        enumerate_sa(scenario_factory(subarrays=11))


def test_candidate_listing(scenario_factory):
    result = enumerate_sa(scenario_factory(subarrays=2, seed=3))
    lines = Printer().print_oracle_candidates(result)
    assert lines[0] == "activation,p_c_w,feasible,best"
    assert [line.split(",")[0] for line in lines[1:]] == ["01", "10", "11"]
    assert sum(line.endswith(",1") for line in lines[1:]) == 1


def test_grid_visits_totals_in_order(make_tables, make_power):
    result = grid_pa(two_user_scenario(make_tables, make_power, 1.0), 40)
    assert result.status == "feasible"
    omega = result.best_allocation.matrix()[0]
    # rate 1 bit: 0.05 Omega_0 >= 0.005 Omega_1 + 0.01
    assert 0.05 * omega[0] >= 0.005 * omega[1] + 0.01 - 1e-9
    assert result.best_pc == pytest.approx(omega.sum() / 0.35 + 0.1 + 4 * 0.0482)


def test_grid_without_feasible_point(make_tables, make_power):
    result = grid_pa(two_user_scenario(make_tables, make_power, 12.0), 20)
    assert result.status == "oracle-infeasible"
    assert result.best_pc == math.inf
    assert result.best_allocation is None
    # grid points within the per-subarray budget
    assert result.evaluated == 21 * 22 // 2


def test_grid_limits(make_tables, make_power, scenario_factory):
    scenario = two_user_scenario(make_tables, make_power, 1.0)
    with pytest.raises(InvalidInputError):
        grid_pa(scenario, 0)
    with pytest.raises(InvalidInputError):
        grid_pa(scenario_factory(subarrays=2), 10)
