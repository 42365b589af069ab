"""
Performance metrics.

 Group 1 - closed forms: rate, input energy, P_C and P_TX against hand values
 Group 2 - nonlinear EH model: zero response, monotonicity, saturation,
           inverse round trip
 Group 3 - constraint equivalences on random allocations
 Group 4 - equal-allocation thresholds
 Group 5 - QoS checks in the harvested and RF domains
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import LINEAR_EH, DEFAULT_EH, default_power
from xlmimo_swipt.errors import InfeasibleThresholdError, InternalConsistencyError
from xlmimo_swipt.geometry import build_array
from xlmimo_swipt.metrics import (
    compute_thresholds,
    downlink_rate,
    eh_forward,
    eh_inverse,
    input_energy,
    lambda_constant,
    meets_qos,
    power_consumption,
    rate_components,
    satisfies_floors,
    transmit_power,
    xi_constant,
)
from xlmimo_swipt.structs import ActivationState, PowerAllocation, QoSThresholds

# --- Group 1 ---------------------------------------------------------------


def random_instance(make_tables, seed: int, subarrays=2, n_id=1, n_eh=2):
    rng = np.random.default_rng(seed)
    k = n_id + n_eh
    coupling = rng.normal(size=(subarrays, k, k)) + 1j * rng.normal(
        size=(subarrays, k, k)
    )
    tables = make_tables(coupling, n_id, noise=0.05)
    pa = PowerAllocation.from_matrix(rng.uniform(0, 1, size=(subarrays, k)), n_id)
    return tables, pa


def test_zero_allocation(make_tables):
    tables, _ = random_instance(make_tables, 0)
    pa = PowerAllocation.from_matrix(np.zeros((2, 3)), 1)
    act = ActivationState.full(2)
    assert downlink_rate(0, pa, act, tables) == 0.0
    assert input_energy(0, pa, act, tables) == 0.0
    assert transmit_power(pa, act) == 0.0


def test_interference_free_rate(make_tables):
    tables = make_tables([[[0.3]]], n_id=1, noise=0.02)
    pa = PowerAllocation.from_matrix(np.array([[0.5]]), 1)
    rate = downlink_rate(0, pa, ActivationState.full(1), tables)
    # couplings are amplitudes: the power gain is 0.3 ** 2
    assert rate == pytest.approx(math.log2(1 + 0.5 * 0.09 / 0.02))


def test_rate_matches_raw_sums(make_tables):
    tables, pa = random_instance(make_tables, 1, subarrays=2, n_id=2, n_eh=1)
    act = ActivationState.full(2)
    omega = pa.matrix()
    for l in range(2):
        signal = sum(omega[s, l] * abs(tables.coupling[s, l, l]) ** 2 for s in range(2))
        rest = sum(
            omega[s, j] * abs(tables.coupling[s, l, j]) ** 2
            for s in range(2)
            for j in range(3)
            if j != l
        )
        expected = math.log2(1 + signal / (rest + 0.05))
        assert downlink_rate(l, pa, act, tables) == pytest.approx(expected)


def test_rate_monotonicity(make_tables):
    tables, pa = random_instance(make_tables, 2, subarrays=2, n_id=2, n_eh=1)
    act = ActivationState.full(2)
    base = downlink_rate(0, pa, act, tables)
    more_own = pa.matrix()
    more_own[0, 0] += 0.3
    more_other = pa.matrix()
    more_other[1, 1] += 0.3
    own = PowerAllocation.from_matrix(more_own, 2)
    other = PowerAllocation.from_matrix(more_other, 2)
    assert downlink_rate(0, own, act, tables) >= base
    assert downlink_rate(0, other, act, tables) <= base


def test_single_subarray_energy(make_tables):
    tables, pa = random_instance(make_tables, 3, subarrays=1, n_id=1, n_eh=1)
    act = ActivationState.full(1)
    expected = sum(pa.matrix()[0, j] * tables.direct[0, 1, j] for j in range(2))
    assert input_energy(0, pa, act, tables) == pytest.approx(expected)


def test_coherent_energy(make_tables):
    tables, pa = random_instance(make_tables, 4, subarrays=2, n_id=1, n_eh=1)
    act = ActivationState.full(2)
    amplitudes = np.sqrt(pa.matrix())
    expected = sum(
        abs(sum(amplitudes[s, j] * tables.coupling[s, 1, j] for s in range(2))) ** 2
        for j in range(2)
    )
    assert input_energy(0, pa, act, tables) == pytest.approx(expected)


def test_deactivated_subarray_is_ignored(make_tables):
    tables, pa = random_instance(make_tables, 5, subarrays=2, n_id=1, n_eh=1)
    one = ActivationState.from_binary([True, False])
    alone = PowerAllocation.from_matrix(pa.matrix()[:1], 1)
    single = make_tables(tables.coupling[:1], 1, noise=0.05)
    assert input_energy(0, pa, one, tables) == pytest.approx(
        input_energy(0, alone, ActivationState.full(1), single)
    )


def test_imaginary_residue_is_rejected(make_tables):
    tables, pa = random_instance(make_tables, 6)
    broken = tables.upsilon.copy()
    broken[0, 1, 0, 0] += 1j
    corrupted = type(tables)(
        channels=tables.channels,
        coupling=tables.coupling,
        direct=tables.direct,
        upsilon=broken,
        noise_power=tables.noise_power,
        n_id=tables.n_id,
        n_eh=tables.n_eh,
    )
    with pytest.raises(InternalConsistencyError):
        input_energy(0, pa, ActivationState.full(2), corrupted)


@pytest.mark.parametrize(
    "subarrays, p_c, p_tx",
    [(1, 34.38205714, 7.68), (4, 137.5282286, 30.72), (8, 275.0564571, 61.44)],
)
def test_equal_allocation_power(subarrays, p_c, p_tx):
    power = default_power(subarrays)
    pa = PowerAllocation.equal(subarrays, 3, 2, power.p_s)
    act = ActivationState.full(subarrays)
    assert power_consumption(pa, act, power) == pytest.approx(p_c, rel=1e-9)
    assert transmit_power(pa, act) == pytest.approx(p_tx, rel=1e-12)


def test_power_consumption_of_idle_subarrays():
    power = default_power(2)
    pa = PowerAllocation.equal(2, 1, 1, power.p_s)
    act = ActivationState.from_binary([True, False])
    expected = power.p_s / 0.35 + 2 * 0.05 + 256 * 0.0482
    assert power_consumption(pa, act, power) == pytest.approx(expected)


# --- Group 2 ---------------------------------------------------------------


def test_eh_zero_response():
    assert eh_forward(0.0, DEFAULT_EH) == pytest.approx(0.0, abs=1e-18)
    assert eh_inverse(0.0, DEFAULT_EH) == pytest.approx(0.0, abs=1e-15)


def test_eh_midpoint():
    phi = 1 / (1 + math.exp(3.3))
    expected = (0.012 - 0.024 * phi) / (1 - phi)
    assert eh_forward(0.0022, DEFAULT_EH) == pytest.approx(expected, rel=1e-12)
    assert eh_forward(0.0022, DEFAULT_EH) == pytest.approx(0.011557, rel=1e-4)
    assert eh_inverse(expected, DEFAULT_EH) == pytest.approx(0.0022, rel=1e-12)


def test_eh_monotone_and_saturating():
    x = np.geomspace(1e-6, 1e-2, 500)
    y = eh_forward(x, DEFAULT_EH)
    assert np.all(np.diff(y) > 0)
    assert np.all(y < DEFAULT_EH.zeta_max)
    assert eh_forward(10.0, DEFAULT_EH) == pytest.approx(DEFAULT_EH.zeta_max)


def test_eh_inverse_round_trip():
    for y in np.geomspace(1e-7, 0.99 * DEFAULT_EH.zeta_max, 60):
        x = eh_inverse(float(y), DEFAULT_EH)
        assert x >= 0
        assert eh_forward(x, DEFAULT_EH) == pytest.approx(y, rel=1e-9)


def test_eh_inverse_saturation():
    with pytest.raises(InfeasibleThresholdError):
        eh_inverse(DEFAULT_EH.zeta_max, DEFAULT_EH)
    with pytest.raises(InfeasibleThresholdError):
        lambda_constant(0.03, DEFAULT_EH)


def test_constants():
    assert xi_constant(1.0) == pytest.approx(1.0)
    assert xi_constant(3.0) == pytest.approx(1 / math.sqrt(7))
    assert xi_constant(0.0) == math.inf
    assert lambda_constant(0.0, DEFAULT_EH) == pytest.approx(0.0, abs=1e-7)


# --- Group 3 ---------------------------------------------------------------


def test_rate_constraint_equivalence(make_tables):
    rng = np.random.default_rng(21)
    for trial in range(1000):
        tables, pa = random_instance(make_tables, 1000 + trial, n_id=2, n_eh=1)
        act = ActivationState.full(2)
        threshold = rng.uniform(0.1, 4.0)
        signal, interference = rate_components(0, pa, act, tables)
        by_rate = downlink_rate(0, pa, act, tables) >= threshold
        by_power = interference <= xi_constant(threshold) ** 2 * signal
        assert by_rate == by_power


def test_energy_constraint_equivalence(make_tables):
    rng = np.random.default_rng(22)
    for trial in range(1000):
        tables, pa = random_instance(make_tables, 3000 + trial)
        act = ActivationState.full(2)
        threshold = rng.uniform(0.01, 0.95) * LINEAR_EH.zeta_max
        energy = input_energy(0, pa, act, tables)
        by_output = eh_forward(energy, LINEAR_EH) >= threshold
        by_input = energy >= lambda_constant(threshold, LINEAR_EH) ** 2
        if abs(eh_forward(energy, LINEAR_EH) - threshold) > 1e-12:
            assert by_output == by_input


# --- Group 4 ---------------------------------------------------------------


def test_thresholds_from_equal_allocation(make_tables):
    tables = make_tables([[[0.4, 0.1], [0.05, 0.3]]], n_id=1, noise=0.02)
    geom = build_array(1, 2, 2, 0.1, 0.025, 0.05)
    power = default_power(1, elements=4, p_et=0.5)
    thresholds = compute_thresholds(tables, geom, power, LINEAR_EH)
    share = power.p_s / 2
    expected_rate = math.log2(1 + share * 0.16 / (0.02 + share * 0.01))
    assert thresholds.rate_floor[0] == pytest.approx(expected_rate)
    assert thresholds.input_floor[0] == pytest.approx(share * (0.05**2 + 0.3**2))
    assert thresholds.energy_floor[0] == pytest.approx(
        eh_forward(share * (0.05**2 + 0.3**2), LINEAR_EH)
    )


def test_mirror_users_share_floors(make_tables):
    coupling = np.array([[[0.4, 0.1, 0.2], [0.1, 0.4, 0.2], [0.3, 0.3, 0.5]]])
    tables = make_tables(coupling, n_id=2, noise=0.02)
    geom = build_array(1, 2, 2, 0.1, 0.025, 0.05)
    thresholds = compute_thresholds(tables, geom, default_power(1, 4), LINEAR_EH)
    assert thresholds.rate_floor[0] == pytest.approx(thresholds.rate_floor[1])


# --- Group 5 ---------------------------------------------------------------


def test_saturated_floor_is_judged_on_the_input():
    floors = QoSThresholds(
        rate_floor=np.array([1.0]),
        energy_floor=np.array([DEFAULT_EH.zeta_max]),
        input_floor=np.array([0.04]),
    )
    # 30 mW of input already saturates the harvester
    harvested = [float(eh_forward(0.03, DEFAULT_EH))]
    assert harvested[0] == pytest.approx(DEFAULT_EH.zeta_max, rel=1e-12)
    assert meets_qos([1.0], harvested, floors, DEFAULT_EH)
    assert not meets_qos([1.0], harvested, floors, DEFAULT_EH, inputs=[0.03])
    assert meets_qos([1.0], harvested, floors, DEFAULT_EH, inputs=[0.04 * 0.99995])
    assert not meets_qos([0.9], harvested, floors, DEFAULT_EH, inputs=[0.05])


def test_satisfies_floors(make_tables):
    tables = make_tables([[[math.sqrt(0.2)]]], n_id=0)
    pa = PowerAllocation.from_matrix(np.array([[0.015]]), 0)
    act = ActivationState.full(1)
    assert input_energy(0, pa, act, tables) == pytest.approx(0.003)

    def floors(input_floor):
        return QoSThresholds(
            rate_floor=np.zeros(0),
            energy_floor=np.array([DEFAULT_EH.zeta_max]),
            input_floor=np.array([input_floor]),
        )

    assert satisfies_floors(pa, act, tables, floors(0.003), DEFAULT_EH)
    assert not satisfies_floors(pa, act, tables, floors(0.004), DEFAULT_EH)
