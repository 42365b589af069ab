from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import expit, logit

from xlmimo_swipt.errors import (
    InfeasibleThresholdError,
    InternalConsistencyError,
    InvalidInputError,
)
from xlmimo_swipt.structs import (
    ActivationState,
    ArrayGeometry,
    EHModelParams,
    GainTables,
    PowerAllocation,
    PowerModelParams,
    QoSThresholds,
)

_IMAGINARY_RESIDUE = 1e-9


def rate_components(
    l: int,
    pa: PowerAllocation,
    act: ActivationState,
    tables: GainTables,
    scaled: bool = False,
) -> tuple[float, float]:
    """Useful signal and interference-plus-noise power of ID user `l`."""
    weights = act.weights(scaled)
    received = weights @ (pa.matrix() * tables.direct[:, l, :])
    signal = float(received[l])
    interference = float(received.sum() - received[l])
    return signal, interference + float(tables.noise_power[l])


def downlink_rate(
    l: int,
    pa: PowerAllocation,
    act: ActivationState,
    tables: GainTables,
    scaled: bool = False,
) -> float:
    signal, interference = rate_components(l, pa, act, tables, scaled)
    return math.log2(1 + signal / interference)


def input_energy(
    m: int,
    pa: PowerAllocation,
    act: ActivationState,
    tables: GainTables,
    scaled: bool = False,
) -> float:
    """RF energy reaching EH user `m` (0-based among EH users)."""
    amplitudes = act.weights(scaled)[:, None] * np.sqrt(pa.matrix())
    total = np.einsum(
        "sj,tj,stj->", amplitudes, amplitudes, tables.upsilon[:, :, m, :]
    )
    if abs(total.imag) > _IMAGINARY_RESIDUE * max(1.0, abs(total.real)):
        raise InternalConsistencyError("input energy", abs(total.imag))
    return max(float(total.real), 0.0)


def eh_forward(x, params: EHModelParams):
    psi = params.zeta_max * expit(params.a * (np.asarray(x) - params.b))
    result = (psi - params.zeta_max * params.phi) / (1 - params.phi)
    return float(result) if np.ndim(result) == 0 else result


def eh_inverse(y: float, params: EHModelParams) -> float:
    if y >= params.zeta_max:
        raise InfeasibleThresholdError(y, params.zeta_max)
    if y < 0:
        raise InvalidInputError(f"harvested power must be nonnegative, got {y}")
    shifted = (1 - params.phi) * y + params.zeta_max * params.phi
    return float(params.b + logit(shifted / params.zeta_max) / params.a)


def transmit_power(pa: PowerAllocation, act: ActivationState) -> float:
    return float(pa.row_sums @ act.binary.astype(float))


def power_consumption(
    pa: PowerAllocation,
    act: ActivationState,
    params: PowerModelParams,
    elements: int | None = None,
) -> float:
    elements = params.elements if elements is None else elements
    per_subarray = (
        pa.row_sums / params.efficiency + 2 * params.p_syn + elements * params.p_ct
    )
    return float(per_subarray @ act.binary.astype(float))


def xi_constant(rate: float) -> float:
    if rate <= 0:
        return math.inf
    return (2**rate - 1) ** -0.5


def lambda_constant(threshold: float, params: EHModelParams) -> float:
    return math.sqrt(max(eh_inverse(threshold, params), 0.0))


def achieved_qos(
    pa: PowerAllocation,
    act: ActivationState,
    tables: GainTables,
    eh: EHModelParams,
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    rates = tuple(downlink_rate(l, pa, act, tables) for l in range(tables.n_id))
    harvested = tuple(
        eh_forward(input_energy(m, pa, act, tables), eh)
        for m in range(tables.n_eh)
    )
    return rates, harvested


def meets_qos(
    rates: Sequence[float],
    harvested: Sequence[float],
    thresholds: QoSThresholds,
    eh: EHModelParams,
    rate_tolerance: float = 1e-4,
    energy_tolerance: float = 1e-4,
    inputs: Sequence[float] | None = None,
) -> bool:
    """Whether achieved QoS clears the floors.

    With RF `inputs` and an `input_floor` the energy check runs on the RF
    side, where a saturated harvester no longer hides a shortfall.
    """
    rate_ok = np.all(np.asarray(rates) >= thresholds.rate_floor - rate_tolerance)
    if inputs is not None and thresholds.input_floor is not None:
        energy_ok = np.all(
            np.asarray(inputs) >= thresholds.input_floor * (1 - energy_tolerance)
        )
    else:
        energy_ok = np.all(
            np.asarray(harvested)
            >= thresholds.energy_floor - energy_tolerance * eh.zeta_max
        )
    return bool(rate_ok and energy_ok)


def satisfies_floors(
    pa: PowerAllocation,
    act: ActivationState,
    tables: GainTables,
    thresholds: QoSThresholds,
    eh: EHModelParams,
) -> bool:
    rates, harvested = achieved_qos(pa, act, tables, eh)
    inputs = [input_energy(m, pa, act, tables) for m in range(tables.n_eh)]
    return meets_qos(rates, harvested, thresholds, eh, inputs=inputs)


def compute_thresholds(
    tables: GainTables,
    geom: ArrayGeometry,
    power: PowerModelParams,
    eh: EHModelParams,
) -> QoSThresholds:
    """QoS floors achieved by the equal allocation with every subarray on."""
    if geom.subarrays != tables.n_subarrays:
        raise InvalidInputError("gain tables and geometry disagree on S")
    pa = PowerAllocation.equal(geom.subarrays, tables.n_id, tables.n_eh, power.p_s)
    act = ActivationState.full(geom.subarrays)
    rates, harvested = achieved_qos(pa, act, tables, eh)
    inputs = [input_energy(m, pa, act, tables) for m in range(tables.n_eh)]
    return QoSThresholds(
        rate_floor=np.array(rates, dtype=float),
        energy_floor=np.array(harvested, dtype=float),
        input_floor=np.array(inputs, dtype=float),
    )
