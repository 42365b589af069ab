"""Brute-force verifiers for tiny instances.

Feasibility is judged through `xlmimo_swipt.metrics` only; solver internals
never enter the verdict.
"""

from __future__ import annotations

import itertools
import math
from logging import getLogger

import numpy as np

from xlmimo_swipt.errors import InvalidInputError
from xlmimo_swipt.metrics import power_consumption, satisfies_floors
from xlmimo_swipt.orchestrator import Scenario, solve_allocation
from xlmimo_swipt.structs import (
    ActivationState,
    OracleCandidate,
    OracleResult,
    PowerAllocation,
)
from xlmimo_swipt.typing_ext import BoolArray

logger = getLogger("xlmimo_swipt")

MAX_ENUMERATED_SUBARRAYS = 10
MAX_GRID_VARIABLES = 4
MAX_GRID_POINTS = 20_000_000


def _meets_floors(
    scenario: Scenario, pa: PowerAllocation, act: ActivationState
) -> bool:
    return satisfies_floors(pa, act, scenario.tables, scenario.thresholds, scenario.eh)


def enumerate_sa(scenario: Scenario) -> OracleResult:
    """Solve the allocation for every nonempty activation and keep the best.

    A solve that diverges or cannot start lists its activation as infeasible
    at infinite consumption.
    """
    n_sub = scenario.subarrays
    if n_sub > MAX_ENUMERATED_SUBARRAYS:
        raise InvalidInputError(
            f"activation enumeration is limited to {MAX_ENUMERATED_SUBARRAYS} "
            f"subarrays, got {n_sub}"
        )

    candidates: list[OracleCandidate] = []
    best: tuple[float, tuple[bool, ...], PowerAllocation] | None = None
    for pattern in itertools.product((False, True), repeat=n_sub):
        if not any(pattern):
            continue
        binary = np.array(pattern, dtype=bool)
        result = solve_allocation(scenario, binary.astype(float))
        if result is None:
            candidates.append(OracleCandidate(pattern, math.inf, False))
            continue
        act = ActivationState.from_binary(binary)
        p_c = power_consumption(result.allocation, act, scenario.power)
        feasible = _meets_floors(scenario, result.allocation, act)
        candidates.append(OracleCandidate(pattern, p_c, feasible))
        if feasible and (best is None or p_c < best[0]):
            best = (p_c, pattern, result.allocation)

    if best is None:
        logger.warning(f"No activation out of {len(candidates)} is feasible")
        return OracleResult(
            best_pc=math.inf,
            best_activation=None,
            best_allocation=None,
            evaluated=len(candidates),
            status="oracle-infeasible",
            candidates=tuple(candidates),
        )
    return OracleResult(
        best_pc=best[0],
        best_activation=best[1],
        best_allocation=best[2],
        evaluated=len(candidates),
        status="feasible",
        candidates=tuple(candidates),
    )


def grid_pa(
    scenario: Scenario, resolution: int, activation: BoolArray | None = None
) -> OracleResult:
    """Exhaustive grid over [0, P_s] for every power variable.

    With a fixed activation the consumption only depends on the total
    allocated power, so grid points are visited in increasing total and the
    first feasible one is optimal.
    """
    tables = scenario.tables
    n_sub, n_users = scenario.subarrays, tables.n_users
    n_vars = n_sub * n_users
    if n_vars > MAX_GRID_VARIABLES:
        raise InvalidInputError(
            f"grid search is limited to {MAX_GRID_VARIABLES} power variables, "
            f"got {n_vars}"
        )
    if resolution < 1 or (resolution + 1) ** n_vars > MAX_GRID_POINTS:
        raise InvalidInputError(f"unsupported grid resolution {resolution}")

    binary = (
        np.ones(n_sub, dtype=bool)
        if activation is None
        else np.asarray(activation, dtype=bool)
    )
    act = ActivationState.from_binary(binary)
    p_s = scenario.power.p_s
    levels = np.linspace(0.0, p_s, resolution + 1)

    axes = np.meshgrid(*[levels] * n_vars, indexing="ij")
    points = np.stack([axis.ravel() for axis in axes], axis=1)
    # inactive subarrays carry no power
    inactive = np.repeat(~binary, n_users)
    points = points[~np.any(points[:, inactive] > 0, axis=1)]
    row_sums = points.reshape(-1, n_sub, n_users).sum(axis=2)
    points = points[np.all(row_sums <= p_s * (1 + 1e-12), axis=1)]
    order = np.argsort(points.sum(axis=1), kind="stable")

    for evaluated, index in enumerate(order, start=1):
        pa = PowerAllocation.from_matrix(
            points[index].reshape(n_sub, n_users), tables.n_id
        )
        if _meets_floors(scenario, pa, act):
            return OracleResult(
                best_pc=power_consumption(pa, act, scenario.power),
                best_activation=tuple(bool(a) for a in binary),
                best_allocation=pa,
                evaluated=evaluated,
                status="feasible",
            )
    return OracleResult(
        best_pc=math.inf,
        best_activation=None,
        best_allocation=None,
        evaluated=len(order),
        status="oracle-infeasible",
    )
