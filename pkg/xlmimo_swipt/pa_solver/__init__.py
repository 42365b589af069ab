from __future__ import annotations

from logging import getLogger

import numpy as np

from xlmimo_swipt.errors import InfeasibleThresholdError, InvalidInputError
from xlmimo_swipt.pa_solver.cone import in_cone, project_blocks, soc_project
from xlmimo_swipt.pa_solver.interface import IPowerSolver
from xlmimo_swipt.pa_solver.mixins.admm import (
    AdmmLoop,
    BaseSolver,
    DouglasRachfordUpdates,
)
from xlmimo_swipt.pa_solver.mixins.monitors import (
    BalanceResiduals,
    DetectDivergence,
    LogProgress,
)
from xlmimo_swipt.pa_solver.mixins.polish import RestoreFeasibility
from xlmimo_swipt.pa_solver.system import (
    ConstraintSystem,
    assemble_residuals,
    build_constraint_system,
)
from xlmimo_swipt.pa_solver.warm_start import kkt_start
from xlmimo_swipt.structs import (
    AdmmConfig,
    AdmmState,
    EHModelParams,
    GainTables,
    PAResult,
    PowerAllocation,
    PowerModelParams,
    QoSThresholds,
    Status,
    TraceRow,
)
from xlmimo_swipt.typing_ext import FloatArray

__all__ = [
    "ConstraintSystem",
    "IPowerSolver",
    "admm_iterate",
    "assemble_residuals",
    "build_constraint_system",
    "in_cone",
    "kkt_start",
    "project_blocks",
    "soc_project",
    "solve_pa",
    "solver_from_config",
]

logger = getLogger("xlmimo_swipt")


def solver_from_config(config: AdmmConfig) -> IPowerSolver:
    monitors: list[type] = [
        LogProgress,
        *([BalanceResiduals] if config.adaptive_penalty else []),
        DetectDivergence,
    ]

    class PowerSolver(
        *monitors,  # type: ignore[misc]
        *([RestoreFeasibility] if config.polish_steps > 0 else []),
        AdmmLoop,
        DouglasRachfordUpdates,
        BaseSolver,
    ):
        pass

    solver = PowerSolver()
    solver.set_config(config)
    return solver


def admm_iterate(
    state: AdmmState, system: ConstraintSystem, config: AdmmConfig
) -> AdmmState:
    return solver_from_config(config).iterate(state, system)


def solve_pa(
    activation: FloatArray,
    tables: GainTables,
    thresholds: QoSThresholds,
    power: PowerModelParams,
    eh: EHModelParams,
    config: AdmmConfig = AdmmConfig(),
    initial: PowerAllocation | None = None,
) -> PAResult:
    """Minimum-consumption allocation for a fixed (scaled) activation.

    `initial` warm-starts the iterate; it defaults to the equal split of
    P_s over the users of every supported subarray. With `warm_start` on,
    the ADMM starts from a polished KKT point and a problem whose starting
    search finds no feasible point is reported infeasible without iterating.
    """
    activation = np.asarray(activation, dtype=float)
    if activation.shape != (tables.n_subarrays,) or np.any(activation < 0):
        raise InvalidInputError(
            f"activation must hold {tables.n_subarrays} nonnegative weights"
        )
    if thresholds.input_floor is None:
        # floors given in the harvested domain go through the EH inverse
        for threshold in thresholds.energy_floor:
            if threshold >= eh.zeta_max:
                raise InfeasibleThresholdError(float(threshold), eh.zeta_max)

    system = build_constraint_system(activation, tables, thresholds, power, eh)
    if initial is None:
        x0 = system.reference_point()
    else:
        x0 = initial.matrix() / power.p_s

    solver = solver_from_config(config)
    tolerance = config.feasibility_tol
    multipliers = None
    if config.warm_start:
        warm = kkt_start(system, x0, tolerance)
        if not warm.feasible:
            logger.debug(
                f"No feasible starting point, violation {warm.violation:.3g}"
            )
            return _result(system, warm.x, [], "infeasible", 0, power, tables)
        x0, multipliers = warm.x, warm.multipliers

    state = solver.initial_state(system, x0, multipliers)
    start = state.x.copy()
    state, converged = solver.solve(state, system)
    solver.finalize(state, system)

    x = state.x
    feasible = system.violation(x) <= tolerance
    if system.violation(start) <= tolerance and (
        not feasible or system.objective(start) < system.objective(x)
    ):
        x, feasible, converged = start, True, converged and feasible

    status: Status
    if not feasible:
        status = "infeasible"
    elif converged:
        status = "converged"
    else:
        status = "max_iterations"
    logger.debug(
        f"PA solve finished after {state.iteration} iterations: {status}, "
        f"P_C = {system.objective(x):.9g} W"
    )
    return _result(system, x, state.trace, status, state.iteration, power, tables)


def _result(
    system: ConstraintSystem,
    x: FloatArray,
    trace: list[TraceRow],
    status: Status,
    iterations: int,
    power: PowerModelParams,
    tables: GainTables,
) -> PAResult:
    allocation = PowerAllocation.from_matrix(system.project(x) * power.p_s, tables.n_id)
    allocation.check_budget(power.p_s, power.p_t, tolerance=1e-9 * power.p_s)
    return PAResult(
        allocation=allocation,
        trace=trace,
        status=status,
        iterations=iterations,
    )
