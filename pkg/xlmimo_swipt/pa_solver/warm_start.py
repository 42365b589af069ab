"""KKT starting points for the ADMM.

A sequential least-squares QP over the amplitudes u = sqrt(Omega / P_s)
finds a local minimum of the consumption. In u every residual row is a
polynomial, so the square roots inside the energy rows never sit at a kink.
Nonnegative least squares recovers the row multipliers and Newton steps on
the binding KKT equations polish both. A primal-dual optimum is a fixed
point of the ADMM iteration, which then only has to confirm it.
"""

from __future__ import annotations

from logging import getLogger

import numpy as np
from scipy.optimize import minimize, nnls

from xlmimo_swipt.pa_solver.system import AMPLITUDE_FLOOR, ConstraintSystem
from xlmimo_swipt.structs import WarmStart
from xlmimo_swipt.typing_ext import FloatArray, IntArray

logger = getLogger("xlmimo_swipt")

_SQP_TOLERANCE = 1e-14
_SQP_ITERATIONS = 300
# scaled slack below which a row counts as binding
_ACTIVE_SLACK = 1e-6
_NEWTON_STEPS = 20
_NEWTON_TOLERANCE = 1e-13
_NEWTON_ACCEPT = 1e-10


def _starts(system: ConstraintSystem, x0: FloatArray) -> list[FloatArray]:
    """`x0`, `x0` stretched to the full per-subarray budget, the equal split."""
    x0 = system.project(np.asarray(x0, dtype=float))
    starts = [x0]
    rows = x0.sum(axis=1, keepdims=True)
    if np.all(rows[system.support] > 0):
        starts.append(np.divide(x0, rows, out=np.zeros_like(x0), where=rows > 0))
    starts.append(system.reference_point())

    unique: list[FloatArray] = []
    for start in starts:
        if not any(np.allclose(start, other) for other in unique):
            unique.append(start)
    return unique


def sqp_point(system: ConstraintSystem, x0: FloatArray) -> FloatArray:
    """Local minimum of the consumption from `x0`, solved in amplitudes."""
    columns = np.nonzero(system.variables)[0]
    rows = system.live_rows
    weights = system.objective_gradient[columns]
    constants = system.scaled_constants[rows]

    def embed(v: FloatArray) -> FloatArray:
        u = np.zeros(system.variables.size)
        u[columns] = v
        return u.reshape(system.shape)

    def objective(v: FloatArray) -> tuple[float, FloatArray]:
        return float(weights @ v**2), 2 * weights * v

    def slack(v: FloatArray) -> FloatArray:
        return constants - system.scaled_values(embed(v) ** 2)[rows]

    def slack_jacobian(v: FloatArray) -> FloatArray:
        return -system.amplitude_jacobian(embed(v))[np.ix_(rows, columns)]

    result = minimize(
        objective,
        np.sqrt(np.clip(x0.ravel()[columns], 0.0, 1.0)),
        jac=True,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * columns.size,
        constraints=[{"type": "ineq", "fun": slack, "jac": slack_jacobian}],
        options={"ftol": _SQP_TOLERANCE, "maxiter": _SQP_ITERATIONS},
    )
    logger.debug(f"SQP start finished after {result.nit} steps: {result.message}")
    return system.project(embed(np.clip(result.x, 0.0, 1.0)) ** 2)


def _free_entries(system: ConstraintSystem, x: FloatArray) -> IntArray:
    return np.nonzero(system.variables & (x.ravel() > AMPLITUDE_FLOOR))[0]


def _active_rows(system: ConstraintSystem, x: FloatArray) -> IntArray:
    slack = system.scaled_constants - system.scaled_values(x)
    return np.nonzero(system.live_rows & (slack <= _ACTIVE_SLACK))[0]


def row_multipliers(
    system: ConstraintSystem, x: FloatArray, active: IntArray, free: IntArray
) -> FloatArray:
    """Nonnegative row multipliers closest to stationarity on the free entries."""
    multipliers = np.zeros(system.n_rows)
    if active.size == 0 or free.size == 0:
        return multipliers
    jacobian = system.scaled_jacobian(x)[np.ix_(active, free)]
    values, _ = nnls(jacobian.T, -system.objective_gradient[free])
    multipliers[active] = values
    return multipliers


def _kkt_residual(
    system: ConstraintSystem,
    u: FloatArray,
    multipliers: FloatArray,
    active: IntArray,
    free: IntArray,
) -> tuple[FloatArray, FloatArray]:
    amplitudes = u.reshape(system.shape)
    jacobian = system.amplitude_jacobian(amplitudes)[np.ix_(active, free)]
    stationarity = (
        2 * system.objective_gradient[free] * u[free]
        + jacobian.T @ multipliers[active]
    )
    binding = system.scaled_values(amplitudes**2) - system.scaled_constants
    return np.concatenate([stationarity, binding[active]]), jacobian


def newton_polish(
    system: ConstraintSystem,
    x: FloatArray,
    multipliers: FloatArray,
    active: IntArray,
    free: IntArray,
) -> tuple[FloatArray, FloatArray] | None:
    """Newton steps on the KKT equations with the binding rows held as equalities.

    Returns None when the steps stall or leave the active set they assumed.
    """
    u = np.sqrt(np.maximum(x, 0.0)).ravel()
    multipliers = multipliers.copy()
    objective = 2 * np.diag(system.objective_gradient[free])
    zeros = np.zeros((active.size, active.size))
    for _ in range(_NEWTON_STEPS):
        residual, jacobian = _kkt_residual(system, u, multipliers, active, free)
        if np.max(np.abs(residual)) <= _NEWTON_TOLERANCE:
            break
        hessian = objective + system.amplitude_hessian(multipliers)[np.ix_(free, free)]
        kkt = np.block([[hessian, jacobian.T], [jacobian, zeros]])
        step = np.linalg.lstsq(kkt, -residual, rcond=None)[0]
        u[free] += step[: free.size]
        multipliers[active] += step[free.size :]

    residual, _ = _kkt_residual(system, u, multipliers, active, free)
    if np.max(np.abs(residual)) > _NEWTON_ACCEPT:
        return None
    if np.any(u[free] ** 2 <= AMPLITUDE_FLOOR) or np.any(multipliers < -_NEWTON_ACCEPT):
        return None
    return (u**2).reshape(system.shape), np.maximum(multipliers, 0.0)


def kkt_start(system: ConstraintSystem, x0: FloatArray, tolerance: float) -> WarmStart:
    """Best primal-dual point reachable from `x0`.

    `feasible` is False when no start reaches a point whose relative
    violation is within `tolerance`; `x` is then the least violating one.
    """
    candidates = [sqp_point(system, start) for start in _starts(system, x0)]
    start = system.project(np.asarray(x0, dtype=float))
    if system.violation(start) <= tolerance:
        candidates.append(start)

    def rank(x: FloatArray) -> tuple[int, float]:
        violation = system.violation(x)
        if violation <= tolerance:
            return 0, system.objective(x)
        return 1, violation

    x = min(candidates, key=rank)
    violation = system.violation(x)
    if violation > tolerance:
        return WarmStart(
            x=x,
            multipliers=np.zeros(system.n_rows),
            violation=violation,
            feasible=False,
        )

    cleaned = np.where(x > AMPLITUDE_FLOOR, x, 0.0)
    free, active = _free_entries(system, cleaned), _active_rows(system, cleaned)
    multipliers = row_multipliers(system, cleaned, active, free)
    polished = None
    if free.size and active.size:
        polished = newton_polish(system, cleaned, multipliers, active, free)
    if polished is not None and system.violation(polished[0]) <= tolerance:
        x, multipliers = polished
    else:
        logger.debug("KKT polish did not settle; starting from the SQP point")
    return WarmStart(
        x=x,
        multipliers=multipliers,
        violation=system.violation(x),
        feasible=True,
    )
