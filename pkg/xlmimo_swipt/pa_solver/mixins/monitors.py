from __future__ import annotations

from logging import getLogger

import numpy as np

from xlmimo_swipt.errors import DivergenceError
from xlmimo_swipt.pa_solver.interface import IPowerSolver
from xlmimo_swipt.pa_solver.system import ConstraintSystem
from xlmimo_swipt.structs import AdmmConfig, AdmmState
from xlmimo_swipt.typing_ext import FloatArray

logger = getLogger("xlmimo_swipt")

_BALANCE_RATIO = 10.0
_BALANCE_FACTOR = 2.0


class DetectDivergence(IPowerSolver):
    config: AdmmConfig

    def on_iteration(
        self, state: AdmmState, system: ConstraintSystem, previous_y: FloatArray
    ) -> None:
        super().on_iteration(state, system, previous_y)
        limit = self.config.divergence_factor * state.penalty_baseline
        if self.penalty(state, system) > limit:
            raise DivergenceError(
                state.iteration, [row.objective for row in state.trace]
            )


class BalanceResiduals(IPowerSolver):
    """Residual balancing of the penalty; the scaled dual follows tau."""

    config: AdmmConfig

    def on_iteration(
        self, state: AdmmState, system: ConstraintSystem, previous_y: FloatArray
    ) -> None:
        super().on_iteration(state, system, previous_y)
        primal = np.linalg.norm(state.x_a + state.y - system.scaled_constants)
        dual = np.linalg.norm(state.tau * (state.y - previous_y))
        if primal > _BALANCE_RATIO * dual:
            state.tau *= _BALANCE_FACTOR
            state.z = state.z / _BALANCE_FACTOR
        elif dual > _BALANCE_RATIO * primal:
            state.tau /= _BALANCE_FACTOR
            state.z = state.z * _BALANCE_FACTOR


class LogProgress(IPowerSolver):
    config: AdmmConfig

    def on_iteration(
        self, state: AdmmState, system: ConstraintSystem, previous_y: FloatArray
    ) -> None:
        super().on_iteration(state, system, previous_y)
        if state.iteration % self.config.log_every == 0:
            last = state.trace[-1]
            logger.debug(
                f"ADMM iteration {state.iteration}: P_C = {last.objective:.9g} W, "
                f"violation {last.violation:.3g}, tau {state.tau:.3g}"
            )
