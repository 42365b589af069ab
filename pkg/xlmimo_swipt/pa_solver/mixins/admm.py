from __future__ import annotations

import math

import numpy as np

from xlmimo_swipt.pa_solver.cone import project_blocks
from xlmimo_swipt.pa_solver.interface import IPowerSolver
from xlmimo_swipt.pa_solver.system import ConstraintSystem
from xlmimo_swipt.structs import AdmmConfig, AdmmState, TraceRow
from xlmimo_swipt.typing_ext import FloatArray


class BaseSolver(IPowerSolver):
    def __init__(self):
        super().__init__()
        self.config = AdmmConfig()

    def set_config(self, config: AdmmConfig) -> None:
        self.config = config

    def initial_state(
        self,
        system: ConstraintSystem,
        x0: FloatArray,
        multipliers: FloatArray | None = None,
    ) -> AdmmState:
        """Iterate at `x0`; row multipliers, when known, seed the scaled dual."""
        x = system.project(np.asarray(x0, dtype=float))
        values = system.scaled_values(x)
        z = np.zeros(system.n_rows)
        if multipliers is not None:
            z = np.asarray(multipliers, dtype=float) / self.config.tau
        state = AdmmState(
            x=x,
            x_a=values,
            y=project_blocks(system.scaled_constants - values - z, system.blocks),
            z=z,
            tau=self.config.tau,
        )
        state.penalty_baseline = max(self.penalty(state, system), 1.0)
        return state

    def penalty(self, state: AdmmState, system: ConstraintSystem) -> float:
        gap = system.scaled_values(state.x) + state.y - system.scaled_constants
        return state.tau / 2 * float(np.sum((gap + state.z) ** 2))

    def on_iteration(
        self, state: AdmmState, system: ConstraintSystem, previous_y: FloatArray
    ) -> None:
        pass

    def finalize(self, state: AdmmState, system: ConstraintSystem) -> None:
        pass


class DouglasRachfordUpdates(IPowerSolver):
    config: AdmmConfig

    def x_update(self, state: AdmmState, system: ConstraintSystem) -> FloatArray:
        # the energy rows are linearized around the current iterate; the
        # remaining rows are affine, so the model is exact for them
        jacobian = system.scaled_jacobian(state.x)
        x_k = state.x.ravel()
        offset = system.scaled_values(state.x) - jacobian @ x_k
        target = system.scaled_constants - state.y - state.z - offset
        gradient_f = system.objective_gradient
        tau = state.tau

        lipschitz = tau * np.linalg.norm(jacobian, 2) ** 2
        if lipschitz <= 0:
            lipschitz = 1.0

        x = x_k.copy()
        momentum = x.copy()
        t = 1.0
        for _ in range(self.config.inner_steps):
            gradient = gradient_f + tau * jacobian.T @ (jacobian @ momentum - target)
            step = (momentum - gradient / lipschitz).reshape(system.shape)
            x_next = system.project(step).ravel()
            t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
            momentum = x_next + (t - 1) / t_next * (x_next - x)
            x, t = x_next, t_next
        return x.reshape(system.shape)

    def relax(
        self, state: AdmmState, system: ConstraintSystem, x: FloatArray
    ) -> FloatArray:
        alpha = self.config.relaxation
        return 2 * alpha * system.scaled_values(x) + (1 - 2 * alpha) * (
            system.scaled_constants - state.y
        )

    def y_update(
        self, state: AdmmState, system: ConstraintSystem, x_a: FloatArray
    ) -> FloatArray:
        return project_blocks(system.scaled_constants - x_a - state.z, system.blocks)

    def z_update(
        self,
        state: AdmmState,
        system: ConstraintSystem,
        x_a: FloatArray,
        y: FloatArray,
    ) -> FloatArray:
        return state.z + x_a + y - system.scaled_constants


class AdmmLoop(IPowerSolver):
    config: AdmmConfig

    def iterate(self, state: AdmmState, system: ConstraintSystem) -> AdmmState:
        previous_y = state.y
        x = self.x_update(state, system)
        x_a = self.relax(state, system, x)
        y = self.y_update(state, system, x_a)
        state.z = self.z_update(state, system, x_a, y)
        state.x, state.x_a, state.y = x, x_a, y
        state.iteration += 1
        state.trace.append(
            TraceRow(
                iteration=state.iteration,
                objective=system.objective(x),
                violation=system.violation(x),
            )
        )
        self.on_iteration(state, system, previous_y)
        return state

    def solve(
        self, state: AdmmState, system: ConstraintSystem
    ) -> tuple[AdmmState, bool]:
        previous = system.objective(state.x)
        for _ in range(self.config.max_iterations):
            state = self.iterate(state, system)
            last = state.trace[-1]
            if (
                abs(last.objective - previous) <= self.config.epsilon
                and last.violation <= self.config.feasibility_tol
            ):
                return state, True
            previous = last.objective
        return state, False
