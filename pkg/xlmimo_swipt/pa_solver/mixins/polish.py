from __future__ import annotations

import numpy as np

from xlmimo_swipt.pa_solver.interface import IPowerSolver
from xlmimo_swipt.pa_solver.system import ConstraintSystem
from xlmimo_swipt.structs import AdmmConfig, AdmmState

_TARGET_VIOLATION = 1e-9


class RestoreFeasibility(IPowerSolver):
    """Pushes the final iterate onto the feasible set.

    Runs projected-gradient steps on the squared hinge of the scaled
    residuals, aiming slightly inside every violated row.
    """

    config: AdmmConfig

    def finalize(self, state: AdmmState, system: ConstraintSystem) -> None:
        super().finalize(state, system)
        margin = _TARGET_VIOLATION * np.abs(system.scaled_constants)
        x = state.x
        for _ in range(self.config.polish_steps):
            if system.violation(x) <= _TARGET_VIOLATION:
                break
            hinge = np.maximum(
                system.scaled_values(x) - system.scaled_constants + margin, 0.0
            )
            active = hinge > 0
            jacobian = system.scaled_jacobian(x)[active]
            curvature = np.linalg.norm(jacobian, 2) ** 2
            if curvature <= 0:
                break
            step = x.ravel() - jacobian.T @ hinge[active] / curvature
            x = system.project(step.reshape(system.shape))
        state.x = x
