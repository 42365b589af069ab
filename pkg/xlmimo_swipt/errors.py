from __future__ import annotations

from typing import Sequence


class SimulationError(Exception):
    pass


class InvalidGeometryError(SimulationError):
    def __init__(self, field: str, value: object):
        super().__init__(field, value)
        self.field = field
        self.value = value

    def __str__(self):
        return f"array geometry field '{self.field}' = {self.value!r} is invalid"


class InvalidScenarioError(SimulationError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason

    def __str__(self):
        return self.reason


class DegenerateDistanceError(SimulationError):
    def __init__(self, subarray: int, position: tuple[float, float, float]):
        super().__init__(subarray, position)
        self.subarray = subarray
        self.position = position

    def __str__(self):
        return (
            f"User at {self.position} coincides with an element "
            f"of subarray {self.subarray}"
        )


class ZeroChannelError(SimulationError):
    def __init__(self, subarray: int, user: int):
        super().__init__(subarray, user)
        self.subarray = subarray
        self.user = user

    def __str__(self):
        return f"Channel of user {self.user} on subarray {self.subarray} is zero"


class InfeasibleThresholdError(SimulationError):
    def __init__(self, threshold: float, zeta_max: float):
        super().__init__(threshold, zeta_max)
        self.threshold = threshold
        self.zeta_max = zeta_max

    def __str__(self):
        return (
            f"Harvested power threshold {self.threshold:.6g} W is not below "
            f"the saturation level {self.zeta_max:.6g} W"
        )


class InternalConsistencyError(SimulationError):
    def __init__(self, quantity: str, residue: float):
        super().__init__(quantity, residue)
        self.quantity = quantity
        self.residue = residue

    def __str__(self):
        return f"Inconsistent {self.quantity} (residue {self.residue:.3g})"


class DivergenceError(SimulationError):
    def __init__(self, iteration: int, trace: Sequence[float]):
        super().__init__(iteration, trace)
        self.iteration = iteration
        self.trace = list(trace)

    def __str__(self):
        return f"ADMM penalty diverged at iteration {self.iteration}"


class InvalidInputError(SimulationError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason

    def __str__(self):
        return self.reason


class UndefinedSurrogateError(SimulationError):
    def __str__(self):
        return "Surrogate is undefined for an all-zero power allocation"


class ConfigError(SimulationError):
    def __init__(self, path: str, reason: str):
        super().__init__(path, reason)
        self.path = path
        self.reason = reason

    def __str__(self):
        return f"{self.reason} '{self.path}'"


class NoFeasibleTrialError(SimulationError):
    def __init__(self, trials: int):
        super().__init__(trials)
        self.trials = trials

    def __str__(self):
        return f"none of {self.trials} trials produced a feasible optimized allocation"
