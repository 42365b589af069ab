from __future__ import annotations

import abc

from xlmimo_swipt.pa_solver.system import ConstraintSystem
from xlmimo_swipt.structs import AdmmConfig, AdmmState
from xlmimo_swipt.typing_ext import FloatArray


class IPowerSolver(abc.ABC):
    @abc.abstractmethod
    def set_config(self, config: AdmmConfig) -> None:
        ...

    @abc.abstractmethod
    def initial_state(
        self,
        system: ConstraintSystem,
        x0: FloatArray,
        multipliers: FloatArray | None = None,
    ) -> AdmmState:
        ...

    @abc.abstractmethod
    def penalty(self, state: AdmmState, system: ConstraintSystem) -> float:
        ...

    @abc.abstractmethod
    def x_update(self, state: AdmmState, system: ConstraintSystem) -> FloatArray:
        ...

    @abc.abstractmethod
    def relax(
        self, state: AdmmState, system: ConstraintSystem, x: FloatArray
    ) -> FloatArray:
        ...

    @abc.abstractmethod
    def y_update(
        self, state: AdmmState, system: ConstraintSystem, x_a: FloatArray
    ) -> FloatArray:
        ...

    @abc.abstractmethod
    def z_update(
        self,
        state: AdmmState,
        system: ConstraintSystem,
        x_a: FloatArray,
        y: FloatArray,
    ) -> FloatArray:
        ...

    @abc.abstractmethod
    def iterate(self, state: AdmmState, system: ConstraintSystem) -> AdmmState:
        ...

    @abc.abstractmethod
    def on_iteration(
        self, state: AdmmState, system: ConstraintSystem, previous_y: FloatArray
    ) -> None:
        ...

    @abc.abstractmethod
    def solve(
        self, state: AdmmState, system: ConstraintSystem
    ) -> tuple[AdmmState, bool]:
        ...

    @abc.abstractmethod
    def finalize(self, state: AdmmState, system: ConstraintSystem) -> None:
        ...
