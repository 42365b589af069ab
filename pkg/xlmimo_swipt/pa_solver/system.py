from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from xlmimo_swipt.errors import InvalidInputError
from xlmimo_swipt.metrics import lambda_constant, xi_constant
from xlmimo_swipt.structs import (
    EHModelParams,
    GainTables,
    PowerAllocation,
    PowerModelParams,
    QoSThresholds,
)
from xlmimo_swipt.typing_ext import BoolArray, FloatArray

# Omega / P_s below this share counts as switched off; the energy gradient
# divides by sqrt(Omega) floored here
AMPLITUDE_FLOOR = 1e-9


def project_capped_simplex(v: FloatArray, cap: float = 1.0) -> FloatArray:
    clipped = np.maximum(v, 0.0)
    if clipped.sum() <= cap:
        return clipped
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - cap
    index = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / index > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


@dataclass(eq=False)
class ConstraintSystem:
    """Residual rows [rate (L), energy (M), total power (1), per-subarray (S)].

    Iterates are Omega / P_s, shaped (S, K) with ID columns first. A row is
    satisfied when its value does not exceed its constant.
    """

    tables: GainTables
    weights: FloatArray
    xi_sq: FloatArray
    lambda_sq: FloatArray
    power: PowerModelParams

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.support: BoolArray = self.weights > 0
        if not np.any(self.support):
            raise InvalidInputError("activation has no active subarray")
        self.rate_rows: BoolArray = np.isfinite(self.xi_sq)
        self.shape = (self.tables.n_subarrays, self.tables.n_users)
        n_id, n_sub = self.tables.n_id, self.tables.n_subarrays
        n_eh = self.tables.n_eh
        self.constants = np.concatenate(
            [
                np.where(self.rate_rows, -self.tables.noise_power, 0.0),
                -self.lambda_sq,
                [self.power.p_t],
                np.full(n_sub, self.power.p_s),
            ]
        )
        self.blocks = tuple((i, 1) for i in range(self.constants.size))
        self.energy_rows = slice(n_id, n_id + n_eh)
        # rows that can bind: dropped rate floors and switched-off subarrays
        # leave constant rows behind
        self.live_rows: BoolArray = np.concatenate(
            [self.rate_rows, np.ones(n_eh + 1, dtype=bool), self.support]
        )
        self.variables: BoolArray = np.repeat(self.support, self.shape[1])
        self._own = np.arange(n_id)
        # beta[s, m, j] = a_s sqrt(P_s) C_smj, the amplitude gain of EH user m
        # on beam j of subarray s
        self._beta = (
            self.weights[:, None, None]
            * np.sqrt(self.power.p_s)
            * self.tables.coupling[:, n_id:, :]
        )

        n_active = int(self.support.sum()) * self.shape[1]
        self.objective_gradient = np.repeat(
            self.support.astype(float), self.shape[1]
        ) / np.sqrt(n_active)

        self._linear = self._linear_jacobian()
        norms = np.linalg.norm(self.jacobian(self.reference_point()), axis=1)
        self.row_scale = np.where(norms > 1e-300, norms, 1.0)
        self.scaled_constants = self.constants / self.row_scale
        self._curvature = self._energy_curvature() / self.row_scale[
            self.energy_rows, None, None
        ]

    @property
    def n_rows(self) -> int:
        return self.constants.size

    def reference_point(self) -> FloatArray:
        x = np.zeros(self.shape)
        x[self.support] = 1.0 / self.shape[1]
        return x

    def project(self, x: FloatArray) -> FloatArray:
        projected = np.zeros(self.shape)
        for s in np.nonzero(self.support)[0]:
            projected[s] = project_capped_simplex(x[s])
        return projected

    def _rate_parts(self, omega: FloatArray) -> tuple[FloatArray, FloatArray]:
        n_id = self.tables.n_id
        received = np.einsum(
            "s,sj,slj->lj", self.weights, omega, self.tables.direct[:, :n_id, :]
        )
        signal = received[self._own, self._own]
        return signal, received.sum(axis=1) - signal

    def _beams(self, u: FloatArray) -> FloatArray:
        return np.einsum("sj,smj->mj", u, self._beta)

    def values(self, x: FloatArray) -> FloatArray:
        omega = x * self.power.p_s
        signal, interference = self._rate_parts(omega)
        xi_sq = np.where(self.rate_rows, self.xi_sq, 0.0)
        rate = np.where(self.rate_rows, interference - xi_sq * signal, 0.0)
        rows = omega.sum(axis=1)
        energy = np.sum(np.abs(self._beams(np.sqrt(np.maximum(x, 0.0)))) ** 2, axis=1)
        return np.concatenate([rate, -energy, [self.weights @ rows], rows])

    def residuals(self, x: FloatArray) -> FloatArray:
        return self.values(x) - self.constants

    def scaled_values(self, x: FloatArray) -> FloatArray:
        return self.values(x) / self.row_scale

    def _linear_jacobian(self) -> FloatArray:
        """Gradients of the rows that are linear in x; energy rows stay zero."""
        n_sub, n_users = self.shape
        n_id, n_eh = self.tables.n_id, self.tables.n_eh

        rate = self.weights[None, :, None] * self.tables.direct[
            :, :n_id, :
        ].transpose(1, 0, 2)
        xi_sq = np.where(self.rate_rows, self.xi_sq, 0.0)
        rate[self._own, :, self._own] *= -xi_sq[:, None]
        rate[~self.rate_rows] = 0.0

        energy = np.zeros((n_eh, n_sub, n_users))
        total = np.broadcast_to(self.weights[:, None], self.shape)[None]
        per_subarray = np.broadcast_to(
            np.eye(n_sub)[:, :, None], (n_sub, n_sub, n_users)
        )
        stacked = np.concatenate([rate, energy, total, per_subarray], axis=0)
        return stacked.reshape(self.n_rows, n_sub * n_users) * self.power.p_s

    def _energy_gradient(self, u: FloatArray) -> FloatArray:
        """Gradients of the energy rows with respect to u = sqrt(x)."""
        beams = self._beams(u)
        gradient = -2 * np.real(
            beams.conj()[:, None, :] * self._beta.transpose(1, 0, 2)
        )
        return gradient.reshape(self.tables.n_eh, self.shape[0] * self.shape[1])

    def _energy_curvature(self) -> FloatArray:
        """Hessians of the energy rows in u, constant and shaped (M, SK, SK).

        Entry ((s, j), (t, k)) of row m is -2 Re(conj(beta_smj) beta_tmj)
        when j = k and zero otherwise.
        """
        n_sub, n_users = self.shape
        gram = np.real(np.einsum("smj,tmj->mjst", self._beta.conj(), self._beta))
        curvature = -2 * np.einsum("mjst,jk->msjtk", gram, np.eye(n_users))
        size = n_sub * n_users
        return curvature.reshape(self.tables.n_eh, size, size)

    def jacobian(self, x: FloatArray) -> FloatArray:
        """Row gradients with respect to Omega / P_s, shaped (rows, S*K)."""
        u = np.sqrt(np.maximum(x, 0.0))
        root = np.sqrt(np.maximum(x, AMPLITUDE_FLOOR)).ravel()
        jacobian = self._linear.copy()
        jacobian[self.energy_rows] = self._energy_gradient(u) / (2 * root)
        return jacobian

    def scaled_jacobian(self, x: FloatArray) -> FloatArray:
        return self.jacobian(x) / self.row_scale[:, None]

    def amplitude_jacobian(self, u: FloatArray) -> FloatArray:
        """Scaled row gradients with respect to u = sqrt(Omega / P_s)."""
        jacobian = self._linear * (2 * u.ravel())[None, :]
        jacobian[self.energy_rows] = self._energy_gradient(u)
        return jacobian / self.row_scale[:, None]

    def amplitude_hessian(self, multipliers: FloatArray) -> FloatArray:
        """Multiplier-weighted sum of the scaled row Hessians in u."""
        linear = (multipliers / self.row_scale) @ self._linear
        hessian = np.diag(2 * linear)
        hessian += np.einsum(
            "m,mab->ab", multipliers[self.energy_rows], self._curvature
        )
        return hessian

    def objective(self, x: FloatArray) -> float:
        """Power consumption in watts over the supported subarrays."""
        rows = x.sum(axis=1) * self.power.p_s
        per_subarray = rows / self.power.efficiency + self.power.circuit_power
        return float(per_subarray @ self.support.astype(float))

    def relative_residuals(self, x: FloatArray) -> FloatArray:
        omega = x * self.power.p_s
        _, interference = self._rate_parts(omega)
        reference = np.concatenate(
            [
                interference + self.tables.noise_power,
                np.maximum(self.lambda_sq, 1e-300),
                [self.power.p_t],
                np.full(self.shape[0], self.power.p_s),
            ]
        )
        return self.residuals(x) / reference

    def violation(self, x: FloatArray) -> float:
        return max(0.0, float(np.max(self.relative_residuals(x))))


def build_constraint_system(
    activation: FloatArray,
    tables: GainTables,
    thresholds: QoSThresholds,
    power: PowerModelParams,
    eh: EHModelParams,
) -> ConstraintSystem:
    xi_sq = np.array([xi_constant(r) ** 2 for r in thresholds.rate_floor])
    if thresholds.input_floor is not None:
        lambda_sq = np.asarray(thresholds.input_floor, dtype=float)
    else:
        lambda_sq = np.array(
            [lambda_constant(i, eh) ** 2 for i in thresholds.energy_floor]
        )
    return ConstraintSystem(
        tables=tables,
        weights=np.asarray(activation, dtype=float),
        xi_sq=xi_sq.reshape(tables.n_id),
        lambda_sq=lambda_sq.reshape(tables.n_eh),
        power=power,
    )


def assemble_residuals(
    x: PowerAllocation,
    activation: FloatArray,
    tables: GainTables,
    thresholds: QoSThresholds,
    power: PowerModelParams,
    eh: EHModelParams,
) -> FloatArray:
    system = build_constraint_system(activation, tables, thresholds, power, eh)
    return system.residuals(x.matrix() / power.p_s)
