from __future__ import annotations

import math
from dataclasses import dataclass
from dataclasses import field as field_
from typing import Literal

import numpy as np
from scipy.special import expit

from xlmimo_swipt.errors import InvalidInputError, InvalidScenarioError
from xlmimo_swipt.typing_ext import BoolArray, ComplexArray, FloatArray

Role = Literal["ID", "EH"]
Method = Literal["EA-FA", "PA-FA", "PA-SA"]
Status = Literal[
    "converged", "max_iterations", "infeasible", "converged-with-rollback"
]


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, values) -> Position3D:
        return Position3D(float(values[0]), float(values[1]), float(values[2]))

    def as_array(self) -> FloatArray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: Position3D) -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))

    def __str__(self):
        return f"({self.x:.6g}, {self.y:.6g}, {self.z:.6g})"


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    subarrays: int
    nx: int
    ny: int
    wavelength: float
    element_dimension: float
    element_pitch: float
    subarray_gap: float
    element_positions: FloatArray  # (S, Ns, 3)
    subarray_centers: FloatArray  # (S, 3)

    @property
    def elements_per_subarray(self) -> int:
        return self.nx * self.ny

    def element(self, s: int, n: int) -> Position3D:
        return Position3D.from_array(self.element_positions[s, n])

    def center(self, s: int) -> Position3D:
        return Position3D.from_array(self.subarray_centers[s])

    @property
    def half_width(self) -> float:
        return float(np.max(np.abs(self.element_positions[..., 0])))

    @property
    def half_height(self) -> float:
        return float(np.max(np.abs(self.element_positions[..., 1])))


@dataclass(frozen=True)
class VisibilityRegionSpec:
    kind: Role
    center: Position3D
    radial_bounds: tuple[float, float]
    azimuth_bounds: tuple[float, float] = (0.0, 2 * math.pi)
    elevation_bounds: tuple[float, float] = (math.pi / 6, math.pi / 2)
    subarray_mask: tuple[bool, ...] | None = None

    def __post_init__(self):
        r_min, r_max = self.radial_bounds
        if not 0 < r_min < r_max:
            raise InvalidScenarioError(
                "radial bounds must satisfy 0 < r_min < r_max, "
                f"got {self.radial_bounds}"
            )
        el_min, el_max = self.elevation_bounds
        if not 0 < el_min <= el_max <= math.pi / 2:
            raise InvalidScenarioError(
                "elevation bounds must lie in (0, pi/2], "
                f"got {self.elevation_bounds}"
            )
        if self.azimuth_bounds[0] > self.azimuth_bounds[1]:
            raise InvalidScenarioError(
                f"azimuth bounds are reversed: {self.azimuth_bounds}"
            )
        if self.subarray_mask is not None and not any(self.subarray_mask):
            raise InvalidScenarioError("subarray mask excludes every subarray")


@dataclass(frozen=True)
class User:
    position: Position3D
    role: Role
    region_index: int
    subarray_mask: tuple[bool, ...] | None = None


@dataclass(frozen=True, eq=False)
class ChannelVector:
    coefficients: ComplexArray
    subarray_index: int
    user_index: int

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True, eq=False)
class GainTables:
    """Couplings g_{s,k}^T w*_{s,j} of every user k with every MRT beam j.

    Users are indexed ID first (0..L-1), then EH (L..K-1).
    """

    channels: ComplexArray  # (S, K, Ns)
    coupling: ComplexArray  # (S, K, K)
    direct: FloatArray  # (S, K, K)
    upsilon: ComplexArray  # (S, S, M, K)
    noise_power: FloatArray  # (L,)
    n_id: int
    n_eh: int

    @property
    def cross(self) -> FloatArray:
        return self.upsilon.real

    @property
    def n_subarrays(self) -> int:
        return self.direct.shape[0]

    @property
    def n_users(self) -> int:
        return self.n_id + self.n_eh


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    id_power: FloatArray  # (S, L)
    eh_power: FloatArray  # (S, M)

    def __post_init__(self):
        if self.id_power.shape[0] != self.eh_power.shape[0]:
            raise InvalidInputError(
                "ID and EH allocations disagree on the subarray count"
            )
        if np.any(self.id_power < 0) or np.any(self.eh_power < 0):
            raise InvalidInputError("power allocation has negative entries")

    @classmethod
    def equal(cls, subarrays: int, n_id: int, n_eh: int, p_s: float):
        share = p_s / (n_id + n_eh)
        return cls(
            id_power=np.full((subarrays, n_id), share),
            eh_power=np.full((subarrays, n_eh), share),
        )

    @classmethod
    def from_matrix(cls, matrix: FloatArray, n_id: int) -> PowerAllocation:
        matrix = np.maximum(np.asarray(matrix, dtype=float), 0.0)
        return cls(
            id_power=matrix[:, :n_id].copy(), eh_power=matrix[:, n_id:].copy()
        )

    def matrix(self) -> FloatArray:
        return np.hstack([self.id_power, self.eh_power])

    @property
    def row_sums(self) -> FloatArray:
        return self.id_power.sum(axis=1) + self.eh_power.sum(axis=1)

    def check_budget(self, p_s: float, p_t: float, tolerance: float = 1e-9):
        if np.any(self.row_sums > p_s + tolerance):
            raise InvalidInputError("per-subarray power budget exceeded")
        if self.row_sums.sum() > p_t + tolerance:
            raise InvalidInputError("total power budget exceeded")


@dataclass(frozen=True, eq=False)
class ActivationState:
    binary: BoolArray
    scaled: FloatArray

    def __post_init__(self):
        if not np.any(self.binary):
            raise InvalidInputError("activation has no active subarray")
        if np.any((self.scaled > 0) & ~self.binary):
            raise InvalidInputError("scaled activation on a switched-off subarray")

    @classmethod
    def full(cls, subarrays: int) -> ActivationState:
        return cls(np.ones(subarrays, dtype=bool), np.ones(subarrays))

    @classmethod
    def from_binary(cls, binary) -> ActivationState:
        binary = np.asarray(binary, dtype=bool)
        return cls(binary, binary.astype(float))

    def weights(self, scaled: bool = False) -> FloatArray:
        return self.scaled if scaled else self.binary.astype(float)

    @property
    def active_count(self) -> int:
        return int(np.count_nonzero(self.binary))


@dataclass(frozen=True)
class PowerModelParams:
    efficiency: float
    p_syn: float
    p_ct: float
    p_et: float
    subarrays: int
    elements: int

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise InvalidInputError(
                f"amplifier efficiency must lie in (0, 1], got {self.efficiency}"
            )
        if min(self.p_syn, self.p_ct, self.p_et) <= 0:
            raise InvalidInputError("power model terms must be positive")

    @property
    def p_s(self) -> float:
        return self.elements * self.p_et

    @property
    def p_t(self) -> float:
        return self.subarrays * self.p_s

    @property
    def circuit_power(self) -> float:
        return 2 * self.p_syn + self.elements * self.p_ct


@dataclass(frozen=True)
class EHModelParams:
    zeta_max: float
    a: float
    b: float

    def __post_init__(self):
        if self.zeta_max <= 0 or self.a <= 0:
            raise InvalidInputError("EH saturation and steepness must be positive")

    @property
    def phi(self) -> float:
        return float(expit(-self.a * self.b))


@dataclass(frozen=True, eq=False)
class QoSThresholds:
    rate_floor: FloatArray  # bits/s/Hz, (L,)
    energy_floor: FloatArray  # harvested DC watts, (M,)
    # RF input energy equivalent of `energy_floor`, known exactly when the
    # floors come from the equal allocation
    input_floor: FloatArray | None = None

    def __post_init__(self):
        if np.any(self.rate_floor < 0) or np.any(self.energy_floor < 0):
            raise InvalidInputError("QoS thresholds must be nonnegative")


@dataclass(frozen=True)
class AdmmConfig:
    tau: float = 1.0
    relaxation: float = 0.5
    epsilon: float = 1e-7
    max_iterations: int = 5000
    inner_steps: int = 25
    adaptive_penalty: bool = False
    feasibility_tol: float = 1e-4
    polish_steps: int = 200
    divergence_factor: float = 1e6
    log_every: int = 500
    # start the ADMM from a polished KKT point of the allocation problem
    warm_start: bool = True

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidInputError(f"penalty tau must be positive, got {self.tau}")
        if self.epsilon <= 0:
            raise InvalidInputError(
                f"tolerance epsilon must be positive, got {self.epsilon}"
            )
        if not 0 < self.relaxation < 1:
            raise InvalidInputError(
                f"relaxation must lie in (0, 1), got {self.relaxation}"
            )
        if self.max_iterations < 1 or self.inner_steps < 1:
            raise InvalidInputError("iteration budgets must be positive")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    violation: float


@dataclass(eq=False)
class AdmmState:
    x: FloatArray  # Omega / P_s, (S, K)
    x_a: FloatArray
    y: FloatArray
    z: FloatArray
    tau: float
    iteration: int = 0
    trace: list[TraceRow] = field_(default_factory=list)
    penalty_baseline: float = 1.0


@dataclass(frozen=True, eq=False)
class WarmStart:
    x: FloatArray  # Omega / P_s, (S, K)
    multipliers: FloatArray  # one per scaled residual row
    violation: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class PAResult:
    allocation: PowerAllocation
    trace: list[TraceRow]
    status: Status
    iterations: int


@dataclass(frozen=True, eq=False)
class SurrogateVector:
    h: FloatArray
    balance: float


@dataclass(frozen=True, eq=False)
class SolverReport:
    method: Method
    p_c: float
    p_tx: float
    rates: tuple[float, ...]
    harvested: tuple[float, ...]
    activation: tuple[bool, ...]
    outer_iterations: int
    inner_iterations: int
    status: Status
    allocation: PowerAllocation
    activation_history: tuple[tuple[bool, ...], ...] = ()
    traces: tuple[tuple[TraceRow, ...], ...] = ()

    @property
    def active_count(self) -> int:
        return sum(self.activation)


@dataclass(frozen=True, eq=False)
class OracleCandidate:
    activation: tuple[bool, ...]
    p_c: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class OracleResult:
    best_pc: float
    best_activation: tuple[bool, ...] | None
    best_allocation: PowerAllocation | None
    evaluated: int
    status: Literal["feasible", "oracle-infeasible"]
    candidates: tuple[OracleCandidate, ...] = ()


@dataclass(frozen=True, eq=False)
class TrialOutcome:
    trial: int
    seed: int
    reports: tuple[SolverReport, ...]

    def report(self, method: Method) -> SolverReport:
        for report in self.reports:
            if report.method == method:
                return report
        raise KeyError(method)


@dataclass(frozen=True)
class MethodSummary:
    method: Method
    trials: int  # reports entering the means
    mean_p_c: float
    mean_p_tx: float
    mean_eta: float


@dataclass(frozen=True)
class SummaryRow:
    point: str
    trials: int
    methods: tuple[MethodSummary, ...]
    active_ratio: float
    active_ratio_stderr: float
    converged_fraction: float
    mean_inner_iterations: float
