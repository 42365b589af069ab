from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger
from typing import Sequence

import numpy as np

from xlmimo_swipt.channel import compute_gain_tables
from xlmimo_swipt.errors import (
    DivergenceError,
    InfeasibleThresholdError,
    InternalConsistencyError,
)
from xlmimo_swipt.geometry import sample_users
from xlmimo_swipt.metrics import (
    achieved_qos,
    compute_thresholds,
    power_consumption,
    satisfies_floors,
    transmit_power,
)
from xlmimo_swipt.pa_solver import solve_pa
from xlmimo_swipt.sa_selector import binary_decision, scale_activation, surrogate
from xlmimo_swipt.structs import (
    ActivationState,
    AdmmConfig,
    ArrayGeometry,
    EHModelParams,
    GainTables,
    Method,
    MethodSummary,
    PAResult,
    PowerAllocation,
    PowerModelParams,
    QoSThresholds,
    SolverReport,
    Status,
    SummaryRow,
    TraceRow,
    TrialOutcome,
    User,
    VisibilityRegionSpec,
)
from xlmimo_swipt.typing_ext import BoolArray, FloatArray

logger = getLogger("xlmimo_swipt")


@dataclass(frozen=True, eq=False)
class Scenario:
    geometry: ArrayGeometry
    users: tuple[User, ...]
    tables: GainTables
    thresholds: QoSThresholds
    power: PowerModelParams
    eh: EHModelParams
    admm: AdmmConfig
    delta: float
    seed: int

    @property
    def subarrays(self) -> int:
        return self.geometry.subarrays


def assemble_scenario(
    geometry: ArrayGeometry,
    regions: Sequence[VisibilityRegionSpec],
    counts: tuple[int, int],
    seed: int,
    power: PowerModelParams,
    eh: EHModelParams,
    noise_power: float | Sequence[float],
    boresight_exponent: float = 2.0,
    admm: AdmmConfig = AdmmConfig(),
    delta: float = 1e-7,
    rate_override: float | Sequence[float] | None = None,
    energy_override: float | Sequence[float] | None = None,
) -> Scenario:
    """Sample users, compute gain tables and settle the QoS floors.

    Floors come from the equal allocation with every subarray on unless
    explicit overrides are given.
    """
    users = sample_users(geometry, regions, counts, seed)
    tables = compute_gain_tables(geometry, users, boresight_exponent, noise_power)
    thresholds = compute_thresholds(tables, geometry, power, eh)
    if rate_override is not None or energy_override is not None:
        thresholds = QoSThresholds(
            rate_floor=_floor(rate_override, tables.n_id, thresholds.rate_floor),
            energy_floor=_floor(
                energy_override, tables.n_eh, thresholds.energy_floor
            ),
            input_floor=thresholds.input_floor if energy_override is None else None,
        )
    return Scenario(
        geometry=geometry,
        users=tuple(users),
        tables=tables,
        thresholds=thresholds,
        power=power,
        eh=eh,
        admm=admm,
        delta=delta,
        seed=seed,
    )


def _floor(override, count: int, derived: FloatArray) -> FloatArray:
    if override is None:
        return derived
    return np.broadcast_to(np.asarray(override, dtype=float), (count,)).copy()


def _report(
    method: Method,
    scenario: Scenario,
    pa: PowerAllocation,
    binary: BoolArray,
    status: Status,
    outer: int,
    inner: int,
    history: Sequence[BoolArray] = (),
    traces: Sequence[Sequence[TraceRow]] = (),
) -> SolverReport:
    act = ActivationState.from_binary(binary)
    rates, harvested = achieved_qos(pa, act, scenario.tables, scenario.eh)
    return SolverReport(
        method=method,
        p_c=power_consumption(pa, act, scenario.power),
        p_tx=transmit_power(pa, act),
        rates=rates,
        harvested=harvested,
        activation=tuple(bool(a) for a in binary),
        outer_iterations=outer,
        inner_iterations=inner,
        status=status,
        allocation=pa,
        activation_history=tuple(tuple(bool(a) for a in h) for h in history),
        traces=tuple(tuple(trace) for trace in traces),
    )


def _feasible(scenario: Scenario, pa: PowerAllocation, binary: BoolArray) -> bool:
    return satisfies_floors(
        pa,
        ActivationState.from_binary(binary),
        scenario.tables,
        scenario.thresholds,
        scenario.eh,
    )


def solve_allocation(
    scenario: Scenario,
    weights: FloatArray,
    initial: PowerAllocation | None = None,
) -> PAResult | None:
    """`solve_pa` on the scenario.

    Returns None when the solve diverges or the floors sit above the
    harvester saturation.
    """
    try:
        return solve_pa(
            weights,
            scenario.tables,
            scenario.thresholds,
            scenario.power,
            scenario.eh,
            scenario.admm,
            initial=initial,
        )
    except (DivergenceError, InfeasibleThresholdError) as e:
        logger.warning(f"{e}; treating the solve as infeasible")
        return None


def run_ea_fa(scenario: Scenario) -> SolverReport:
    tables = scenario.tables
    pa = PowerAllocation.equal(
        scenario.subarrays, tables.n_id, tables.n_eh, scenario.power.p_s
    )
    binary = np.ones(scenario.subarrays, dtype=bool)
    return _report("EA-FA", scenario, pa, binary, "converged", 0, 0, [binary])


def run_pa_fa(scenario: Scenario) -> SolverReport:
    binary = np.ones(scenario.subarrays, dtype=bool)
    result = solve_allocation(scenario, binary.astype(float))
    if result is None:
        return _failed_report(scenario, "PA-FA")

    status: Status = result.status
    if status != "infeasible" and not _feasible(scenario, result.allocation, binary):
        status = "infeasible"
    return _report(
        "PA-FA",
        scenario,
        result.allocation,
        binary,
        status,
        1,
        result.iterations,
        [binary],
        [result.trace],
    )


def _failed_report(scenario: Scenario, method: Method) -> SolverReport:
    """Report the equal allocation under `method` with an infeasible status."""
    baseline = run_ea_fa(scenario)
    return _report(
        method,
        scenario,
        baseline.allocation,
        np.ones(scenario.subarrays, dtype=bool),
        "infeasible",
        1,
        0,
        [np.ones(scenario.subarrays, dtype=bool)],
    )


@dataclass(frozen=True, eq=False)
class _Candidate:
    allocation: PowerAllocation
    binary: BoolArray
    p_c: float
    status: Status


def run_pa_sa(scenario: Scenario) -> SolverReport:
    """Alternate surrogate-driven subarray selection with PA solves.

    Outer iteration 1 is the full-activation solve. Each later one switches
    off the subarrays whose surrogate share falls below the mean, solves the
    allocation for the scaled activation, then re-solves it for the plain
    binary activation to obtain a candidate whose QoS is checked on the
    binary model. The loop stops when the decision no longer changes, when
    consecutive candidates differ by at most delta, or when a binary
    candidate misses the floors (rolled back). The cheapest candidate is
    returned.
    """
    n_sub = scenario.subarrays
    binary = np.ones(n_sub, dtype=bool)
    history: list[BoolArray] = [binary]
    traces: list[list[TraceRow]] = []

    first = solve_allocation(scenario, binary.astype(float))
    if first is None:
        return _failed_report(scenario, "PA-SA")
    traces.append(first.trace)
    inner = first.iterations
    if first.status == "infeasible" or not _feasible(
        scenario, first.allocation, binary
    ):
        return _report(
            "PA-SA",
            scenario,
            first.allocation,
            binary,
            "infeasible",
            1,
            inner,
            history,
            traces,
        )

    candidates = [_candidate(scenario, first, binary)]
    baseline = run_ea_fa(scenario).p_c
    driver = first.allocation
    outer_status: Status = "max_iterations"
    if abs(candidates[0].p_c - baseline) <= scenario.delta:
        outer_status = "converged"
    while outer_status == "max_iterations":
        h = surrogate(driver)
        decision = binary_decision(h)
        if np.any(decision & ~binary):
            raise InternalConsistencyError(
                "subarray activation", float(np.count_nonzero(decision & ~binary))
            )
        if np.array_equal(decision, binary):
            outer_status = "converged"
            break

        scaled = scale_activation(h, decision)
        scaled_result = solve_allocation(scenario, scaled, initial=driver)
        if scaled_result is not None:
            traces.append(scaled_result.trace)
            inner += scaled_result.iterations
        if scaled_result is None or scaled_result.status == "infeasible":
            logger.debug(
                f"Scaled activation with {int(decision.sum())} of {n_sub} "
                f"subarrays is infeasible (seed {scenario.seed})"
            )
            scaled_result = None

        warm = driver if scaled_result is None else scaled_result.allocation
        binary_result = solve_allocation(
            scenario, decision.astype(float), initial=warm
        )
        if binary_result is not None:
            traces.append(binary_result.trace)
            inner += binary_result.iterations
        if (
            binary_result is None
            or binary_result.status == "infeasible"
            or not _feasible(scenario, binary_result.allocation, decision)
        ):
            logger.warning(
                f"Binary activation with {int(decision.sum())} of {n_sub} "
                f"subarrays misses the QoS floors, rolling back "
                f"(seed {scenario.seed})"
            )
            outer_status = "converged-with-rollback"
            break

        binary = decision
        history.append(binary)
        candidates.append(_candidate(scenario, binary_result, binary))
        driver = (
            binary_result.allocation
            if scaled_result is None
            else scaled_result.allocation
        )
        logger.debug(
            f"SA step {len(history)}: {int(binary.sum())} active, "
            f"P_C = {candidates[-1].p_c:.9g} W"
        )
        if abs(candidates[-1].p_c - candidates[-2].p_c) <= scenario.delta:
            outer_status = "converged"

    if len(history) > n_sub + 2:
        raise InternalConsistencyError("outer iteration count", len(history))

    best = min(candidates, key=lambda c: c.p_c)
    status = outer_status
    if best.status == "max_iterations" and outer_status == "converged":
        status = "max_iterations"
    return _report(
        "PA-SA",
        scenario,
        best.allocation,
        best.binary,
        status,
        len(history),
        inner,
        history,
        traces,
    )


def _candidate(scenario: Scenario, result: PAResult, binary: BoolArray) -> _Candidate:
    act = ActivationState.from_binary(binary)
    return _Candidate(
        allocation=result.allocation,
        binary=binary,
        p_c=power_consumption(result.allocation, act, scenario.power),
        status=result.status,
    )


def power_consumption_ratio(report: SolverReport, baseline: SolverReport) -> float:
    if baseline.p_c <= 0 or not math.isfinite(baseline.p_c):
        return math.nan
    return report.p_c / baseline.p_c


def run_methods(
    scenario: Scenario,
) -> tuple[SolverReport, SolverReport, SolverReport]:
    return run_ea_fa(scenario), run_pa_fa(scenario), run_pa_sa(scenario)


METHODS: tuple[Method, ...] = ("EA-FA", "PA-FA", "PA-SA")
_SETTLED = ("converged", "converged-with-rollback")


def summarize_trials(outcomes: Sequence[TrialOutcome], point: str = "") -> SummaryRow:
    """Means over trials; infeasible optimized reports are left out."""
    where = f" at {point}" if point else ""
    methods = []
    for method in METHODS:
        kept = [
            (o.report(method), o.report("EA-FA"))
            for o in outcomes
            if o.report(method).status != "infeasible"
        ]
        dropped = len(outcomes) - len(kept)
        if dropped:
            logger.warning(
                f"{dropped} of {len(outcomes)} {method} reports are infeasible "
                f"and left out of the summary{where}"
            )
        methods.append(
            MethodSummary(
                method=method,
                trials=len(kept),
                mean_p_c=_mean([r.p_c for r, _ in kept]),
                mean_p_tx=_mean([r.p_tx for r, _ in kept]),
                mean_eta=_mean([power_consumption_ratio(r, b) for r, b in kept]),
            )
        )

    ratios = [
        o.report("PA-SA").active_count / len(o.report("PA-SA").activation)
        for o in outcomes
    ]
    optimized = [o.report(m) for o in outcomes for m in ("PA-FA", "PA-SA")]
    stderr = 0.0
    if len(ratios) > 1:
        stderr = float(np.std(ratios, ddof=1) / np.sqrt(len(ratios)))
    return SummaryRow(
        point=point,
        trials=len(outcomes),
        methods=tuple(methods),
        active_ratio=_mean(ratios),
        active_ratio_stderr=stderr,
        converged_fraction=_mean([float(r.status in _SETTLED) for r in optimized]),
        mean_inner_iterations=_mean(
            [float(r.inner_iterations) for r in optimized]
        ),
    )


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else math.nan
