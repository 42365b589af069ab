from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable, Sequence

from xlmimo_swipt.orchestrator import METHODS, power_consumption_ratio
from xlmimo_swipt.structs import (
    GainTables,
    OracleResult,
    SolverReport,
    SummaryRow,
    TraceRow,
    TrialOutcome,
)

RESULT_COLUMNS = (
    "trial",
    "seed",
    "method",
    "p_c_w",
    "p_tx_w",
    "eta",
    "active_count",
    "active_ratio",
    "outer_iterations",
    "inner_iterations",
    "status",
    "rates_bps_hz",
    "harvested_mw",
    "activation",
)

TRACE_COLUMNS = ("trial", "method", "solve", "iteration", "p_c_w", "violation")


def _activation(bits: Iterable[bool]) -> str:
    return "".join("1" if bit else "0" for bit in bits)


class Printer:
    """Renders records as lines; CSV fields follow RFC 4180 quoting."""

    def __init__(self, precision: int = 10):
        self.precision = precision

    def number(self, value: float) -> str:
        return f"{value:.{self.precision}g}"

    def csv_line(self, fields: Sequence[Any]) -> str:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="").writerow(fields)
        return buffer.getvalue()

    def print_header(self, config: dict[str, Any], seed: int, kind: str) -> list[str]:
        return [
            f"# xlmimo-swipt {kind}",
            f"# seed: {seed}",
            f"# config: {json.dumps(config, sort_keys=True, separators=(',', ':'))}",
        ]

    def print_report(
        self, trial: int, seed: int, report: SolverReport, baseline: SolverReport
    ) -> str:
        subarrays = len(report.activation)
        return self.csv_line(
            [
                trial,
                seed,
                report.method,
                self.number(report.p_c),
                self.number(report.p_tx),
                self.number(power_consumption_ratio(report, baseline)),
                report.active_count,
                self.number(report.active_count / subarrays),
                report.outer_iterations,
                report.inner_iterations,
                report.status,
                ";".join(self.number(r) for r in report.rates),
                ";".join(self.number(h * 1e3) for h in report.harvested),
                _activation(report.activation),
            ]
        )

    def print_results(self, outcomes: Sequence[TrialOutcome]) -> list[str]:
        lines = [self.csv_line(RESULT_COLUMNS)]
        for outcome in outcomes:
            baseline = outcome.report("EA-FA")
            for report in outcome.reports:
                lines.append(
                    self.print_report(outcome.trial, outcome.seed, report, baseline)
                )
        return lines

    def summary_columns(self, axis: str) -> list[str]:
        columns = [axis, "trials"]
        for method in METHODS:
            key = method.lower().replace("-", "_")
            columns += [
                f"{key}_trials",
                f"{key}_p_c_w",
                f"{key}_p_tx_w",
                f"eta_{key}",
            ]
        columns += [
            "active_ratio",
            "active_ratio_stderr",
            "converged_fraction",
            "mean_inner_iterations",
        ]
        return columns

    def print_summary(
        self, rows: Sequence[SummaryRow], axis: str = "point"
    ) -> list[str]:
        lines = [self.csv_line(self.summary_columns(axis))]
        for row in rows:
            fields: list[Any] = [row.point, row.trials]
            for method in row.methods:
                fields += [
                    method.trials,
                    self.number(method.mean_p_c),
                    self.number(method.mean_p_tx),
                    self.number(method.mean_eta),
                ]
            fields += [
                self.number(row.active_ratio),
                self.number(row.active_ratio_stderr),
                self.number(row.converged_fraction),
                self.number(row.mean_inner_iterations),
            ]
            lines.append(self.csv_line(fields))
        return lines

    def print_gain_tables(self, trial: int, tables: GainTables) -> list[str]:
        n_sub, n_users = tables.n_subarrays, tables.n_users
        lines = [
            f"# trial {trial}: direct gains, {n_sub} subarrays x {n_users} users "
            f"x {n_users} beams ({tables.n_id} ID users first)"
        ]
        for s in range(n_sub):
            for k in range(n_users):
                lines.append(
                    " ".join(self.number(v) for v in tables.direct[s, k])
                )
        return lines

    def print_trace(
        self, trial: int, method: str, solve: int, trace: Sequence[TraceRow]
    ) -> list[str]:
        return [
            self.csv_line(
                [
                    trial,
                    method,
                    solve,
                    row.iteration,
                    self.number(row.objective),
                    self.number(row.violation),
                ]
            )
            for row in trace
        ]

    def print_traces(self, outcomes: Sequence[TrialOutcome]) -> list[str]:
        lines = [self.csv_line(TRACE_COLUMNS)]
        for outcome in outcomes:
            for report in outcome.reports:
                for solve, trace in enumerate(report.traces):
                    lines += self.print_trace(
                        outcome.trial, report.method, solve, trace
                    )
        return lines

    def print_oracle_candidates(self, result: OracleResult) -> list[str]:
        lines = [self.csv_line(["activation", "p_c_w", "feasible", "best"])]
        for candidate in result.candidates:
            lines.append(
                self.csv_line(
                    [
                        _activation(candidate.activation),
                        self.number(candidate.p_c),
                        int(candidate.feasible),
                        int(candidate.activation == result.best_activation),
                    ]
                )
            )
        return lines
