from __future__ import annotations

import logging
from argparse import ArgumentParser, Namespace
from concurrent.futures import ProcessPoolExecutor
from logging import getLogger
from pathlib import Path
from typing import Sequence

import numpy as np

from xlmimo_swipt.config import ScenarioConfig, build_scenario, load_config
from xlmimo_swipt.errors import (
    ConfigError,
    InfeasibleThresholdError,
    InvalidGeometryError,
    InvalidScenarioError,
    NoFeasibleTrialError,
)
from xlmimo_swipt.orchestrator import run_methods, summarize_trials
from xlmimo_swipt.printer import Printer
from xlmimo_swipt.structs import GainTables, SummaryRow, TrialOutcome
from xlmimo_swipt.writer import Writer

logger = getLogger("xlmimo_swipt")

AXIS_COLUMNS = {"s": "subarrays", "eh": "energy_mw", "rate": "rate_bps_hz"}
DEFAULT_GRIDS = {
    "s": [1, 2, 3, 4, 5, 6, 7, 8],
    "eh": [float(v) for v in np.linspace(0.04, 0.4, 10)],
}


class CLIArgs(Namespace):
    command: str
    config: str
    output_dir: str
    seed: int | None
    trials: int | None
    workers: int
    emit_trace: bool
    dump_tables: bool
    p_et_mw: float | None
    verbose: bool
    axis: str
    grid: list[float] | None


def arg_parser() -> ArgumentParser:
    def positive_int(value: str) -> int:
        number = int(value)
        if number < 1:
            raise ValueError(f"Expected a positive integer: {value}")
        return number

    def positive_float(value: str) -> float:
        number = float(value)
        if not number > 0:
            raise ValueError(f"Expected a positive number: {value}")
        return number

    def grid(value: str) -> list[float]:
        if ":" in value:
            start, stop, count = value.split(":")
            points = np.linspace(float(start), float(stop), int(count))
            return [float(v) for v in points]
        return [float(v) for v in value.split(",")]

    parser = ArgumentParser(
        prog="xlmimo-swipt",
        description="Simulates power-minimizing SWIPT over a modular XL-MIMO array",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    common = ArgumentParser(add_help=False)
    common.add_argument("config", metavar="CONFIG", help="Scenario JSON file")
    common.add_argument(
        "-o",
        "--output-dir",
        default="./results",
        help="Directory receiving the CSV files",
    )
    common.add_argument(
        "--seed", type=int, default=None, help="Override the user placement seed"
    )
    common.add_argument(
        "--trials",
        type=positive_int,
        default=None,
        help="Override the number of Monte Carlo trials",
    )
    common.add_argument(
        "--workers",
        type=positive_int,
        default=1,
        help="Worker processes running trials in parallel",
    )
    common.add_argument(
        "--emit-trace",
        action="store_true",
        help="Write the per-iteration ADMM trace of every solve",
    )
    common.add_argument(
        "--p-et-mw",
        type=positive_float,
        default=None,
        metavar="MW",
        help="Override the per-element transmit power",
    )
    common.add_argument(
        "--verbose", action="store_true", help="Log solver progress"
    )

    run_parser = commands.add_parser(
        "run", parents=[common], help="Run EA-FA, PA-FA and PA-SA on a scenario"
    )
    run_parser.add_argument(
        "--dump-tables",
        action="store_true",
        help="Write the direct gain tables of every trial",
    )

    sweep_parser = commands.add_parser(
        "sweep", parents=[common], help="Summarize the methods over a parameter grid"
    )
    sweep_parser.add_argument(
        "--axis",
        choices=sorted(AXIS_COLUMNS),
        required=True,
        help="Swept quantity: subarray count, EH threshold (mW) or rate threshold",
    )
    sweep_parser.add_argument(
        "--grid",
        type=grid,
        default=None,
        metavar="GRID",
        help="Comma-separated values or START:STOP:COUNT",
    )
    return parser


def trial_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(child.generate_state(1)[0]) for child in children]


def _run_trial(
    task: tuple[ScenarioConfig, int, int, bool]
) -> tuple[TrialOutcome, GainTables | None]:
    config, trial, seed, keep_tables = task
    scenario = build_scenario(config, seed)
    reports = run_methods(scenario)
    logger.info(
        f"Trial {trial} (seed {seed}): "
        + ", ".join(f"{r.method} {r.p_c:.6g} W [{r.status}]" for r in reports)
    )
    return (
        TrialOutcome(trial=trial, seed=seed, reports=reports),
        scenario.tables if keep_tables else None,
    )


def run_trials(
    config: ScenarioConfig, workers: int = 1, keep_tables: bool = False
) -> tuple[list[TrialOutcome], list[GainTables | None]]:
    seeds = trial_seeds(config.users.seed, config.trials)
    tasks = [(config, i, seed, keep_tables) for i, seed in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_run_trial, tasks))
    else:
        results = [_run_trial(task) for task in tasks]
    return [outcome for outcome, _ in results], [tables for _, tables in results]


def _has_feasible_optimum(outcomes: Sequence[TrialOutcome]) -> bool:
    return any(
        report.status != "infeasible"
        for outcome in outcomes
        for report in outcome.reports
        if report.method != "EA-FA"
    )


def run_scenario(
    config: ScenarioConfig,
    printer: Printer,
    writer: Writer,
    workers: int = 1,
    emit_trace: bool = False,
    dump_tables: bool = False,
) -> list[TrialOutcome]:
    outcomes, tables = run_trials(config, workers, keep_tables=dump_tables)
    if not _has_feasible_optimum(outcomes):
        raise NoFeasibleTrialError(len(outcomes))

    seed = config.users.seed
    config_dict = config.to_dict()
    writer.write_table(
        "results.csv",
        printer.print_header(config_dict, seed, "results"),
        printer.print_results(outcomes),
    )
    summary = summarize_trials(outcomes, point=str(config.geometry.subarrays))
    writer.write_table(
        "summary.csv",
        printer.print_header(config_dict, seed, "summary"),
        printer.print_summary([summary], axis="subarrays"),
    )
    if emit_trace:
        writer.write_table(
            "trace.csv",
            printer.print_header(config_dict, seed, "trace"),
            printer.print_traces(outcomes),
        )
    if dump_tables:
        lines: list[str] = []
        for outcome, trial_tables in zip(outcomes, tables):
            lines += printer.print_gain_tables(outcome.trial, trial_tables)
        writer.write_table(
            "gain_tables.txt",
            printer.print_header(config_dict, seed, "gain tables"),
            lines,
        )
    return outcomes


def _point_config(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "s":
        if value != int(value):
            raise ConfigError("--grid", f"subarray count {value} is not an integer in")
        return config.with_overrides(subarrays=int(value))
    if axis == "eh":
        return config.with_overrides(energy_mw=value)
    return config.with_overrides(rate_bps_hz=value)


def _point_label(axis: str, value: float) -> str:
    return str(int(value)) if axis == "s" else f"{value:.6g}"


def sweep(
    config: ScenarioConfig,
    axis: str,
    grid: Sequence[float],
    printer: Printer,
    writer: Writer,
    workers: int = 1,
    emit_trace: bool = False,
) -> list[SummaryRow]:
    rows: list[SummaryRow] = []
    feasible = False
    for value in grid:
        point_config = _point_config(config, axis, value)
        label = _point_label(axis, value)
        logger.info(f"Sweep point {AXIS_COLUMNS[axis]} = {label}")
        outcomes, _ = run_trials(point_config, workers)
        feasible = feasible or _has_feasible_optimum(outcomes)
        rows.append(summarize_trials(outcomes, point=label))

        header = printer.print_header(
            point_config.to_dict(), point_config.users.seed, "results"
        )
        writer.write_table(
            f"results_{axis}_{label}.csv", header, printer.print_results(outcomes)
        )
        if emit_trace:
            writer.write_table(
                f"trace_{axis}_{label}.csv", header, printer.print_traces(outcomes)
            )
    if not feasible:
        raise NoFeasibleTrialError(config.trials * len(grid))

    writer.write_table(
        f"sweep_{axis}.csv",
        printer.print_header(config.to_dict(), config.users.seed, f"sweep {axis}"),
        printer.print_summary(rows, axis=AXIS_COLUMNS[axis]),
    )
    return rows


def main() -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(name)s - [%(levelname)7s] %(message)s",
    )
    args = arg_parser().parse_args(namespace=CLIArgs())
    if args.verbose:
        logger.setLevel(logging.DEBUG)

    printer = Printer()
    writer = Writer(Path(args.output_dir))
    try:
        config = load_config(args.config).with_overrides(
            seed=args.seed, trials=args.trials, p_et_mw=args.p_et_mw
        )
        if args.command == "run":
            run_scenario(
                config,
                printer,
                writer,
                workers=args.workers,
                emit_trace=args.emit_trace,
                dump_tables=args.dump_tables,
            )
        else:
            grid = args.grid if args.grid is not None else DEFAULT_GRIDS.get(args.axis)
            if grid is None:
                raise ConfigError("--grid", "a grid is required for the rate axis in")
            sweep(
                config,
                args.axis,
                grid,
                printer,
                writer,
                workers=args.workers,
                emit_trace=args.emit_trace,
            )
    except ConfigError as e:
        logger.error(f"Invalid config: {e}")
        return 2
    except (
        InvalidGeometryError,
        InvalidScenarioError,
        InfeasibleThresholdError,
        NoFeasibleTrialError,
    ) as e:
        logger.error(f"Infeasible scenario: {e}")
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
