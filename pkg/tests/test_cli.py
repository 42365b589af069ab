from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import pytest

from xlmimo_swipt import arg_parser, main, trial_seeds
from xlmimo_swipt.printer import RESULT_COLUMNS, Printer
from xlmimo_swipt.writer import Writer

CONFIGS = Path(__file__).parent / "configs"
TINY = str(CONFIGS / "tiny.json")


def run_main(monkeypatch, *args: str) -> int:
    monkeypatch.setattr(sys, "argv", ["xlmimo-swipt", *args])
    return main()


def read_table(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    header = [line for line in lines if line.startswith("#")]
    rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
    return header, rows


def test_grid_argument():
    parser = arg_parser()
    args = parser.parse_args(["sweep", "c.json", "--axis", "eh", "--grid", "0.1:0.3:3"])
    assert args.grid == pytest.approx([0.1, 0.2, 0.3])
    args = parser.parse_args(["sweep", "c.json", "--axis", "s", "--grid", "1,4"])
    assert args.grid == [1.0, 4.0]


def test_invalid_arguments():
    parser = arg_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["run", "c.json", "--trials", "0"])
    with pytest.raises(SystemExit):
        parser.parse_args(["sweep", "c.json", "--axis", "noise"])


def test_trial_seeds():
    seeds = trial_seeds(7, 4)
    assert seeds == trial_seeds(7, 4)
    assert len(set(seeds)) == 4
    assert trial_seeds(7, 2) == seeds[:2]


def test_run(monkeypatch, tmp_path):
    assert run_main(monkeypatch, "run", TINY, "-o", str(tmp_path), "--emit-trace") == 0

    header, rows = read_table(tmp_path / "results.csv")
    assert header[0] == "# xlmimo-swipt results"
    assert header[1] == "# seed: 7"
    assert list(rows[0]) == list(RESULT_COLUMNS)
    assert [row["method"] for row in rows] == ["EA-FA", "PA-FA", "PA-SA"] * 2
    for row in rows:
        if row["method"] == "EA-FA":
            assert float(row["eta"]) == 1.0
            assert row["activation"] == "11"
        assert len(row["rates_bps_hz"].split(";")) == 2
        assert len(row["harvested_mw"].split(";")) == 1

    _, summary = read_table(tmp_path / "summary.csv")
    assert len(summary) == 1
    assert summary[0]["subarrays"] == "2"
    assert summary[0]["trials"] == "2"
    assert float(summary[0]["eta_ea_fa"]) == 1.0

    _, trace = read_table(tmp_path / "trace.csv")
    assert trace
    assert {row["method"] for row in trace} <= {"PA-FA", "PA-SA"}


def test_run_is_deterministic(monkeypatch, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run_main(monkeypatch, "run", TINY, "-o", str(first), "--trials", "1") == 0
    assert run_main(monkeypatch, "run", TINY, "-o", str(second), "--trials", "1") == 0
    assert (first / "results.csv").read_text() == (second / "results.csv").read_text()


def test_dump_tables(monkeypatch, tmp_path):
    assert (
        run_main(
            monkeypatch,
            "run",
            TINY,
            "-o",
            str(tmp_path),
            "--trials",
            "1",
            "--dump-tables",
        )
        == 0
    )
    lines = (tmp_path / "gain_tables.txt").read_text().splitlines()
    assert lines[0] == "# xlmimo-swipt gain tables"
    # 2 subarrays x 3 users rows of 3 beams after the trial line
    assert len([line for line in lines if not line.startswith("#")]) == 6


def test_sweep(monkeypatch, tmp_path):
    code = run_main(
        monkeypatch,
        "sweep",
        TINY,
        "-o",
        str(tmp_path),
        "--axis",
        "s",
        "--grid",
        "1,2",
        "--trials",
        "1",
    )
    assert code == 0
    header, rows = read_table(tmp_path / "sweep_s.csv")
    assert header[0] == "# xlmimo-swipt sweep s"
    assert [row["subarrays"] for row in rows] == ["1", "2"]
    assert (tmp_path / "results_s_1.csv").exists()
    assert (tmp_path / "results_s_2.csv").exists()


def test_config_errors(monkeypatch, tmp_path, caplog):
    code = run_main(
        monkeypatch, "run", str(CONFIGS / "missing-zeta.json"), "-o", str(tmp_path)
    )
    assert code == 2
    assert caplog.record_tuples[-1] == (
        "xlmimo_swipt",
        logging.ERROR,
        "Invalid config: missing required field 'eh.zeta_max_mw'",
    )
    assert not (tmp_path / "results.csv").exists()

    assert run_main(monkeypatch, "run", str(tmp_path / "absent.json")) == 2
    assert (
        run_main(monkeypatch, "sweep", TINY, "-o", str(tmp_path), "--axis", "rate")
        == 2
    )
    code = run_main(
        monkeypatch, "sweep", TINY, "-o", str(tmp_path), "--axis", "s", "--grid", "1.5"
    )
    assert code == 2


def test_subarray_sweep_rejects_stale_masks(monkeypatch, tmp_path, caplog):
    data = json.loads(Path(TINY).read_text())
    data["users"]["regions"][2]["subarray_mask"] = [True, False]
    config = tmp_path / "masked.json"
    config.write_text(json.dumps(data))
    code = run_main(
        monkeypatch,
        "sweep",
        str(config),
        "-o",
        str(tmp_path),
        "--axis",
        "s",
        "--grid",
        "2,4",
        "--trials",
        "1",
    )
    assert code == 2
    assert caplog.record_tuples[-1][2] == (
        "Invalid config: invalid subarray mask 'users.regions[2].subarray_mask'"
    )
    assert not (tmp_path / "sweep_s.csv").exists()


def test_infeasible_scenario(monkeypatch, tmp_path, caplog):
    # 30 mW sits above the 24 mW harvester saturation
    code = run_main(
        monkeypatch,
        "sweep",
        TINY,
        "-o",
        str(tmp_path),
        "--axis",
        "eh",
        "--grid",
        "30",
        "--trials",
        "1",
    )
    assert code == 3
    assert caplog.record_tuples[-1][2].startswith("Infeasible scenario: none of")
    assert not (tmp_path / "sweep_eh.csv").exists()


def test_writer(tmp_path):
    printer = Printer(precision=4)
    assert printer.number(1 / 3) == "0.3333"
    assert printer.csv_line(["a,b", 1]) == '"a,b",1'

    path = Writer(tmp_path / "out").write_table("t.csv", ["# h"], ["x,y", "1,2"])
    assert path.read_text(encoding="utf-8") == "# h\nx,y\n1,2\n"
