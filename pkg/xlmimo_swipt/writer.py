from __future__ import annotations

from logging import getLogger
from pathlib import Path

logger = getLogger("xlmimo_swipt")


class Writer:
    def __init__(self, output_dir: Path):
        self.output_dir = output_dir

    def write_lines(self, name: str, lines: list[str]) -> Path:
        self.output_dir.mkdir(exist_ok=True, parents=True)
        path = self.output_dir / name
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.writelines(line + "\n" for line in lines)
        logger.info(f"Wrote {path}")
        return path

    def write_table(self, name: str, header: list[str], lines: list[str]) -> Path:
        return self.write_lines(name, [*header, *lines])
