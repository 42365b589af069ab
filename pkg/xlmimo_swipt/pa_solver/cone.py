from __future__ import annotations

from typing import Sequence

import numpy as np

from xlmimo_swipt.typing_ext import FloatArray


def soc_project(q0: float, q1) -> tuple[float, FloatArray]:
    """Euclidean projection of (q0, q1) onto {(r, s) : ||s|| <= r}."""
    q1 = np.asarray(q1, dtype=float)
    norm = float(np.linalg.norm(q1))
    if norm <= q0:
        return float(q0), q1.copy()
    if norm <= -q0:
        return 0.0, np.zeros_like(q1)
    r = (q0 + norm) / 2
    return r, r * q1 / norm


def in_cone(r: float, s, tolerance: float = 1e-12) -> bool:
    return float(np.linalg.norm(s)) <= r + tolerance * (1 + abs(r))


def project_blocks(values: FloatArray, blocks: Sequence[tuple[int, int]]) -> FloatArray:
    """Project consecutive (start, size) blocks of `values` onto their cones.

    The first entry of a block is its cone axis; single-entry blocks are
    half-lines.
    """
    projected = np.empty_like(values)
    for start, size in blocks:
        r, s = soc_project(values[start], values[start + 1 : start + size])
        projected[start] = r
        projected[start + 1 : start + size] = s
    return projected
