from __future__ import annotations

import numpy as np

from xlmimo_swipt.errors import UndefinedSurrogateError
from xlmimo_swipt.structs import PowerAllocation, SurrogateVector
from xlmimo_swipt.typing_ext import BoolArray, FloatArray

_MEAN_TOLERANCE = 1e-12


def surrogate(pa: PowerAllocation) -> SurrogateVector:
    """Per-subarray share of the balanced ID + EH allocation.

    The balance weights ID power by total EH / total ID power; when one
    class holds no power at all only the other one is counted.
    """
    id_rows = pa.id_power.sum(axis=1)
    eh_rows = pa.eh_power.sum(axis=1)
    id_total, eh_total = float(id_rows.sum()), float(eh_rows.sum())
    if id_total <= 0 and eh_total <= 0:
        raise UndefinedSurrogateError()

    if id_total <= 0:
        balance, contribution = 0.0, eh_rows
    elif eh_total <= 0:
        balance, contribution = 1.0, id_rows
    else:
        balance = eh_total / id_total
        contribution = balance * id_rows + eh_rows
    return SurrogateVector(h=contribution / contribution.sum(), balance=balance)


def binary_decision(h: SurrogateVector) -> BoolArray:
    # ties with the mean keep the subarray on
    return h.h >= 1.0 / h.h.size - _MEAN_TOLERANCE


def scale_activation(h: SurrogateVector, a: BoolArray) -> FloatArray:
    return h.h * np.asarray(a, dtype=float)
