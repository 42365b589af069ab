from __future__ import annotations

import math
from logging import getLogger
from typing import Sequence

import numpy as np

from xlmimo_swipt.errors import DegenerateDistanceError, ZeroChannelError
from xlmimo_swipt.structs import (
    ArrayGeometry,
    ChannelVector,
    GainTables,
    Position3D,
    User,
)
from xlmimo_swipt.typing_ext import ComplexArray, FloatArray

logger = getLogger("xlmimo_swipt")

_COINCIDENCE_DISTANCE = 1e-12


def radiation_pattern(theta: float, boresight_exponent: float) -> float:
    if 0 <= theta <= math.pi / 2:
        return 2 * (boresight_exponent + 1) * math.cos(theta) ** boresight_exponent
    return 0.0


def near_field_channel(
    geom: ArrayGeometry,
    s: int,
    user: Position3D,
    boresight_exponent: float,
    user_index: int = 0,
) -> ChannelVector:
    """Spherical-wavefront channel of subarray `s` towards `user`.

    Amplitude and pattern use the subarray center; phases use exact
    element distances.
    """
    position = user.as_array()
    element_distances = np.linalg.norm(geom.element_positions[s] - position, axis=1)
    offset = position - geom.subarray_centers[s]
    center_distance = float(np.linalg.norm(offset))
    if (
        element_distances.min() < _COINCIDENCE_DISTANCE
        or center_distance < _COINCIDENCE_DISTANCE
    ):
        raise DegenerateDistanceError(s, (user.x, user.y, user.z))

    theta = math.acos(max(-1.0, min(1.0, offset[2] / center_distance)))
    pattern = radiation_pattern(theta, boresight_exponent)
    amplitude = (
        geom.wavelength / (4 * math.pi * center_distance) * math.sqrt(pattern)
    )
    phases = np.exp(-2j * math.pi / geom.wavelength * element_distances)
    return ChannelVector(
        coefficients=amplitude * phases, subarray_index=s, user_index=user_index
    )


def mrt_precoder(g: ChannelVector) -> ComplexArray:
    norm = g.norm
    if norm == 0:
        raise ZeroChannelError(g.subarray_index, g.user_index)
    return g.coefficients / norm


def _visible(user: User, s: int) -> bool:
    return user.subarray_mask is None or user.subarray_mask[s]


def compute_gain_tables(
    geom: ArrayGeometry,
    users: Sequence[User],
    boresight_exponent: float,
    noise_power: float | Sequence[float] | FloatArray,
) -> GainTables:
    id_users = [u for u in users if u.role == "ID"]
    eh_users = [u for u in users if u.role == "EH"]
    ordered = id_users + eh_users
    n_id, n_eh = len(id_users), len(eh_users)
    n_sub, n_users = geom.subarrays, len(ordered)

    channels = np.zeros((n_sub, n_users, geom.elements_per_subarray), dtype=complex)
    precoders = np.zeros_like(channels)
    for s in range(n_sub):
        for k, user in enumerate(ordered):
            if not _visible(user, s):
                continue
            g = near_field_channel(geom, s, user.position, boresight_exponent, k)
            try:
                precoders[s, k] = mrt_precoder(g)
            except ZeroChannelError:
                # outside the pattern support: invisible pair
                continue
            channels[s, k] = g.coefficients

    coupling = np.einsum("skn,sjn->skj", channels, precoders.conj())
    direct = np.abs(coupling) ** 2
    eh_coupling = coupling[:, n_id:, :]
    upsilon = np.einsum("smj,tmj->stmj", eh_coupling, eh_coupling.conj())

    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (n_id,)).copy()
    return GainTables(
        channels=channels,
        coupling=coupling,
        direct=direct,
        upsilon=upsilon,
        noise_power=noise,
        n_id=n_id,
        n_eh=n_eh,
    )

