from __future__ import annotations

import math
from logging import getLogger
from typing import Sequence

import numpy as np

from xlmimo_swipt.errors import InvalidGeometryError, InvalidScenarioError
from xlmimo_swipt.structs import ArrayGeometry, Position3D, User, VisibilityRegionSpec

logger = getLogger("xlmimo_swipt")

# fraction of d_FA bounding each role's regions
ROLE_RANGE_FRACTION = {"ID": 0.1, "EH": 0.01}


def build_array(
    subarrays: int,
    nx: int,
    ny: int,
    wavelength: float,
    element_dimension: float,
    pitch: float,
    gap: float = 0.0,
) -> ArrayGeometry:
    for name, count in (("subarrays", subarrays), ("nx", nx), ("ny", ny)):
        if count < 1:
            raise InvalidGeometryError(name, count)
    if wavelength <= 0:
        raise InvalidGeometryError("wavelength", wavelength)
    if pitch <= 0:
        raise InvalidGeometryError("element_pitch", pitch)
    if not 0 <= element_dimension <= pitch:
        raise InvalidGeometryError("element_dimension", element_dimension)
    if gap < 0:
        raise InvalidGeometryError("subarray_gap", gap)

    ix, iy = np.meshgrid(
        np.arange(nx) - (nx - 1) / 2, np.arange(ny) - (ny - 1) / 2, indexing="ij"
    )
    local = np.stack(
        [ix.ravel() * pitch, iy.ravel() * pitch, np.zeros(nx * ny)], axis=1
    )
    stride = nx * pitch + gap
    offsets = (np.arange(subarrays) - (subarrays - 1) / 2) * stride
    centers = np.stack(
        [offsets, np.zeros(subarrays), np.zeros(subarrays)], axis=1
    )
    positions = centers[:, None, :] + local[None, :, :]

    return ArrayGeometry(
        subarrays=subarrays,
        nx=nx,
        ny=ny,
        wavelength=wavelength,
        element_dimension=element_dimension,
        element_pitch=pitch,
        subarray_gap=gap,
        element_positions=positions,
        subarray_centers=positions.mean(axis=1),
    )


def fraunhofer_array_distance(geom: ArrayGeometry) -> float:
    return (
        2
        * geom.element_dimension**2
        * geom.subarrays
        * geom.elements_per_subarray
        / geom.wavelength
    )


def role_range(geom: ArrayGeometry, role: str) -> float:
    return ROLE_RANGE_FRACTION[role] * fraunhofer_array_distance(geom)


def anchored_center(geom: ArrayGeometry, anchor: float) -> Position3D:
    """Point on the aperture at `anchor` times the half-width along x."""
    return Position3D(anchor * geom.half_width, 0.0, 0.0)


def validate_region(geom: ArrayGeometry, region: VisibilityRegionSpec):
    cap = role_range(geom, region.kind)
    if region.radial_bounds[1] > cap * (1 + 1e-12):
        raise InvalidScenarioError(
            f"{region.kind} region reaches {region.radial_bounds[1]:.6g} m, "
            f"beyond the {cap:.6g} m limit for its role"
        )
    center = region.center
    tolerance = 1e-9 * max(1.0, geom.half_width)
    if (
        abs(center.z) > tolerance
        or abs(center.x) > geom.half_width + tolerance
        or abs(center.y) > geom.half_height + tolerance
    ):
        raise InvalidScenarioError(f"region center {center} is off the aperture")
    if region.subarray_mask is not None and len(region.subarray_mask) != (
        geom.subarrays
    ):
        raise InvalidScenarioError(
            f"subarray mask has {len(region.subarray_mask)} entries "
            f"for {geom.subarrays} subarrays"
        )


def _sample_in_region(
    region: VisibilityRegionSpec, rng: np.random.Generator
) -> Position3D:
    u_radius, u_azimuth, u_elevation = rng.random(3)
    r_min, r_max = region.radial_bounds
    radius = np.cbrt(r_min**3 + u_radius * (r_max**3 - r_min**3))
    azimuth = region.azimuth_bounds[0] + u_azimuth * (
        region.azimuth_bounds[1] - region.azimuth_bounds[0]
    )
    # uniform in volume: sin(elevation) is uniform
    sin_lo, sin_hi = np.sin(region.elevation_bounds)
    elevation = math.asin(sin_lo + u_elevation * (sin_hi - sin_lo))
    offset = radius * np.array(
        [
            math.cos(elevation) * math.cos(azimuth),
            math.cos(elevation) * math.sin(azimuth),
            math.sin(elevation),
        ]
    )
    return Position3D.from_array(region.center.as_array() + offset)


def sample_users(
    geom: ArrayGeometry,
    regions: Sequence[VisibilityRegionSpec],
    counts: tuple[int, int],
    rng_seed: int,
) -> list[User]:
    """Place L ID users then M EH users, round-robin over their role's regions."""
    for region in regions:
        validate_region(geom, region)

    rng = np.random.default_rng(rng_seed)
    users: list[User] = []
    for role, count in zip(("ID", "EH"), counts):
        if count < 0:
            raise InvalidScenarioError(f"negative {role} user count {count}")
        indices = [i for i, region in enumerate(regions) if region.kind == role]
        if count > 0 and not indices:
            raise InvalidScenarioError(f"{count} {role} users but no {role} region")
        for k in range(count):
            region_index = indices[k % len(indices)]
            region = regions[region_index]
            users.append(
                User(
                    position=_sample_in_region(region, rng),
                    role=role,
                    region_index=region_index,
                    subarray_mask=region.subarray_mask,
                )
            )
    if not users:
        raise InvalidScenarioError("scenario has no users")
    logger.debug(f"Sampled {len(users)} users with seed {rng_seed}")
    return users
