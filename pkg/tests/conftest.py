from __future__ import annotations

import math

import numpy as np
import pytest

from xlmimo_swipt.geometry import anchored_center, build_array, role_range
from xlmimo_swipt.orchestrator import assemble_scenario
from xlmimo_swipt.structs import (
    AdmmConfig,
    EHModelParams,
    GainTables,
    PowerModelParams,
    VisibilityRegionSpec,
)

DEFAULT_EH = EHModelParams(zeta_max=0.024, a=1500.0, b=0.0022)
# logistic regime around 0.3 W input, used by the synthetic instances
LINEAR_EH = EHModelParams(zeta_max=1.0, a=10.0, b=0.3)


def default_power(subarrays: int, elements: int = 256, p_et: float = 0.03):
    return PowerModelParams(
        efficiency=0.35,
        p_syn=0.05,
        p_ct=0.0482,
        p_et=p_et,
        subarrays=subarrays,
        elements=elements,
    )


@pytest.fixture
def make_tables():
    """Gain tables built straight from a (S, K, K) coupling array."""

    def build(coupling, n_id: int, noise: float = 0.01) -> GainTables:
        coupling = np.asarray(coupling, dtype=complex)
        n_sub, n_users, _ = coupling.shape
        eh = coupling[:, n_id:, :]
        return GainTables(
            channels=np.zeros((n_sub, n_users, 1), dtype=complex),
            coupling=coupling,
            direct=np.abs(coupling) ** 2,
            upsilon=np.einsum("smj,tmj->stmj", eh, eh.conj()),
            noise_power=np.full(n_id, noise),
            n_id=n_id,
            n_eh=n_users - n_id,
        )

    return build


@pytest.fixture
def make_power():
    def build(subarrays: int, p_s: float) -> PowerModelParams:
        # four elements keep P_s = 4 * p_et
        return default_power(subarrays, elements=4, p_et=p_s / 4)

    return build


def tiny_regions(geometry) -> list[VisibilityRegionSpec]:
    """Two ID regions off the array edges and one EH region at its center."""
    regions = []
    for kind, anchor in (("ID", -0.5), ("ID", 0.5), ("EH", 0.0)):
        cap = role_range(geometry, kind)
        regions.append(
            VisibilityRegionSpec(
                kind=kind,
                center=anchored_center(geometry, anchor),
                radial_bounds=(0.2 * cap, cap),
                elevation_bounds=(math.pi / 6, math.pi / 2),
            )
        )
    return regions


def tiny_scenario(
    subarrays: int = 4,
    seed: int = 11,
    counts: tuple[int, int] = (2, 1),
    admm: AdmmConfig = AdmmConfig(),
    delta: float = 1e-7,
):
    """S subarrays of 4x4 elements serving `counts` (ID, EH) users."""
    geometry = build_array(subarrays, 4, 4, 0.1, 0.025, 0.05)
    return assemble_scenario(
        geometry,
        tiny_regions(geometry),
        counts,
        seed,
        default_power(subarrays, elements=16),
        DEFAULT_EH,
        noise_power=1e-11,
        admm=admm,
        delta=delta,
    )


@pytest.fixture
def scenario_factory():
    return tiny_scenario
