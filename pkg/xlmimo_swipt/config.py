from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from dataclasses import field as field_
from dataclasses import replace
from pathlib import Path
from typing import Any

from xlmimo_swipt.errors import ConfigError
from xlmimo_swipt.geometry import anchored_center, build_array, role_range
from xlmimo_swipt.orchestrator import Scenario, assemble_scenario
from xlmimo_swipt.structs import (
    AdmmConfig,
    ArrayGeometry,
    EHModelParams,
    PowerModelParams,
    VisibilityRegionSpec,
)

_MISSING = object()


def mw_to_w(value: float) -> float:
    return value * 1e-3


def dbm_to_w(value: float) -> float:
    return 10 ** ((value - 30) / 10)


class _Block:
    """A JSON object being validated; records every resolved value."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", "expected an object for")
        self.data = data
        self.path = path
        self.resolved: dict[str, Any] = {}

    def _qualified(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def _raw(self, key: str, default: Any) -> Any:
        if key in self.data:
            return self.data[key]
        if default is _MISSING:
            raise ConfigError(self._qualified(key), "missing required field")
        return default

    def number(
        self,
        key: str,
        default: Any = _MISSING,
        minimum: float | None = None,
        exclusive: bool = True,
    ) -> float:
        value = self._raw(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(self._qualified(key), "expected a number for")
        if not math.isfinite(value):
            raise ConfigError(self._qualified(key), "expected a finite number for")
        if minimum is not None and (
            value <= minimum if exclusive else value < minimum
        ):
            raise ConfigError(self._qualified(key), "value out of range for")
        self.resolved[key] = value
        return float(value)

    def integer(self, key: str, default: Any = _MISSING, minimum: int = 0) -> int:
        value = self._raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(self._qualified(key), "expected an integer for")
        if value < minimum:
            raise ConfigError(self._qualified(key), "value out of range for")
        self.resolved[key] = value
        return value

    def flag(self, key: str, default: Any = _MISSING) -> bool:
        value = self._raw(key, default)
        if not isinstance(value, bool):
            raise ConfigError(self._qualified(key), "expected a boolean for")
        self.resolved[key] = value
        return value

    def pair(self, key: str, default: Any = _MISSING) -> tuple[float, float]:
        value = self._raw(key, default)
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
            )
        ):
            raise ConfigError(self._qualified(key), "expected a [low, high] pair for")
        if value[0] > value[1]:
            raise ConfigError(self._qualified(key), "value out of range for")
        self.resolved[key] = list(value)
        return float(value[0]), float(value[1])

    def numbers(self, key: str, default: Any = _MISSING) -> float | list[float] | None:
        """A number or a list of numbers."""
        value = self._raw(key, default)
        if value is None:
            return None
        items = value if isinstance(value, list) else [value]
        if not items or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in items
        ):
            raise ConfigError(self._qualified(key), "expected a number or list for")
        self.resolved[key] = value
        return [float(v) for v in value] if isinstance(value, list) else float(value)

    def block(self, key: str, optional: bool = False) -> _Block:
        value = self._raw(key, {} if optional else _MISSING)
        child = _Block(value, self._qualified(key))
        self.resolved[key] = child.resolved
        return child

    def reject_unknown(self, known: set[str]):
        for key in self.data:
            if key not in known:
                raise ConfigError(self._qualified(key), "unknown field")


@dataclass(frozen=True)
class GeometryConfig:
    subarrays: int
    nx: int
    ny: int
    wavelength: float
    element_dimension: float
    element_pitch: float
    subarray_gap: float


@dataclass(frozen=True)
class RegionConfig:
    kind: str
    anchor: float
    radius_fraction: tuple[float, float]
    azimuth: tuple[float, float]
    elevation: tuple[float, float]
    subarray_mask: tuple[bool, ...] | None = None


@dataclass(frozen=True)
class UsersConfig:
    id_users: int
    eh_users: int
    seed: int
    regions: tuple[RegionConfig, ...]


@dataclass(frozen=True)
class PowerConfig:
    amplifier_efficiency: float
    p_syn: float
    p_ct: float
    p_et: float


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 1.0
    epsilon: float = 1e-7
    delta: float = 1e-7
    max_iterations: int = 5000
    inner_steps: int = 25
    adaptive_penalty: bool = False
    warm_start: bool = True


@dataclass(frozen=True)
class ThresholdConfig:
    rate: float | list[float] | None = None
    energy: float | list[float] | None = None  # watts


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    geometry: GeometryConfig
    users: UsersConfig
    power: PowerConfig
    eh: EHModelParams
    noise_power: float | list[float]
    boresight_exponent: float
    solver: SolverConfig
    thresholds: ThresholdConfig
    trials: int
    # resolved JSON in file units, defaults filled in
    resolved: dict[str, Any] = field_(default_factory=dict, repr=False)

    def build_geometry(self) -> ArrayGeometry:
        g = self.geometry
        return build_array(
            g.subarrays,
            g.nx,
            g.ny,
            g.wavelength,
            g.element_dimension,
            g.element_pitch,
            g.subarray_gap,
        )

    def regions(self, geometry: ArrayGeometry) -> list[VisibilityRegionSpec]:
        specs = []
        for region in self.users.regions:
            cap = role_range(geometry, region.kind)
            specs.append(
                VisibilityRegionSpec(
                    kind=region.kind,  # type: ignore[arg-type]
                    center=anchored_center(geometry, region.anchor),
                    radial_bounds=(
                        region.radius_fraction[0] * cap,
                        region.radius_fraction[1] * cap,
                    ),
                    azimuth_bounds=region.azimuth,
                    elevation_bounds=region.elevation,
                    subarray_mask=region.subarray_mask,
                )
            )
        return specs

    def power_params(self) -> PowerModelParams:
        return PowerModelParams(
            efficiency=self.power.amplifier_efficiency,
            p_syn=self.power.p_syn,
            p_ct=self.power.p_ct,
            p_et=self.power.p_et,
            subarrays=self.geometry.subarrays,
            elements=self.geometry.nx * self.geometry.ny,
        )

    def admm_config(self) -> AdmmConfig:
        s = self.solver
        return AdmmConfig(
            tau=s.tau,
            epsilon=s.epsilon,
            max_iterations=s.max_iterations,
            inner_steps=s.inner_steps,
            adaptive_penalty=s.adaptive_penalty,
            warm_start=s.warm_start,
        )

    def with_overrides(
        self,
        seed: int | None = None,
        trials: int | None = None,
        subarrays: int | None = None,
        p_et_mw: float | None = None,
        rate_bps_hz: float | None = None,
        energy_mw: float | None = None,
    ) -> ScenarioConfig:
        resolved = copy.deepcopy(self.resolved)
        updated = self
        if seed is not None:
            resolved["users"]["seed"] = seed
            updated = replace(updated, users=replace(updated.users, seed=seed))
        if trials is not None:
            if trials < 1:
                raise ConfigError("trials", "value out of range for")
            resolved["trials"] = trials
            updated = replace(updated, trials=trials)
        if subarrays is not None:
            if subarrays < 1:
                raise ConfigError("geometry.subarrays", "value out of range for")
            for i, region in enumerate(updated.users.regions):
                mask = region.subarray_mask
                if mask is not None and len(mask) != subarrays:
                    raise ConfigError(
                        f"users.regions[{i}].subarray_mask", "invalid subarray mask"
                    )
            resolved["geometry"]["subarrays"] = subarrays
            updated = replace(
                updated, geometry=replace(updated.geometry, subarrays=subarrays)
            )
        if p_et_mw is not None:
            if p_et_mw <= 0:
                raise ConfigError("power.p_et_mw", "value out of range for")
            resolved["power"]["p_et_mw"] = p_et_mw
            updated = replace(
                updated, power=replace(updated.power, p_et=mw_to_w(p_et_mw))
            )
        if rate_bps_hz is not None or energy_mw is not None:
            thresholds = resolved.setdefault("thresholds", {})
            rate, energy = updated.thresholds.rate, updated.thresholds.energy
            if rate_bps_hz is not None:
                thresholds["rate_bps_hz"] = rate = rate_bps_hz
            if energy_mw is not None:
                thresholds["energy_mw"] = energy_mw
                energy = mw_to_w(energy_mw)
            updated = replace(updated, thresholds=ThresholdConfig(rate, energy))
        return replace(updated, resolved=resolved)

    def to_dict(self) -> dict[str, Any]:
        return copy.deepcopy(self.resolved)


_TOP_LEVEL = {
    "geometry",
    "users",
    "power",
    "eh",
    "noise",
    "channel",
    "solver",
    "thresholds",
    "trials",
}


def _parse_region(
    data: Any, path: str, subarrays: int
) -> tuple[RegionConfig, dict[str, Any]]:
    block = _Block(data, path)
    block.reject_unknown(
        {
            "kind",
            "anchor",
            "radius_fraction",
            "azimuth_deg",
            "elevation_deg",
            "subarray_mask",
        }
    )
    kind = block._raw("kind", _MISSING)
    if kind not in ("ID", "EH"):
        raise ConfigError(f"{path}.kind", "expected 'ID' or 'EH' for")
    block.resolved["kind"] = kind
    anchor = block.number("anchor", 0.0, minimum=-1.0, exclusive=False)
    if anchor > 1:
        raise ConfigError(f"{path}.anchor", "value out of range for")
    radius = block.pair("radius_fraction", [0.1, 1.0])
    if not 0 < radius[0] < radius[1] <= 1:
        raise ConfigError(f"{path}.radius_fraction", "value out of range for")
    azimuth = block.pair("azimuth_deg", [0.0, 360.0])
    elevation = block.pair("elevation_deg", [30.0, 90.0])
    if not 0 < elevation[0] <= elevation[1] <= 90:
        raise ConfigError(f"{path}.elevation_deg", "value out of range for")

    mask = block._raw("subarray_mask", None)
    if mask is not None:
        if (
            not isinstance(mask, list)
            or len(mask) != subarrays
            or not all(isinstance(m, bool) for m in mask)
            or not any(mask)
        ):
            raise ConfigError(f"{path}.subarray_mask", "invalid subarray mask")
        block.resolved["subarray_mask"] = mask
    region = RegionConfig(
        kind=kind,
        anchor=anchor,
        radius_fraction=radius,
        azimuth=(math.radians(azimuth[0]), math.radians(azimuth[1])),
        elevation=(math.radians(elevation[0]), math.radians(elevation[1])),
        subarray_mask=tuple(mask) if mask is not None else None,
    )
    return region, block.resolved


def parse_config(data: Any) -> ScenarioConfig:
    root = _Block(data, "")
    root.reject_unknown(_TOP_LEVEL)

    g = root.block("geometry")
    g.reject_unknown(
        {
            "subarrays",
            "nx",
            "ny",
            "wavelength_m",
            "element_dimension_m",
            "element_pitch_m",
            "subarray_gap_m",
        }
    )
    wavelength = g.number("wavelength_m", minimum=0.0)
    geometry = GeometryConfig(
        subarrays=g.integer("subarrays", minimum=1),
        nx=g.integer("nx", minimum=1),
        ny=g.integer("ny", minimum=1),
        wavelength=wavelength,
        element_dimension=g.number("element_dimension_m", minimum=0.0),
        element_pitch=g.number("element_pitch_m", wavelength / 2, minimum=0.0),
        subarray_gap=g.number("subarray_gap_m", 0.0, minimum=0.0, exclusive=False),
    )

    u = root.block("users")
    u.reject_unknown({"id_users", "eh_users", "seed", "regions"})
    regions_data = u._raw("regions", _MISSING)
    if not isinstance(regions_data, list) or not regions_data:
        raise ConfigError("users.regions", "expected a nonempty list for")
    parsed = [
        _parse_region(r, f"users.regions[{i}]", geometry.subarrays)
        for i, r in enumerate(regions_data)
    ]
    regions = tuple(region for region, _ in parsed)
    u.resolved["regions"] = [resolved for _, resolved in parsed]
    users = UsersConfig(
        id_users=u.integer("id_users"),
        eh_users=u.integer("eh_users"),
        seed=u.integer("seed", 0),
        regions=regions,
    )
    if users.id_users + users.eh_users == 0:
        raise ConfigError("users", "no users configured in")

    p = root.block("power")
    p.reject_unknown({"amplifier_efficiency", "p_syn_mw", "p_ct_mw", "p_et_mw"})
    efficiency = p.number("amplifier_efficiency", minimum=0.0)
    if efficiency > 1:
        raise ConfigError("power.amplifier_efficiency", "value out of range for")
    power = PowerConfig(
        amplifier_efficiency=efficiency,
        p_syn=mw_to_w(p.number("p_syn_mw", minimum=0.0)),
        p_ct=mw_to_w(p.number("p_ct_mw", minimum=0.0)),
        p_et=mw_to_w(p.number("p_et_mw", minimum=0.0)),
    )

    e = root.block("eh")
    e.reject_unknown({"zeta_max_mw", "a_per_w", "b_w"})
    eh = EHModelParams(
        zeta_max=mw_to_w(e.number("zeta_max_mw", minimum=0.0)),
        a=e.number("a_per_w", minimum=0.0),
        b=e.number("b_w"),
    )

    n = root.block("noise")
    n.reject_unknown({"sigma2_dbm"})
    sigma2 = n.numbers("sigma2_dbm")
    if isinstance(sigma2, list):
        if len(sigma2) != users.id_users:
            raise ConfigError("noise.sigma2_dbm", "expected one entry per ID user in")
        noise_power: float | list[float] = [dbm_to_w(v) for v in sigma2]
    else:
        noise_power = dbm_to_w(sigma2)  # type: ignore[arg-type]

    c = root.block("channel", optional=True)
    c.reject_unknown({"boresight_exponent"})
    boresight = c.number("boresight_exponent", 2.0, minimum=0.0, exclusive=False)

    s = root.block("solver", optional=True)
    s.reject_unknown(
        {
            "tau",
            "epsilon_w",
            "delta_w",
            "max_iterations",
            "inner_steps",
            "adaptive_penalty",
            "warm_start",
        }
    )
    solver = SolverConfig(
        tau=s.number("tau", 1.0, minimum=0.0),
        epsilon=s.number("epsilon_w", 1e-7, minimum=0.0),
        delta=s.number("delta_w", 1e-7, minimum=0.0),
        max_iterations=s.integer("max_iterations", 5000, minimum=1),
        inner_steps=s.integer("inner_steps", 25, minimum=1),
        adaptive_penalty=s.flag("adaptive_penalty", False),
        warm_start=s.flag("warm_start", True),
    )

    t = root.block("thresholds", optional=True)
    t.reject_unknown({"rate_bps_hz", "energy_mw"})
    rate = t.numbers("rate_bps_hz", None)
    energy = t.numbers("energy_mw", None)
    if isinstance(energy, list):
        energy = [mw_to_w(v) for v in energy]
    elif energy is not None:
        energy = mw_to_w(energy)

    return ScenarioConfig(
        geometry=geometry,
        users=users,
        power=power,
        eh=eh,
        noise_power=noise_power,
        boresight_exponent=boresight,
        solver=solver,
        thresholds=ThresholdConfig(rate=rate, energy=energy),
        trials=root.integer("trials", 1, minimum=1),
        resolved=root.resolved,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(str(path), f"cannot read ({e.strerror})")
    except json.JSONDecodeError as e:
        raise ConfigError(str(path), f"malformed JSON at line {e.lineno} in")
    return parse_config(data)


def build_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    geometry = config.build_geometry()
    return assemble_scenario(
        geometry,
        config.regions(geometry),
        (config.users.id_users, config.users.eh_users),
        seed,
        config.power_params(),
        config.eh,
        config.noise_power,
        boresight_exponent=config.boresight_exponent,
        admm=config.admm_config(),
        delta=config.solver.delta,
        rate_override=config.thresholds.rate,
        energy_override=config.thresholds.energy,
    )
