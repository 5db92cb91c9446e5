"""Flexible perovskite PV harvester model.

Constant-efficiency model: P = eta * G * A * bending_factor. Series cells add
voltage, parallel strings add area.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Union

import pandas as pd

from pvtag.errors import DomainError

logger = logging.getLogger(__name__)

FLAT = "flat"
BendRadius = Union[float, str, None]

MIN_TESTED_RADIUS_MM = 5.0
NO_LOSS_RADIUS_MM = 20.0
MIN_RADIUS_FACTOR = 0.80
MAX_CELL_EFFICIENCY = 0.35


class EnvClass(str, Enum):
    OUTDOOR_SUN = "outdoor_sun"
    INDOOR_LIT = "indoor_lit"


DEFAULT_IRRADIANCE_W_CM2 = {
    EnvClass.OUTDOOR_SUN: 100e-3,
    EnvClass.INDOOR_LIT: 100e-6,
}


def is_flat(radius: BendRadius) -> bool:
    return radius is None or (isinstance(radius, str) and radius.strip().lower() == FLAT)


def bending_factor(radius: BendRadius) -> float:
    """Fraction of flat efficiency kept at bend ``radius`` (mm).

    1.0 from 20 mm up, 0.80 at 5 mm, log-linear in between.
    """
    if is_flat(radius):
        return 1.0
    if isinstance(radius, str):
        raise DomainError(f"bend radius must be a number of mm or 'flat' (got {radius!r})")
    r = float(radius)
    if not r >= MIN_TESTED_RADIUS_MM:
        raise DomainError(
            f"bend radius {r} mm is below the tested range (>= {MIN_TESTED_RADIUS_MM} mm)"
        )
    if r >= NO_LOSS_RADIUS_MM:
        return 1.0
    span = math.log2(NO_LOSS_RADIUS_MM / MIN_TESTED_RADIUS_MM)
    return MIN_RADIUS_FACTOR + (1.0 - MIN_RADIUS_FACTOR) * math.log2(r / MIN_TESTED_RADIUS_MM) / span


@dataclass(frozen=True)
class PvCellSpec:
    efficiency: float = 0.13
    vmpp: float = 0.88  # V
    active_area: float = 1.0  # cm^2
    indoor_efficiency: Optional[float] = None

    def __post_init__(self) -> None:
        for name, eta in (("efficiency", self.efficiency), ("indoor_efficiency", self.indoor_efficiency)):
            if eta is None:
                continue
            if not 0.0 < eta < MAX_CELL_EFFICIENCY:
                raise DomainError(f"{name} must be in (0, {MAX_CELL_EFFICIENCY}) (got {eta})")
        if not self.vmpp > 0:
            raise DomainError(f"vmpp must be > 0 V (got {self.vmpp} V)")
        if not self.active_area > 0:
            raise DomainError(f"active_area must be > 0 cm2 (got {self.active_area} cm2)")

    def efficiency_for(self, env: "IlluminationEnv") -> float:
        if env.env_class is EnvClass.INDOOR_LIT and self.indoor_efficiency is not None:
            return self.indoor_efficiency
        return self.efficiency


@dataclass(frozen=True)
class PvModuleSpec:
    cell: PvCellSpec
    series_count: int = 1
    parallel_count: int = 1
    bend_radius: BendRadius = FLAT  # mm

    def __post_init__(self) -> None:
        if self.series_count < 1 or self.parallel_count < 1:
            raise DomainError(
                f"series/parallel counts must be positive integers "
                f"(got {self.series_count}s{self.parallel_count}p)"
            )
        bending_factor(self.bend_radius)

    @property
    def vmpp(self) -> float:
        return self.series_count * self.cell.vmpp

    @property
    def total_area(self) -> float:
        return self.series_count * self.parallel_count * self.cell.active_area


@dataclass(frozen=True)
class IlluminationEnv:
    irradiance: float  # W/cm^2
    env_class: EnvClass = EnvClass.INDOOR_LIT

    def __post_init__(self) -> None:
        if not self.irradiance > 0:
            raise DomainError(f"irradiance must be > 0 W/cm2 (got {self.irradiance})")

    @classmethod
    def for_class(cls, env_class: Union[EnvClass, str], irradiance: Optional[float] = None) -> "IlluminationEnv":
        env_class = EnvClass(env_class)
        if irradiance is None:
            irradiance = DEFAULT_IRRADIANCE_W_CM2[env_class]
        return cls(irradiance=irradiance, env_class=env_class)


class PvOutput(NamedTuple):
    power: float  # W
    vmpp: float  # V


NO_PV = PvOutput(0.0, 0.0)


def module_power(module: PvModuleSpec, env: IlluminationEnv) -> PvOutput:
    power = (
        module.cell.efficiency_for(env)
        * env.irradiance
        * module.total_area
        * bending_factor(module.bend_radius)
    )
    return PvOutput(power=power, vmpp=module.vmpp)


def required_area(load_power: float, cell: PvCellSpec, env: IlluminationEnv, bend: BendRadius = FLAT) -> float:
    """Smallest active area (cm^2) that covers ``load_power`` watts."""
    if not load_power > 0:
        raise DomainError(f"load power must be > 0 W (got {load_power} W)")
    return load_power / (cell.efficiency_for(env) * env.irradiance * bending_factor(bend))


def series_cells_for(min_voltage: float, cell: PvCellSpec) -> int:
    if not min_voltage > 0:
        raise DomainError(f"min_voltage must be > 0 V (got {min_voltage} V)")
    return max(1, math.ceil(min_voltage / cell.vmpp - 1e-12))


def size_module(
    load_power: float,
    min_voltage: float,
    cell: PvCellSpec,
    env: IlluminationEnv,
    bend: BendRadius = FLAT,
) -> PvModuleSpec:
    """Single-string module meeting both the voltage gate and the load."""
    n = series_cells_for(min_voltage, cell)
    area = required_area(load_power, cell, env, bend)
    sized = PvCellSpec(
        efficiency=cell.efficiency,
        vmpp=cell.vmpp,
        active_area=area / n,
        indoor_efficiency=cell.indoor_efficiency,
    )
    logger.debug("sized module: %d cells of %.6g cm2", n, sized.active_area)
    return PvModuleSpec(cell=sized, series_count=n, parallel_count=1, bend_radius=bend)


# Harvested power densities of alternative sources, W per cm^2 (cm^3 for vibration).
SOURCE_DENSITIES = [
    ("perovskite_pv", "outdoor", 100e-3, "cm2", True),
    ("perovskite_pv", "indoor_light_fixture", 100e-6, "cm2", True),
    ("rf_harvester", "wifi", 0.015e-6, "cm2", False),
    ("rf_harvester", "gsm", 0.03e-6, "cm2", False),
    ("thermoelectric", "skin_to_ambient", 100e-6, "cm2", False),
    ("vibration", "machine_motion", 800e-6, "cm3", False),
]


def source_area_table(load_power: float, cell: Optional[PvCellSpec] = None) -> pd.DataFrame:
    """Size every harvesting source for ``load_power`` watts, smallest first.

    PV rows apply the cell efficiency to the incident density; the other
    densities are already harvested power.
    """
    if not load_power > 0:
        raise DomainError(f"load power must be > 0 W (got {load_power} W)")
    cell = cell or PvCellSpec()
    rows = []
    for source, environment, density, unit, is_pv in SOURCE_DENSITIES:
        usable = density * cell.efficiency if is_pv else density
        rows.append({
            "source": source,
            "environment": environment,
            "density_uw_per_unit": density * 1e6,
            "usable_uw_per_unit": usable * 1e6,
            "required_size": load_power / usable,
            "unit": unit,
        })
    return (
        pd.DataFrame(rows)
        .sort_values(["required_size", "source"], kind="mergesort")
        .reset_index(drop=True)
    )
