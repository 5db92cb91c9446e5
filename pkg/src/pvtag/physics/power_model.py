"""Tag power states.

A tag is OFF, PASSIVE (RF alone wakes the IC), ASSISTED (PV powers the IC
logic so the lower assisted sensitivity applies) or SENSOR_ACTIVE (PV also
covers at least one auxiliary load). Power balance is instantaneous; there is
no storage element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional, Tuple

from pvtag.errors import DomainError
from pvtag.physics.harvester import PvOutput
from pvtag.physics.rf_link import ReaderProfile, TagRfProfile, free_space_path_loss_db, max_read_range

MIN_LOAD_W = 1e-6
MAX_LOAD_W = 10e-3


class TagMode(IntEnum):
    OFF = 0
    PASSIVE = 1
    ASSISTED = 2
    SENSOR_ACTIVE = 3

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Load:
    name: str
    draw: float  # W
    min_voltage: float  # V

    def __post_init__(self) -> None:
        if not MIN_LOAD_W <= self.draw <= MAX_LOAD_W:
            raise DomainError(
                f"load '{self.name}' draw {self.draw * 1e6:.3g} uW is outside "
                f"[{MIN_LOAD_W * 1e6:.0f}, {MAX_LOAD_W * 1e6:.0f}] uW"
            )
        if not self.min_voltage > 0:
            raise DomainError(f"load '{self.name}' min_voltage must be > 0 V (got {self.min_voltage} V)")


TEMPERATURE_LOAD = Load("temperature", 15e-6, 0.5)
ORIENTATION_LOAD = Load("orientation", 350e-6, 3.0)


@dataclass(frozen=True)
class LoadProfile:
    ic_idle: float = 10e-6  # W
    loads: Tuple[Load, ...] = ()

    def __post_init__(self) -> None:
        if not MIN_LOAD_W <= self.ic_idle <= MAX_LOAD_W:
            raise DomainError(f"ic_idle {self.ic_idle * 1e6:.3g} uW is outside [1, 10000] uW")
        names = [load.name for load in self.loads]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate load names in profile: {names}")

    def has_load(self, name: str) -> bool:
        return any(load.name == name for load in self.loads)


@dataclass(frozen=True)
class TagPowerState:
    mode: TagMode
    active_loads: Tuple[str, ...] = field(default_factory=tuple)
    margin: float = 0.0  # W of unused PV power


def _select_loads(
    budget: float,
    vmpp: float,
    loads: Iterable[Load],
    select: Optional[Iterable[str]],
) -> Tuple[Tuple[str, ...], float]:
    wanted = None if select is None else set(select)
    active = []
    used = 0.0
    for load in loads:
        if wanted is not None and load.name not in wanted:
            continue
        if load.min_voltage > vmpp:
            continue
        if used + load.draw > budget:
            # declared order is priority; a lower-priority load never jumps the queue
            break
        active.append(load.name)
        used += load.draw
    return tuple(active), used


def evaluate_state(
    rf_in: float,
    pv: PvOutput,
    rf_profile: TagRfProfile,
    loads: LoadProfile,
    select: Optional[Iterable[str]] = None,
) -> TagPowerState:
    """Decide the tag mode from RF input power and PV output (both W)."""
    pv_power = max(pv.power, 0.0)
    if pv_power >= loads.ic_idle and rf_in >= rf_profile.assisted_sensitivity:
        active, used = _select_loads(pv_power - loads.ic_idle, pv.vmpp, loads.loads, select)
        mode = TagMode.SENSOR_ACTIVE if active else TagMode.ASSISTED
        return TagPowerState(mode=mode, active_loads=active, margin=pv_power - loads.ic_idle - used)
    if rf_in >= rf_profile.passive_sensitivity:
        return TagPowerState(mode=TagMode.PASSIVE, margin=pv_power)
    return TagPowerState(mode=TagMode.OFF, margin=pv_power)


def effective_sensitivity(target: TagMode, rf_profile: TagRfProfile) -> float:
    """IC wake threshold (W) that applies when operating in ``target`` mode."""
    if target is TagMode.PASSIVE:
        return rf_profile.passive_sensitivity
    if target in (TagMode.ASSISTED, TagMode.SENSOR_ACTIVE):
        return rf_profile.assisted_sensitivity
    raise DomainError("an OFF tag has no wake threshold")


@dataclass(frozen=True)
class RangeReport:
    passive_range: float  # m
    assisted_range: float  # m
    notes: str = ""

    @property
    def ratio(self) -> float:
        if self.passive_range == 0.0:
            return math.inf if self.assisted_range > 0 else math.nan
        return self.assisted_range / self.passive_range


def _range_note(label: str, distance: float, reader: ReaderProfile) -> str:
    if distance <= 0:
        return f"{label} unreachable"
    loss = free_space_path_loss_db(distance, reader.carrier_frequency)
    return f"{label} {distance:.2f} m (path loss {loss:.2f} dB)"


def read_ranges(reader: ReaderProfile, rf_profile: TagRfProfile) -> RangeReport:
    """Read range with RF power alone and with PV-assisted IC logic."""
    passive = max_read_range(reader, rf_profile, effective_sensitivity(TagMode.PASSIVE, rf_profile))
    assisted = max_read_range(reader, rf_profile, effective_sensitivity(TagMode.ASSISTED, rf_profile))
    notes = ", ".join(_range_note(label, r, reader) for label, r in (("passive", passive), ("assisted", assisted)))
    return RangeReport(passive_range=passive, assisted_range=assisted, notes=notes)
