"""Slot-level inventory simulator.

Each round every powered tag picks a slot in [0, 2^Q - 1]. A slot holding
exactly one tag is a read; the reader logs that tag's reply power with
Gaussian noise in dB. Q moves by +/- q_step on each collided/empty slot, clamped
to [0, 15]; once the rounded value changes the frame ends and the rest of its
slots go unread.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pvtag.errors import ConfigError, DomainError
from pvtag.physics.harvester import NO_PV, IlluminationEnv, PvModuleSpec, PvOutput, module_power
from pvtag.physics.power_model import LoadProfile, TagMode, TagPowerState, evaluate_state
from pvtag.physics.rf_link import ReaderProfile, TagRfProfile, forward_link_power, reverse_link_rssi
from pvtag.sim.traces import RssiSample, RssiTrace

logger = logging.getLogger(__name__)

Q_MIN, Q_MAX = 0, 15
DEFAULT_Q_STEP = 0.2

Vector3 = Tuple[float, float, float]


@dataclass(frozen=True)
class TagPlacement:
    tag_id: str
    position: Vector3  # m
    rf: TagRfProfile = field(default_factory=TagRfProfile)
    pv_module: Optional[PvModuleSpec] = None
    loads: LoadProfile = field(default_factory=LoadProfile)
    backscatter_gain: float = 1.0

    def __post_init__(self) -> None:
        if len(self.position) != 3:
            raise ConfigError(f"tag '{self.tag_id}' position must have 3 components (m)")
        if not 0.0 < self.backscatter_gain <= 1.0:
            raise DomainError(f"tag '{self.tag_id}' backscatter_gain must be in (0, 1]")


@dataclass(frozen=True)
class LightWindow:
    """Irradiance scale applied on rounds start_round..end_round inclusive."""

    start_round: int
    end_round: int
    scale: float

    def covers(self, t: int) -> bool:
        return self.start_round <= t <= self.end_round


@dataclass(frozen=True)
class Disturbance:
    """RSSI offset (dB) on one tag for rounds start_round..end_round inclusive."""

    tag_id: str
    start_round: int
    end_round: int
    offset_db: float

    def covers(self, t: int) -> bool:
        return self.start_round <= t <= self.end_round


@dataclass(frozen=True)
class Scenario:
    reader: ReaderProfile
    tags: Tuple[TagPlacement, ...]
    env: IlluminationEnv
    rounds: int = 100
    q_init: int = 4
    rssi_noise_sigma: float = 0.0  # dB
    seed: int = 0
    q_step: float = DEFAULT_Q_STEP
    reader_position: Vector3 = (0.0, 0.0, 0.0)
    light_schedule: Tuple[LightWindow, ...] = ()
    disturbances: Tuple[Disturbance, ...] = ()

    def __post_init__(self) -> None:
        ids = [t.tag_id for t in self.tags]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"tag ids must be unique (got {ids})")
        if not Q_MIN <= self.q_init <= Q_MAX:
            raise ConfigError(f"q_init must be in [{Q_MIN}, {Q_MAX}] (got {self.q_init})")
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0 (got {self.rounds})")
        if self.rssi_noise_sigma < 0:
            raise ConfigError(f"rssi_noise_sigma_db must be >= 0 (got {self.rssi_noise_sigma})")
        if self.q_step < 0:
            raise ConfigError(f"q_step must be >= 0 (got {self.q_step})")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer (got {self.seed})")
        for w in self.light_schedule:
            if w.scale < 0 or w.end_round < w.start_round:
                raise ConfigError(f"invalid light window {w}")
        for d in self.disturbances:
            if d.tag_id not in ids:
                raise ConfigError(f"disturbance names unknown tag '{d.tag_id}' (valid ids: {sorted(ids)})")
            if d.end_round < d.start_round:
                raise ConfigError(f"invalid disturbance window {d}")
        for t in self.tags:
            if not tag_distance(self, t) > 0:
                raise DomainError(f"tag '{t.tag_id}' sits on the reader; distance must be > 0 m")

    def tag(self, tag_id: str) -> TagPlacement:
        for t in self.tags:
            if t.tag_id == tag_id:
                return t
        raise ConfigError(f"unknown tag id '{tag_id}' (valid ids: {sorted(t.tag_id for t in self.tags)})")


def tag_distance(scenario: Scenario, tag: TagPlacement) -> float:
    return math.dist(scenario.reader_position, tag.position)


def irradiance_scale(scenario: Scenario, t: int) -> float:
    # later windows override earlier ones
    scale = 1.0
    for w in scenario.light_schedule:
        if w.covers(t):
            scale = w.scale
    return scale


def pv_output(scenario: Scenario, tag: TagPlacement, t: int = 0) -> PvOutput:
    if tag.pv_module is None:
        return NO_PV
    full = module_power(tag.pv_module, scenario.env)
    return PvOutput(full.power * irradiance_scale(scenario, t), full.vmpp)


def tag_state_at(scenario: Scenario, tag: TagPlacement, t: int = 0) -> TagPowerState:
    rf_in = forward_link_power(scenario.reader, tag.rf, tag_distance(scenario, tag)).received_power
    return evaluate_state(rf_in, pv_output(scenario, tag, t), tag.rf, tag.loads)


def _rssi_offset(scenario: Scenario, tag_id: str, t: int) -> float:
    return sum(d.offset_db for d in scenario.disturbances if d.tag_id == tag_id and d.covers(t))


@dataclass
class InventoryResult:
    read_counts: Dict[str, int]
    trace: RssiTrace
    states: Dict[str, List[TagPowerState]]
    slots: int = 0
    successes: int = 0
    collisions: int = 0
    empties: int = 0
    final_q: float = 0.0
    q_trace: List[int] = field(default_factory=list)  # Q used by each round
    notes: str = ""

    @property
    def success_fraction(self) -> float:
        """Successful slots over all slots offered."""
        return self.successes / self.slots if self.slots else 0.0


def _rounded_q(qfp: float) -> int:
    return int(math.floor(qfp + 0.5))


def _run_frame(occupancy: np.ndarray, qfp: float, step: float) -> Tuple[int, float]:
    """Walk one frame slot by slot; returns (slots processed, new Qfp).

    Qfp moves after every empty or collided slot. The frame ends as soon as
    the rounded value leaves the frame's Q, and the next round starts a new
    frame at the new Q.
    """
    if step == 0.0:
        return len(occupancy), qfp
    q = _rounded_q(qfp)
    for i, n in enumerate(occupancy):
        if n == 0:
            qfp = max(float(Q_MIN), qfp - step)
        elif n > 1:
            qfp = min(float(Q_MAX), qfp + step)
        if _rounded_q(qfp) != q:
            return i + 1, qfp
    return len(occupancy), qfp


def run_inventory(scenario: Scenario) -> InventoryResult:
    rng = np.random.default_rng(scenario.seed)
    tags = sorted(scenario.tags, key=lambda t: t.tag_id)
    base_rssi: Dict[str, float] = {}
    read_counts = {t.tag_id: 0 for t in tags}
    states: Dict[str, List[TagPowerState]] = {t.tag_id: [] for t in tags}
    samples: List[RssiSample] = []
    slots = successes = collisions = empties = 0
    qfp = float(scenario.q_init)
    q_trace: List[int] = []

    for t in range(scenario.rounds):
        powered = []
        for tag in tags:
            state = tag_state_at(scenario, tag, t)
            states[tag.tag_id].append(state)
            if state.mode >= TagMode.PASSIVE:
                powered.append((tag, state))

        q = _rounded_q(qfp)
        q_trace.append(q)
        n_slots = 2 ** q
        picks = rng.integers(0, n_slots, size=len(powered))
        noise = rng.normal(0.0, scenario.rssi_noise_sigma, size=len(powered))
        occupancy = np.bincount(picks, minlength=n_slots)

        processed, qfp = _run_frame(occupancy, qfp, scenario.q_step)
        # tags whose slot lies past an early frame end are not read this round
        seen = occupancy[:processed]
        slots += processed
        successes += int(np.count_nonzero(seen == 1))
        collisions += int(np.count_nonzero(seen > 1))
        empties += int(np.count_nonzero(seen == 0))

        for (tag, state), slot, eps in zip(powered, picks, noise):
            if tag.tag_id not in base_rssi:
                base_rssi[tag.tag_id] = reverse_link_rssi(
                    scenario.reader, tag.rf, tag_distance(scenario, tag), tag.backscatter_gain
                )
            ok = bool(slot < processed and occupancy[slot] == 1)
            if ok:
                read_counts[tag.tag_id] += 1
            rssi = base_rssi[tag.tag_id] + _rssi_offset(scenario, tag.tag_id, t) + float(eps)
            samples.append(RssiSample(t, tag.tag_id, rssi, ok, state.mode.label))

    notes = (
        f"{scenario.rounds} rounds, {successes} reads in {slots} slots "
        f"({collisions} collided, {empties} empty); final Q {qfp:.1f}"
    )
    logger.info(notes)
    return InventoryResult(
        read_counts=read_counts,
        trace=RssiTrace(tuple(samples)),
        states=states,
        slots=slots,
        successes=successes,
        collisions=collisions,
        empties=empties,
        final_q=qfp,
        q_trace=q_trace,
        notes=notes,
    )


@dataclass(frozen=True)
class SweepPoint:
    distance: float  # m
    mode: TagMode
    read_success_probability: float


def _moved(scenario: Scenario, tag: TagPlacement, distance: float) -> TagPlacement:
    origin = np.asarray(scenario.reader_position, dtype=float)
    direction = np.asarray(tag.position, dtype=float) - origin
    direction = direction / np.linalg.norm(direction)
    position = tuple(float(x) for x in origin + direction * distance)
    return replace(tag, position=position)


def range_sweep(
    scenario: Scenario,
    tag_id: str,
    distances: Sequence[float],
    trials: int = 50,
) -> List[SweepPoint]:
    """Read probability of ``tag_id`` moved along its bearing to each distance.

    Every other tag stays where the scenario puts it, so collisions count.
    """
    tag = scenario.tag(tag_id)
    if trials < 1:
        raise ConfigError(f"trials must be >= 1 (got {trials})")
    points = []
    for d in distances:
        if not d > 0:
            raise DomainError(f"sweep distance must be > 0 m (got {d} m)")
        moved = _moved(scenario, tag, float(d))
        others = tuple(moved if t.tag_id == tag_id else t for t in scenario.tags)
        run = replace(scenario, tags=others, rounds=trials)
        result = run_inventory(run)
        points.append(SweepPoint(
            distance=float(d),
            mode=tag_state_at(run, moved, 0).mode,
            read_success_probability=result.read_counts[tag_id] / trials,
        ))
    return points
