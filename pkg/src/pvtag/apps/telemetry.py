from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

from pvtag.errors import ConfigError
from pvtag.physics.power_model import TagMode
from pvtag.sim.inventory import Scenario, run_inventory

logger = logging.getLogger(__name__)

TEMPERATURE_LOAD_NAME = "temperature"
DEFAULT_QUANTIZATION_C = 0.25


@dataclass(frozen=True)
class TelemetryReading:
    time_index: int
    temperature: Optional[float]  # degC, None when nothing was reported


def quantize(value: float, step: float) -> float:
    if not step:
        return value
    return math.floor(value / step + 0.5) * step


def simulate_telemetry(
    scenario: Scenario,
    tag_id: str,
    true_temperature_series: Sequence[float],
    quantization: float = DEFAULT_QUANTIZATION_C,
) -> List[TelemetryReading]:
    """One round per temperature sample; a value is reported only when the
    temperature load was powered and the round read the tag."""
    tag = scenario.tag(tag_id)
    if not tag.loads.has_load(TEMPERATURE_LOAD_NAME):
        raise ConfigError(f"tag '{tag_id}' declares no '{TEMPERATURE_LOAD_NAME}' load")
    if not (quantization >= 0 and math.isfinite(quantization)):
        raise ConfigError(f"quantization must be a finite value >= 0 degC (got {quantization})")
    bad = [t for t, v in enumerate(true_temperature_series) if not math.isfinite(v)]
    if bad:
        raise ConfigError(f"temperature series must be finite (rounds {bad[:5]} are not)")

    result = run_inventory(replace(scenario, rounds=len(true_temperature_series)))
    read_at = {s.time_index for s in result.trace.for_tag(tag_id).samples if s.read_success}
    states = result.states[tag_id]

    readings = []
    for t, temp in enumerate(true_temperature_series):
        state = states[t]
        sensing = state.mode is TagMode.SENSOR_ACTIVE and TEMPERATURE_LOAD_NAME in state.active_loads
        value = quantize(float(temp), quantization) if sensing and t in read_at else None
        readings.append(TelemetryReading(t, value))
    logger.info(
        "telemetry for '%s': %d of %d rounds reported",
        tag_id, sum(r.temperature is not None for r in readings), len(readings),
    )
    return readings
