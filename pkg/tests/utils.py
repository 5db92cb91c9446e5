from __future__ import annotations

from pathlib import Path

from pvtag.physics.harvester import IlluminationEnv
from pvtag.physics.power_model import LoadProfile
from pvtag.physics.rf_link import ReaderProfile
from pvtag.sim.inventory import Scenario, TagPlacement

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"

# tau that puts the assisted (-23 dBm) range at 5 m and the passive (-9 dBm) one at ~1 m
CALIBRATED_TAU = 0.01587


def make_tag(tag_id: str, x: float, **kwargs) -> TagPlacement:
    kwargs.setdefault("loads", LoadProfile())
    return TagPlacement(tag_id=tag_id, position=(x, 0.0, 0.0), **kwargs)


def make_scenario(reader: ReaderProfile, tags, env: IlluminationEnv, **kwargs) -> Scenario:
    return Scenario(reader=reader, tags=tuple(tags), env=env, **kwargs)
