from __future__ import annotations

from dataclasses import replace

import pytest

from pvtag.apps.telemetry import quantize, simulate_telemetry
from pvtag.config import load_config
from pvtag.errors import ConfigError
from pvtag.physics.harvester import IlluminationEnv, PvCellSpec, PvModuleSpec
from pvtag.physics.power_model import TEMPERATURE_LOAD, LoadProfile, TagMode
from pvtag.physics.rf_link import ReaderProfile, TagRfProfile
from pvtag.sim.inventory import LightWindow, run_inventory, tag_state_at

from tests.utils import CALIBRATED_TAU, SCENARIO_DIR, make_scenario, make_tag

READER = ReaderProfile(transmit_power=1.0)
OUTDOOR = IlluminationEnv.for_class("outdoor_sun")
INDOOR = IlluminationEnv.for_class("indoor_lit")
SENSING = LoadProfile(ic_idle=10e-6, loads=(TEMPERATURE_LOAD,))
ONE_MM2 = PvModuleSpec(cell=PvCellSpec(efficiency=0.13, vmpp=0.88, active_area=0.01))
ONE_CM2 = PvModuleSpec(cell=PvCellSpec(efficiency=0.13, vmpp=0.88, active_area=1.0))

SERIES = [4.0 + 0.01 * i for i in range(60)]


def test_quantize():
    assert quantize(4.13, 0.25) == pytest.approx(4.25)
    assert quantize(4.12, 0.25) == pytest.approx(4.0)
    assert quantize(-0.3, 0.25) == pytest.approx(-0.25)
    assert quantize(4.13, 0.0) == 4.13


def test_sunlit_millimetre_cell_reports_every_read():
    tag = make_tag("jug", 2.0, pv_module=ONE_MM2, loads=SENSING)
    scenario = make_scenario(READER, [tag], OUTDOOR, q_init=0)
    assert tag_state_at(scenario, tag).mode is TagMode.SENSOR_ACTIVE
    readings = simulate_telemetry(scenario, "jug", SERIES, quantization=0.25)
    assert len(readings) == len(SERIES)
    assert [r.time_index for r in readings] == list(range(len(SERIES)))
    assert all(r.temperature == pytest.approx(quantize(v, 0.25)) for r, v in zip(readings, SERIES))


def test_without_pv_nothing_is_reported():
    tag = make_tag("jug", 2.0, loads=SENSING)
    readings = simulate_telemetry(make_scenario(READER, [tag], OUTDOOR, q_init=0), "jug", SERIES)
    assert all(r.temperature is None for r in readings)


def test_indoor_cell_assists_reads_but_cannot_run_the_sensor():
    tag = make_tag("jug", 4.0, rf=TagRfProfile(transmission_coefficient=CALIBRATED_TAU), pv_module=ONE_CM2, loads=SENSING)
    scenario = make_scenario(READER, [tag], INDOOR, q_init=0, rounds=len(SERIES))
    # 13 uW covers the 10 uW IC but not the extra 15 uW sensor
    assert tag_state_at(scenario, tag).mode is TagMode.ASSISTED
    assert all(r.temperature is None for r in simulate_telemetry(scenario, "jug", SERIES))
    assert run_inventory(scenario).read_counts["jug"] == len(SERIES)


def test_readings_only_on_successful_reads():
    tags = [make_tag(f"jug{i}", 2.0, pv_module=ONE_MM2, loads=SENSING) for i in range(4)]
    scenario = make_scenario(READER, tags, OUTDOOR, q_init=2, q_step=0.0, seed=5)
    readings = simulate_telemetry(scenario, "jug0", SERIES)
    trace = run_inventory(replace(scenario, rounds=len(SERIES))).trace
    read_at = {s.time_index for s in trace.for_tag("jug0").samples if s.read_success}
    reported = {r.time_index for r in readings if r.temperature is not None}
    assert reported == read_at
    assert 0 < len(reported) < len(SERIES)


def test_missing_temperature_load():
    tag = make_tag("plain", 2.0, pv_module=ONE_MM2)
    with pytest.raises(ConfigError, match="temperature"):
        simulate_telemetry(make_scenario(READER, [tag], OUTDOOR), "plain", SERIES)


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_non_finite_temperature_rejected(bad):
    tag = make_tag("jug", 2.0, pv_module=ONE_MM2, loads=SENSING)
    scenario = make_scenario(READER, [tag], OUTDOOR, q_init=0)
    with pytest.raises(ConfigError, match="finite"):
        simulate_telemetry(scenario, "jug", [4.0, bad, 4.1])
    with pytest.raises(ConfigError, match="finite"):
        simulate_telemetry(scenario, "jug", SERIES, quantization=bad)


def test_unknown_tag():
    tag = make_tag("jug", 2.0, pv_module=ONE_MM2, loads=SENSING)
    with pytest.raises(ConfigError, match="valid ids"):
        simulate_telemetry(make_scenario(READER, [tag], OUTDOOR), "nope", SERIES)


def test_lights_out_window_stops_reporting():
    tag = make_tag("jug", 2.0, pv_module=ONE_MM2, loads=SENSING)
    scenario = make_scenario(
        READER, [tag], OUTDOOR, q_init=0,
        light_schedule=(LightWindow(20, 29, 0.0),),
    )
    readings = simulate_telemetry(scenario, "jug", SERIES)
    dark = [r for r in readings if 20 <= r.time_index <= 29]
    lit = [r for r in readings if not 20 <= r.time_index <= 29]
    assert all(r.temperature is None for r in dark)
    assert all(r.temperature is not None for r in lit)


def test_cold_chain_scenario_file():
    cfg = load_config(SCENARIO_DIR / "cold_chain.yaml")
    series = [4.0] * 100
    readings = simulate_telemetry(cfg.scenario, "jug", series, **cfg.telemetry_cfg)
    reported = [r.time_index for r in readings if r.temperature is not None]
    assert reported == [t for t in range(100) if not 40 <= t <= 59]
    assert {r.temperature for r in readings if r.temperature is not None} == {4.0}
