from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pvtag.apps.activity import detect_activity
from pvtag.config import load_config
from pvtag.errors import ConfigError
from pvtag.sim.inventory import run_inventory
from pvtag.sim.traces import RssiSample, RssiTrace

from tests.utils import SCENARIO_DIR

N = 200
EVENT = range(100, 110)


def _pair(seed: int, offset_db: float = -6.0, sigma: float = 0.5):
    rng = np.random.default_rng(seed)
    ref = -45.0 + rng.normal(0.0, sigma, N)
    act = -42.0 + rng.normal(0.0, sigma, N)
    act[EVENT.start:EVENT.stop] += offset_db
    return RssiTrace.from_series("door", act), RssiTrace.from_series("wall", ref)


def _grid_pair(steps_act, steps_ref):
    # eighth-dB grid keeps every sum exact
    return (
        RssiTrace.from_series("a", [-40.0 + s / 8 for s in steps_act]),
        RssiTrace.from_series("r", [-44.0 + s / 8 for s in steps_ref]),
    )


def test_constant_difference_has_no_events():
    act = RssiTrace.from_series("a", [-40.0] * 50)
    ref = RssiTrace.from_series("r", [-43.0] * 50)
    result = detect_activity(act, ref, calib_window=20)
    assert result.events == []
    assert result.baseline_mean == pytest.approx(3.0)
    assert result.baseline_std == 0.0
    assert result.threshold == pytest.approx(0.3)
    assert result.aligned_count == 50


def test_detects_synthetic_shadowing_every_seed():
    for seed in range(100):
        act, ref = _pair(seed)
        result = detect_activity(act, ref, calib_window=50, k_sigma=3, min_run=3)
        assert len(result.events) == 1, seed
        event = result.events[0]
        # a noisy neighbour may widen the run by a sample, but it must cover the shadowing
        assert event.start_index <= EVENT.stop - 1 and event.end_index >= EVENT.start, seed
        assert EVENT.start - 3 <= event.start_index and event.end_index <= EVENT.stop + 2, seed
        assert event.end_index - event.start_index >= 2
        assert event.peak_deviation > result.threshold


def test_noise_only_rarely_alarms():
    quiet = 0
    for seed in range(100):
        act, ref = _pair(seed, offset_db=0.0)
        if not detect_activity(act, ref, calib_window=50, k_sigma=4, min_run=3).events:
            quiet += 1
    assert quiet >= 99


def test_event_on_simulated_door_scenario():
    cfg = load_config(SCENARIO_DIR / "door.yaml")
    trace = run_inventory(cfg.scenario).trace
    result = detect_activity(trace.for_tag("door"), trace.for_tag("wall"), **cfg.detector_cfg)
    assert len(result.events) == 1
    event = result.events[0]
    assert event.start_index <= 59 and event.end_index >= 50
    assert 47 <= event.start_index and event.end_index <= 62
    assert result.dropped_activity == result.dropped_reference == 0


def test_missing_reads_do_not_split_a_run():
    steps = [0] * 30 + [-48] * 6 + [0] * 10
    act, ref = _grid_pair(steps, [0] * len(steps))
    # drop the activity read at index 32, inside the event
    act = RssiTrace(tuple(s for s in act.samples if s.time_index != 32))
    result = detect_activity(act, ref, calib_window=20, min_run=5)
    assert [(e.start_index, e.end_index) for e in result.events] == [(30, 35)]
    assert result.dropped_reference == 1
    assert result.dropped_activity == 0


def test_only_successful_reads_are_aligned():
    act = RssiTrace(tuple(
        RssiSample(i, "a", -40.0, i % 5 != 0) for i in range(40)
    ))
    ref = RssiTrace.from_series("r", [-42.0] * 40)
    result = detect_activity(act, ref, calib_window=10)
    assert result.aligned_count == 32
    assert result.dropped_reference == 8


def test_events_are_disjoint_and_ordered():
    steps = [0] * 30 + [-48] * 4 + [0] * 5 + [40] * 4 + [0] * 5
    act, ref = _grid_pair(steps, [0] * len(steps))
    events = detect_activity(act, ref, calib_window=20).events
    assert [(e.start_index, e.end_index) for e in events] == [(30, 33), (39, 42)]
    assert events[0].peak_deviation == pytest.approx(6.0)
    assert events[1].peak_deviation == pytest.approx(5.0)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(min_value=-8, max_value=8), min_size=40, max_size=80),
    st.integers(min_value=-40, max_value=40),
)
def test_common_mode_offset_does_not_change_events(noise, offset):
    steps_act = list(noise)
    steps_act[25:30] = [s - 64 for s in steps_act[25:30]]
    act, ref = _grid_pair(steps_act, [0] * len(steps_act))
    base = detect_activity(act, ref, calib_window=20)
    moved = detect_activity(act.shifted(offset), ref.shifted(offset), calib_window=20)
    assert moved.events == base.events


def test_no_aligned_indices():
    act = RssiTrace.from_series("a", [-40.0] * 10, start_index=0)
    ref = RssiTrace.from_series("r", [-40.0] * 10, start_index=100)
    result = detect_activity(act, ref)
    assert result.events == []
    assert result.aligned_count == 0
    assert "No aligned" in result.notes


def test_calibration_window_checks():
    act, ref = _pair(0)
    with pytest.raises(ConfigError, match="exceeds"):
        detect_activity(act, ref, calib_window=N + 1)
    with pytest.raises(ConfigError):
        detect_activity(act, ref, calib_window=1)
    with pytest.raises(ConfigError):
        detect_activity(act, ref, min_run=0)


def test_multi_tag_trace_rejected():
    act, ref = _pair(0)
    both = RssiTrace(act.samples + ref.samples)
    with pytest.raises(ConfigError, match="several tags"):
        detect_activity(both, ref)
