from __future__ import annotations

import pytest

from pvtag.errors import ConfigError
from pvtag.sim.traces import TRACE_COLUMNS, RssiSample, RssiTrace, read_trace_csv, write_trace_csv


def _trace() -> RssiTrace:
    return RssiTrace((
        RssiSample(0, "b", -40.123456, True, "assisted"),
        RssiSample(0, "a", -38.5, False, "passive"),
        RssiSample(1, "a", -38.44444, True, "passive"),
        RssiSample(3, "b", -41.0, True, "sensor_active"),
    ))


def test_csv_layout_and_ordering(tmp_path):
    out = tmp_path / "trace.csv"
    assert write_trace_csv(_trace(), out) == 4
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert lines[1:] == [
        "0,a,-38.5000,0,passive",
        "0,b,-40.1235,1,assisted",
        "1,a,-38.4444,1,passive",
        "3,b,-41.0000,1,sensor_active",
    ]


def test_csv_read_back_to_four_decimals(tmp_path):
    out = tmp_path / "trace.csv"
    write_trace_csv(_trace(), out)
    back = read_trace_csv(out)
    assert [(s.time_index, s.tag_id, s.read_success, s.mode) for s in back.samples] == [
        (0, "a", False, "passive"),
        (0, "b", True, "assisted"),
        (1, "a", True, "passive"),
        (3, "b", True, "sensor_active"),
    ]
    assert [s.rssi for s in back.samples] == pytest.approx([-38.5, -40.1235, -38.4444, -41.0], abs=1e-9)


def test_empty_trace_writes_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    assert write_trace_csv(RssiTrace(), out) == 0
    assert out.read_text(encoding="utf-8") == ",".join(TRACE_COLUMNS) + "\n"
    assert len(read_trace_csv(out)) == 0


def test_numeric_tag_ids_stay_strings(tmp_path):
    out = tmp_path / "trace.csv"
    write_trace_csv(RssiTrace.from_series("007", [-40.0, -41.0]), out)
    assert read_trace_csv(out).tag_ids == ["007"]


def test_read_rejects_wrong_header(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,tag,rssi\n0,a,-40\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="expected header"):
        read_trace_csv(bad)


def test_read_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_trace_csv(tmp_path / "nope.csv")


def test_trace_rejects_non_increasing_time_per_tag():
    with pytest.raises(ConfigError, match="strictly increasing"):
        RssiTrace((RssiSample(2, "a", -40.0, True), RssiSample(2, "a", -41.0, True)))
    # other tags may share the index
    RssiTrace((RssiSample(2, "a", -40.0, True), RssiSample(2, "b", -41.0, True)))


def test_trace_rejects_non_finite_rssi():
    with pytest.raises(ConfigError, match="non-finite"):
        RssiTrace((RssiSample(0, "a", float("nan"), True),))


def test_trace_helpers():
    trace = _trace()
    assert trace.tag_ids == ["a", "b"]
    assert len(trace.for_tag("a")) == 2
    assert len(trace.successful()) == 3
    shifted = trace.shifted(3.0)
    assert shifted.samples[0].rssi == pytest.approx(-37.123456)
    frame = trace.to_frame()
    assert list(frame.columns) == TRACE_COLUMNS
    assert frame["read_success"].dtype == bool
    series = RssiTrace.from_series("z", [-1.0, -2.0, -3.0], start_index=10)
    assert [s.time_index for s in series.samples] == [10, 11, 12]
