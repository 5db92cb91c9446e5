from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

import pandas as pd

from pvtag.errors import ConfigError

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["time_index", "tag_id", "rssi_dbm", "read_success", "mode"]


@dataclass(frozen=True)
class RssiSample:
    time_index: int
    tag_id: str
    rssi: float  # dBm
    read_success: bool
    mode: str = "passive"


@dataclass(frozen=True)
class RssiTrace:
    samples: Tuple[RssiSample, ...] = ()

    def __post_init__(self) -> None:
        last: Dict[str, int] = {}
        for s in self.samples:
            if not math.isfinite(s.rssi):
                raise ConfigError(f"non-finite rssi for tag '{s.tag_id}' at index {s.time_index}")
            prev = last.get(s.tag_id)
            if prev is not None and s.time_index <= prev:
                raise ConfigError(
                    f"time_index not strictly increasing for tag '{s.tag_id}' "
                    f"({prev} then {s.time_index})"
                )
            last[s.tag_id] = s.time_index

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def tag_ids(self) -> List[str]:
        return sorted({s.tag_id for s in self.samples})

    def for_tag(self, tag_id: str) -> "RssiTrace":
        return RssiTrace(tuple(s for s in self.samples if s.tag_id == tag_id))

    def successful(self) -> "RssiTrace":
        return RssiTrace(tuple(s for s in self.samples if s.read_success))

    def shifted(self, offset_db: float) -> "RssiTrace":
        return RssiTrace(tuple(
            RssiSample(s.time_index, s.tag_id, s.rssi + offset_db, s.read_success, s.mode)
            for s in self.samples
        ))

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"time_index": s.time_index, "tag_id": s.tag_id, "rssi_dbm": s.rssi,
             "read_success": s.read_success, "mode": s.mode}
            for s in self.samples
        ]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS).astype(
            {"time_index": "int64", "tag_id": str, "rssi_dbm": "float64", "read_success": bool, "mode": str}
        )

    @classmethod
    def from_series(
        cls,
        tag_id: str,
        rssi: Iterable[float],
        start_index: int = 0,
        mode: str = "passive",
    ) -> "RssiTrace":
        """Trace of consecutive successful reads for one tag."""
        return cls(tuple(
            RssiSample(start_index + i, tag_id, float(v), True, mode)
            for i, v in enumerate(rssi)
        ))


def _ordered(trace: RssiTrace) -> List[RssiSample]:
    return sorted(trace.samples, key=lambda s: (s.time_index, s.tag_id))


def write_trace_csv(trace: RssiTrace, output_file: Union[str, Path]) -> int:
    """Write ``trace`` in the fixed trace CSV layout; returns the row count."""
    rows = _ordered(trace)
    with Path(output_file).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for s in rows:
            writer.writerow([s.time_index, s.tag_id, f"{s.rssi:.4f}", int(s.read_success), s.mode])
    logger.info("wrote %d trace rows to %s", len(rows), output_file)
    return len(rows)


def read_trace_csv(path: Union[str, Path]) -> RssiTrace:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace not found: {path}")
    df = pd.read_csv(path, dtype={"tag_id": str, "mode": str})
    if list(df.columns) != TRACE_COLUMNS:
        raise ConfigError(f"{path}: expected header {','.join(TRACE_COLUMNS)} (got {','.join(df.columns)})")
    if df.empty:
        return RssiTrace()
    df = df.sort_values(["time_index", "tag_id"], kind="mergesort")
    samples = tuple(
        RssiSample(
            time_index=int(row.time_index),
            tag_id=str(row.tag_id),
            rssi=float(row.rssi_dbm),
            read_success=bool(int(row.read_success)),
            mode=str(row.mode),
        )
        for row in df.itertuples(index=False)
    )
    return RssiTrace(samples)
