from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from pvtag.errors import ConfigError
from pvtag.sim.traces import RssiTrace

logger = logging.getLogger(__name__)

DEFAULT_CALIB_WINDOW = 20
DEFAULT_K_SIGMA = 3.0
DEFAULT_MIN_RUN = 3
DEFAULT_SIGMA_FLOOR_DB = 0.1


@dataclass(frozen=True)
class ActivityEvent:
    start_index: int
    end_index: int
    peak_deviation: float  # dB, absolute


@dataclass
class ActivityResult:
    events: List[ActivityEvent] = field(default_factory=list)
    baseline_mean: float = 0.0  # dB
    baseline_std: float = 0.0  # dB
    threshold: float = 0.0  # dB
    aligned_count: int = 0
    dropped_activity: int = 0
    dropped_reference: int = 0
    notes: str = ""


def _single_tag_frame(trace: RssiTrace, role: str) -> pd.DataFrame:
    ids = trace.tag_ids
    if len(ids) > 1:
        raise ConfigError(f"{role} trace holds several tags {ids}; select one tag first")
    df = trace.successful().to_frame()
    return df[["time_index", "rssi_dbm"]]


def _runs(flags: np.ndarray, min_run: int) -> List[tuple]:
    runs = []
    start: Optional[int] = None
    for i, flagged in enumerate(flags):
        if flagged and start is None:
            start = i
        elif not flagged and start is not None:
            if i - start >= min_run:
                runs.append((start, i - 1))
            start = None
    if start is not None and len(flags) - start >= min_run:
        runs.append((start, len(flags) - 1))
    return runs


def detect_activity(
    activity_trace: RssiTrace,
    reference_trace: RssiTrace,
    calib_window: int = DEFAULT_CALIB_WINDOW,
    k_sigma: float = DEFAULT_K_SIGMA,
    min_run: int = DEFAULT_MIN_RUN,
    sigma_floor: float = DEFAULT_SIGMA_FLOOR_DB,
) -> ActivityResult:
    """Find windows where the activity tag departs from the reference tag.

    Works on the per-index difference of successful reads. The baseline is
    the mean and sample deviation of the first ``calib_window`` aligned
    differences; an event is a run of at least ``min_run`` consecutive aligned
    samples farther than ``k_sigma`` deviations from the baseline.
    """
    if calib_window < 2:
        raise ConfigError(f"calib_window must be >= 2 (got {calib_window})")
    if min_run < 1:
        raise ConfigError(f"min_run must be >= 1 (got {min_run})")

    act = _single_tag_frame(activity_trace, "activity")
    ref = _single_tag_frame(reference_trace, "reference")
    merged = act.merge(ref, on="time_index", suffixes=("_act", "_ref")).sort_values("time_index")
    aligned = len(merged)
    dropped_act = len(act) - aligned
    dropped_ref = len(ref) - aligned
    if dropped_act or dropped_ref:
        logger.info("dropped %d activity / %d reference samples without a partner", dropped_act, dropped_ref)

    if aligned == 0:
        return ActivityResult(
            dropped_activity=dropped_act,
            dropped_reference=dropped_ref,
            notes="No aligned indices between activity and reference traces",
        )
    if calib_window > aligned:
        raise ConfigError(
            f"calib_window {calib_window} exceeds the {aligned} aligned samples"
        )

    delta = (merged["rssi_dbm_act"] - merged["rssi_dbm_ref"]).to_numpy()
    index = merged["time_index"].to_numpy()
    mu = float(np.mean(delta[:calib_window]))
    sigma = float(np.std(delta[:calib_window], ddof=1))
    threshold = k_sigma * max(sigma, sigma_floor)

    deviation = np.abs(delta - mu)
    events = [
        ActivityEvent(
            start_index=int(index[i]),
            end_index=int(index[j]),
            peak_deviation=float(deviation[i:j + 1].max()),
        )
        for i, j in _runs(deviation > threshold, min_run)
    ]

    notes = (
        f"{len(events)} event(s) over {aligned} aligned samples; "
        f"baseline {mu:.4f} dB, sigma {sigma:.4f} dB, threshold {threshold:.4f} dB"
    )
    return ActivityResult(
        events=events,
        baseline_mean=mu,
        baseline_std=sigma,
        threshold=threshold,
        aligned_count=aligned,
        dropped_activity=dropped_act,
        dropped_reference=dropped_ref,
        notes=notes,
    )
