from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

STANDARD_GRAVITY = 9.81  # m/s^2
DEFAULT_G_TOLERANCE = 0.5  # m/s^2
DEFAULT_AXIS_DOMINANCE = 1.5

_AXES = ("x", "y", "z")


class Orientation(str, Enum):
    X_UP = "x_up"
    X_DOWN = "x_down"
    Y_UP = "y_up"
    Y_DOWN = "y_down"
    Z_UP = "z_up"
    Z_DOWN = "z_down"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class OrientationReading:
    accel: Tuple[float, float, float]  # m/s^2
    decoded: Orientation
    reason: str = ""


def decode_orientation(
    accel: Sequence[float],
    g_tolerance: float = DEFAULT_G_TOLERANCE,
    axis_dominance: float = DEFAULT_AXIS_DOMINANCE,
) -> OrientationReading:
    """Map a stationary accelerometer reading to the axis pointing up.

    Only readings whose magnitude is within ``g_tolerance`` of 1 g decode;
    the winning axis must beat the runner-up by ``axis_dominance``.
    """
    a = np.asarray(accel, dtype=float).reshape(3)
    vec = (float(a[0]), float(a[1]), float(a[2]))

    def undecided(reason: str) -> OrientationReading:
        logger.debug("orientation %s indeterminate: %s", vec, reason)
        return OrientationReading(vec, Orientation.INDETERMINATE, reason)

    if not np.all(np.isfinite(a)):
        return undecided("non-finite component")
    norm = float(np.linalg.norm(a))
    if abs(norm - STANDARD_GRAVITY) > g_tolerance:
        return undecided(
            f"not stationary: |a| = {norm:.2f} m/s2, more than {g_tolerance:g} m/s2 from 1 g"
        )

    mags = np.abs(a)
    order = np.argsort(-mags, kind="stable")
    top, second = mags[order[0]], mags[order[1]]
    if top == second:
        return undecided(f"tie between {_AXES[order[0]]} and {_AXES[order[1]]} axes")
    if not top > axis_dominance * second:
        return undecided(
            f"no dominant axis: {top:.2f} vs {second:.2f} m/s2 (ratio < {axis_dominance:g})"
        )
    axis = _AXES[order[0]]
    sign = "up" if a[order[0]] > 0 else "down"
    return OrientationReading(vec, Orientation(f"{axis}_{sign}"))
