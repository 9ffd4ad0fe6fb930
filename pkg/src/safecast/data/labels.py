"""Maneuver labels recovered from a window's ego future.

Lateral: net lateral displacement over the horizon beyond half a lane width
(1.75 m) marks a left/right maneuver, left positive. Longitudinal: mean
future speed versus mean observed speed beyond +/-5 percent marks
acceleration/deceleration. Thresholds sit in module constants so configs
can report them.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyInputError
from .types import SceneWindow

LATERAL_CODES = ("S", "R", "L")
LONGITUDINAL_CODES = ("A", "D", "C")

LATERAL_THRESHOLD_M = 1.75
SPEED_RATIO_THRESHOLD = 0.05
STANDSTILL_SPEED = 1e-6


def extract_maneuver_labels(window: SceneWindow) -> tuple[str, str]:
    if window.t_f == 0:
        raise EmptyInputError("window has an empty ego future")
    lateral_shift = float(window.future[-1, 1])
    if lateral_shift > LATERAL_THRESHOLD_M:
        lat = "L"
    elif lateral_shift < -LATERAL_THRESHOLD_M:
        lat = "R"
    else:
        lat = "S"

    hist_speeds = np.linalg.norm(window.history[0, :, 2:4], axis=-1)
    hist_speeds = hist_speeds[window.history_mask[0]]
    future_speeds = np.linalg.norm(window.future_velocity, axis=-1)
    mean_hist = float(hist_speeds.mean()) if len(hist_speeds) else 0.0
    mean_future = float(future_speeds.mean())
    if mean_hist < STANDSTILL_SPEED:
        lon = "A" if mean_future > STANDSTILL_SPEED else "C"
    else:
        ratio = mean_future / mean_hist
        if ratio > 1.0 + SPEED_RATIO_THRESHOLD:
            lon = "A"
        elif ratio < 1.0 - SPEED_RATIO_THRESHOLD:
            lon = "D"
        else:
            lon = "C"
    return lat, lon


def label_indices(lat: str, lon: str) -> tuple[int, int]:
    return LATERAL_CODES.index(lat), LONGITUDINAL_CODES.index(lon)
