"""Turn tracks into model-ready windows and split them into datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError
from .types import (
    LANE_UNKNOWN,
    AnchorPose,
    DatasetSplit,
    SceneWindow,
    Track,
)

MIN_HEADING_SPEED = 0.5  # m/s; below this the anchor heading defaults to +x


@dataclass(frozen=True)
class WindowParams:
    t_h: float = 3.0          # seconds of history (anchor inclusive)
    t_f: float = 5.0          # seconds of future
    stride: int = 5           # source frames between ego anchors
    downsample: int = 2       # temporal decimation of source frames
    d_close: float = 25.0     # neighbor radius at the anchor, meters
    n_max: int = 8            # neighbor slot cap (ego excluded)
    frame_rate: float = 10.0  # source Hz
    context: str = "highway"

    @property
    def history_steps(self) -> int:
        return int(round(self.t_h * self.frame_rate / self.downsample))

    @property
    def future_steps(self) -> int:
        return int(round(self.t_f * self.frame_rate / self.downsample))

    @property
    def effective_rate(self) -> float:
        return self.frame_rate / self.downsample


def window_scenes(
    tracks: list[Track],
    params: WindowParams,
    source: str = "",
    ego_ids: set[int] | None = None,
) -> list[SceneWindow]:
    """One window per (ego, anchor) with nearest-first neighbor slots.

    Egos lacking a full history+future span at an anchor are skipped. The
    anchor grid starts at the first frame with complete history and advances
    by ``stride`` source frames.
    """
    if params.downsample < 1 or params.stride < 1:
        raise ArgumentError("stride and downsample must be >= 1")
    steps_h, steps_f = params.history_steps, params.future_steps
    if steps_h < 1 or steps_f < 1:
        raise ArgumentError(
            f"window spans must be positive, got {steps_h} history / {steps_f} future steps"
        )
    lookups = [t.frame_lookup() for t in tracks]
    windows: list[SceneWindow] = []
    for ego_idx, ego in enumerate(tracks):
        if ego_ids is not None and ego.agent_id not in ego_ids:
            continue
        first_anchor = int(ego.frames[0]) + (steps_h - 1) * params.downsample
        last_anchor = int(ego.frames[-1]) - steps_f * params.downsample
        anchor = first_anchor
        while anchor <= last_anchor:
            window = _build_window(tracks, lookups, ego_idx, anchor, params, source)
            if window is not None:
                windows.append(window)
            anchor += params.stride
    return windows


def _frame_grid(anchor: int, params: WindowParams) -> tuple[np.ndarray, np.ndarray]:
    steps_h, steps_f = params.history_steps, params.future_steps
    hist = anchor - params.downsample * np.arange(steps_h - 1, -1, -1)
    fut = anchor + params.downsample * np.arange(1, steps_f + 1)
    return hist, fut


def _build_window(
    tracks: list[Track],
    lookups: list[dict[int, int]],
    ego_idx: int,
    anchor: int,
    params: WindowParams,
    source: str,
) -> SceneWindow | None:
    ego = tracks[ego_idx]
    ego_lookup = lookups[ego_idx]
    hist_frames, fut_frames = _frame_grid(anchor, params)
    if any(f not in ego_lookup for f in hist_frames):
        return None
    if any(f not in ego_lookup for f in fut_frames):
        return None

    anchor_idx = ego_lookup[anchor]
    ax, ay = ego.position[anchor_idx]
    vx, vy = ego.velocity[anchor_idx]
    if np.hypot(vx, vy) < MIN_HEADING_SPEED:
        cos_h, sin_h = 1.0, 0.0
    else:
        heading = np.arctan2(vy, vx)
        cos_h, sin_h = np.cos(heading), np.sin(heading)
    pose = AnchorPose(float(ax), float(ay), float(cos_h), float(sin_h))

    # neighbors within d_close at the anchor, nearest first, id tiebreak
    candidates = []
    for other_idx, other in enumerate(tracks):
        if other_idx == ego_idx:
            continue
        k = lookups[other_idx].get(anchor)
        if k is None:
            continue
        dist = float(np.hypot(*(other.position[k] - ego.position[anchor_idx])))
        if dist <= params.d_close:
            candidates.append((dist, other.agent_id, other_idx))
    candidates.sort()
    neighbors = [idx for _, _, idx in candidates[: params.n_max]]

    n_slots = params.n_max + 1
    steps_h, steps_f = params.history_steps, params.future_steps
    history = np.zeros((n_slots, steps_h, 6))
    mask = np.zeros((n_slots, steps_h), dtype=bool)
    lanes = np.full((n_slots, steps_h), LANE_UNKNOWN, dtype=np.int64)
    agent_ids = np.full(n_slots, -1, dtype=np.int64)
    agent_types = np.zeros(n_slots, dtype=np.int64)

    for slot, track_idx in enumerate([ego_idx] + neighbors):
        track = tracks[track_idx]
        lookup = lookups[track_idx]
        agent_ids[slot] = track.agent_id
        agent_types[slot] = int(track.agent_type)
        for step, frame in enumerate(hist_frames):
            k = lookup.get(int(frame))
            if k is None:
                continue
            local_p = pose.to_local(track.position[k][None, :])[0]
            local_v = pose.rotate(track.velocity[k][None, :])[0]
            local_a = pose.rotate(track.acceleration[k][None, :])[0]
            history[slot, step] = (*local_p, *local_v, *local_a)
            mask[slot, step] = True
            lanes[slot, step] = track.lane[k]

    fut_idx = [ego_lookup[int(f)] for f in fut_frames]
    future = pose.to_local(ego.position[fut_idx])
    future_velocity = pose.rotate(ego.velocity[fut_idx])

    return SceneWindow(
        source=source,
        ego_id=ego.agent_id,
        anchor_frame=anchor,
        frame_rate=params.effective_rate,
        context=params.context,
        anchor=pose,
        agent_ids=agent_ids,
        agent_types=agent_types,
        history=history,
        history_mask=mask,
        lane_ids=lanes,
        future=future,
        future_velocity=future_velocity,
    )


def split_windows(
    windows: list[SceneWindow],
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
) -> DatasetSplit:
    """Deterministic shuffle-partition, disjoint by (source, ego, anchor)."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ArgumentError(f"split fractions must sum to 1, got {fractions}")
    order = sorted(range(len(windows)), key=lambda i: windows[i].key)
    rng = np.random.default_rng(seed)
    rng.shuffle(order)
    n = len(order)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    split = DatasetSplit(seed=seed)
    split.train = [windows[i] for i in order[:n_train]]
    split.val = [windows[i] for i in order[n_train : n_train + n_val]]
    split.test = [windows[i] for i in order[n_train + n_val :]]
    return split
