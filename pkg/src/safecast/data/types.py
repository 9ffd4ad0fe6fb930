"""Core trajectory containers: per-agent tracks and model-ready windows."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class AgentType(enum.IntEnum):
    VEHICLE = 0
    PEDESTRIAN = 1
    BICYCLE = 2

    @classmethod
    def parse(cls, token: str | int) -> "AgentType":
        if isinstance(token, (int, np.integer)):
            return cls(int(token))
        name = str(token).strip().lower()
        aliases = {
            "vehicle": cls.VEHICLE,
            "car": cls.VEHICLE,
            "pedestrian": cls.PEDESTRIAN,
            "bicycle": cls.BICYCLE,
            "bike": cls.BICYCLE,
        }
        if name in aliases:
            return aliases[name]
        return cls(int(name))


LANE_UNKNOWN = -999
LANE_WIDTH_M = 3.5


@dataclass(frozen=True)
class AgentState:
    """One agent at one timestep."""

    agent_id: int
    t: int
    p: tuple[float, float]
    v: tuple[float, float]
    a: tuple[float, float]
    u: AgentType
    lane_id: int

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.v))


@dataclass
class Track:
    """One agent's samples, frame-sorted with strictly increasing indices."""

    agent_id: int
    agent_type: AgentType
    frames: np.ndarray       # (K,) int64, strictly increasing
    position: np.ndarray     # (K, 2) meters
    velocity: np.ndarray     # (K, 2) m/s
    acceleration: np.ndarray  # (K, 2) m/s^2
    lane: np.ndarray         # (K,) int64, LANE_UNKNOWN when absent

    def __len__(self) -> int:
        return len(self.frames)

    def frame_lookup(self) -> dict[int, int]:
        return {int(f): i for i, f in enumerate(self.frames)}

    def state(self, index: int) -> AgentState:
        return AgentState(
            agent_id=self.agent_id,
            t=int(self.frames[index]),
            p=tuple(self.position[index]),
            v=tuple(self.velocity[index]),
            a=tuple(self.acceleration[index]),
            u=self.agent_type,
            lane_id=int(self.lane[index]),
        )


@dataclass(frozen=True)
class AnchorPose:
    """Ego position and heading at the anchor frame of a window."""

    x: float
    y: float
    cos_h: float
    sin_h: float

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """World -> ego frame (x forward along heading, y to the left)."""
        shifted = points - np.array([self.x, self.y])
        c, s = self.cos_h, self.sin_h
        rot = np.array([[c, s], [-s, c]])
        return shifted @ rot.T

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        c, s = self.cos_h, self.sin_h
        rot = np.array([[c, s], [-s, c]])
        return vectors @ rot.T

    def to_world(self, points: np.ndarray) -> np.ndarray:
        c, s = self.cos_h, self.sin_h
        rot = np.array([[c, -s], [s, c]])
        return points @ rot.T + np.array([self.x, self.y])


@dataclass
class SceneWindow:
    """Aligned history and ego future around one (ego, anchor-frame) pair.

    Slot 0 is the ego. All kinematics are expressed in the ego anchor frame
    (anchor position at the origin, anchor heading along +x, left positive).
    Padded or unobserved slots carry zero features and a cleared mask bit.
    """

    source: str
    ego_id: int
    anchor_frame: int
    frame_rate: float        # effective Hz after downsampling
    context: str             # "highway" | "urban"
    anchor: AnchorPose
    agent_ids: np.ndarray    # (n_slots,) int64, -1 for padding
    agent_types: np.ndarray  # (n_slots,) int64 AgentType values
    history: np.ndarray      # (n_slots, t_h, 6): x, y, vx, vy, ax, ay
    history_mask: np.ndarray  # (n_slots, t_h) bool, True where observed
    lane_ids: np.ndarray     # (n_slots, t_h) int64, LANE_UNKNOWN where n/a
    future: np.ndarray       # (t_f, 2) ego positions
    future_velocity: np.ndarray  # (t_f, 2) ego velocities

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.source, self.ego_id, self.anchor_frame)

    @property
    def n_slots(self) -> int:
        return self.history.shape[0]

    @property
    def t_h(self) -> int:
        return self.history.shape[1]

    @property
    def t_f(self) -> int:
        return self.future.shape[0]

    @property
    def ego_type(self) -> AgentType:
        return AgentType(int(self.agent_types[0]))


@dataclass
class DatasetSplit:
    train: list[SceneWindow] = field(default_factory=list)
    val: list[SceneWindow] = field(default_factory=list)
    test: list[SceneWindow] = field(default_factory=list)
    seed: int = 0
