from .types import (
    LANE_UNKNOWN,
    LANE_WIDTH_M,
    AgentState,
    AgentType,
    AnchorPose,
    DatasetSplit,
    SceneWindow,
    Track,
)
from .loaders import LoadResult, load_many, load_trajectories
from .windowing import WindowParams, split_windows, window_scenes
from .labels import (
    LATERAL_CODES,
    LONGITUDINAL_CODES,
    extract_maneuver_labels,
    label_indices,
)
from .synthetic import SyntheticSpec, synthesize_scenes, synthesize_tracks, write_tracks_csv

__all__ = [
    "LANE_UNKNOWN",
    "LANE_WIDTH_M",
    "LATERAL_CODES",
    "LONGITUDINAL_CODES",
    "AgentState",
    "AgentType",
    "AnchorPose",
    "DatasetSplit",
    "LoadResult",
    "SceneWindow",
    "SyntheticSpec",
    "Track",
    "WindowParams",
    "extract_maneuver_labels",
    "label_indices",
    "load_many",
    "load_trajectories",
    "split_windows",
    "synthesize_scenes",
    "synthesize_tracks",
    "window_scenes",
    "write_tracks_csv",
]
