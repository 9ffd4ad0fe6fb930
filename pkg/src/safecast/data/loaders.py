"""Trajectory file ingestion.

Two formats are understood:

* ``ngsim_csv`` — header row ``frame,agent_id,x,y,vx,vy,ax,ay,type,lane_id``
  with comma-separated decimals in meters/SI units.
* ``apollo_txt`` — whitespace-separated ``frame agent_id type x y``;
  velocities and accelerations are derived by central differences and lanes
  by lateral binning at 3.5 m.

Malformed rows are skipped and counted, never fatal.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ArgumentError, EmptyInputError, FormatError
from .types import LANE_UNKNOWN, LANE_WIDTH_M, AgentType, Track

log = logging.getLogger("safecast.data")

NGSIM_COLUMNS = ("frame", "agent_id", "x", "y", "vx", "vy", "ax", "ay", "type", "lane_id")

# ApolloScape object-type codes: 1/2 small/big vehicle, 3 pedestrian,
# 4 motorcyclist or bicyclist, 5 other.
APOLLO_TYPE_MAP = {1: AgentType.VEHICLE, 2: AgentType.VEHICLE, 3: AgentType.PEDESTRIAN,
                   4: AgentType.BICYCLE, 5: AgentType.VEHICLE}

SPEED_CONSISTENCY_TOL = 0.5  # m/s, validation warning threshold


@dataclass
class LoadResult:
    tracks: list[Track] = field(default_factory=list)
    skipped_rows: int = 0
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.tracks)

    def __len__(self) -> int:
        return len(self.tracks)


def load_trajectories(path, fmt: str, frame_rate: float = 10.0) -> LoadResult:
    """Load one file into frame-sorted tracks grouped by agent id."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"trajectory file not found: {path}")
    if fmt == "ngsim_csv":
        result = _load_ngsim_csv(path)
    elif fmt == "apollo_txt":
        result = _load_apollo_txt(path, frame_rate)
    else:
        raise ArgumentError(f"unknown trajectory format: {fmt!r}")
    _validate_consistency(result, frame_rate)
    if result.skipped_rows:
        log.warning("%s: skipped %d malformed rows", path.name, result.skipped_rows)
    return result


def _load_ngsim_csv(path: Path) -> LoadResult:
    rows = []
    skipped = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInputError(f"{path} is empty")
        missing = [c for c in NGSIM_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise FormatError(f"{path} is missing required column(s): {', '.join(missing)}")
        for raw in reader:
            try:
                rows.append(
                    (
                        int(float(raw["frame"])),
                        int(float(raw["agent_id"])),
                        float(raw["x"]),
                        float(raw["y"]),
                        float(raw["vx"]),
                        float(raw["vy"]),
                        float(raw["ax"]),
                        float(raw["ay"]),
                        AgentType.parse(raw["type"]),
                        int(float(raw["lane_id"])),
                    )
                )
            except (TypeError, ValueError, KeyError):
                skipped += 1
    if not rows:
        raise EmptyInputError(f"{path} contains no data rows")

    result = LoadResult(skipped_rows=skipped)
    by_agent: dict[int, list] = {}
    for row in rows:
        by_agent.setdefault(row[1], []).append(row)
    for agent_id in sorted(by_agent):
        entries = sorted(by_agent[agent_id], key=lambda r: r[0])
        deduped = []
        last_frame = None
        for entry in entries:
            if entry[0] == last_frame:
                result.skipped_rows += 1
                continue
            deduped.append(entry)
            last_frame = entry[0]
        arr = np.array([e[:8] for e in deduped], dtype=np.float64)
        result.tracks.append(
            Track(
                agent_id=agent_id,
                agent_type=deduped[0][8],
                frames=np.array([e[0] for e in deduped], dtype=np.int64),
                position=arr[:, 2:4].copy(),
                velocity=arr[:, 4:6].copy(),
                acceleration=arr[:, 6:8].copy(),
                lane=np.array([e[9] for e in deduped], dtype=np.int64),
            )
        )
    return result


def _load_apollo_txt(path: Path, frame_rate: float) -> LoadResult:
    rows = []
    skipped = 0
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 5:
                skipped += 1
                continue
            try:
                rows.append(
                    (
                        int(float(parts[0])),
                        int(float(parts[1])),
                        APOLLO_TYPE_MAP.get(int(float(parts[2])), AgentType.VEHICLE),
                        float(parts[3]),
                        float(parts[4]),
                    )
                )
            except ValueError:
                skipped += 1
    if not rows:
        raise EmptyInputError(f"{path} contains no data rows")

    result = LoadResult(skipped_rows=skipped)
    dt = 1.0 / frame_rate
    by_agent: dict[int, list] = {}
    for row in rows:
        by_agent.setdefault(row[1], []).append(row)
    for agent_id in sorted(by_agent):
        entries = sorted(by_agent[agent_id], key=lambda r: r[0])
        deduped = []
        last_frame = None
        for entry in entries:
            if entry[0] == last_frame:
                result.skipped_rows += 1
                continue
            deduped.append(entry)
            last_frame = entry[0]
        frames = np.array([e[0] for e in deduped], dtype=np.int64)
        pos = np.array([(e[3], e[4]) for e in deduped], dtype=np.float64)
        vel = _central_differences(pos, dt)
        acc = _central_differences(vel, dt)
        result.tracks.append(
            Track(
                agent_id=agent_id,
                agent_type=deduped[0][2],
                frames=frames,
                position=pos,
                velocity=vel,
                acceleration=acc,
                lane=np.floor(pos[:, 1] / LANE_WIDTH_M).astype(np.int64),
            )
        )
    return result


def _central_differences(series: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(series)
    if len(series) == 1:
        return out
    out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    out[0] = (series[1] - series[0]) / dt
    out[-1] = (series[-1] - series[-2]) / dt
    return out


def _validate_consistency(result: LoadResult, frame_rate: float) -> None:
    """Cross-check stored velocities against position differences."""
    dt = 1.0 / frame_rate
    for track in result.tracks:
        if len(track) < 3:
            continue
        contiguous = np.all(np.diff(track.frames) == track.frames[1] - track.frames[0])
        if not contiguous:
            continue
        step = float(track.frames[1] - track.frames[0]) * dt
        derived = _central_differences(track.position, step)
        err = np.abs(derived[1:-1] - track.velocity[1:-1]).max(initial=0.0)
        if err > SPEED_CONSISTENCY_TOL:
            result.warnings.append(
                f"agent {track.agent_id}: stored velocity deviates from position "
                f"differences by up to {err:.2f} m/s"
            )


def load_many(paths, fmt: str, frame_rate: float = 10.0) -> dict[str, LoadResult]:
    """Load several files; keys are the path strings as given."""
    return {str(p): load_trajectories(p, fmt, frame_rate) for p in paths}
