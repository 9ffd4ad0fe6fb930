"""Kinematically consistent synthetic traffic scenes.

Each scene is a short multi-lane corridor episode: the designed ego (agent 0)
drives straight during the observed span, then executes a sampled lateral and
longitudinal maneuver over the future span, among constant-speed neighbors.
Positions come from closed-form piecewise constant-acceleration integration,
so stored velocities and accelerations match position differences, labels are
recoverable by construction, and a zero-noise straight scene is exactly
linear.

The ``braking_leader`` scenario instead gives the ego a reactive future: a
same-lane leader brakes and the ego decelerates in proportion to how far the
gap has fallen below the kinematic safe-following distance, after a fixed
reaction delay.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ArgumentError
from .types import LANE_WIDTH_M, AgentType, Track
from .windowing import WindowParams, window_scenes

TYPE_SPEED_RANGES = {
    AgentType.VEHICLE: None,  # use spec.speed_range
    AgentType.PEDESTRIAN: (1.0, 2.0),
    AgentType.BICYCLE: (3.0, 6.0),
}

# fixed generator-side kinematic parameters for the reactive ego
GEN_RSS_VALUES = dict(
    rho=0.8, a_max=2.0, b_min=4.0, b_max=6.0, alpha_max=0.5, beta_min=1.0,
    mu=1.0, context="highway",
)
REACTION_DELAY_S = 0.8
FOLLOW_GAIN = 0.8          # deceleration per meter of safe-distance deficit
MAX_FOLLOW_DECEL = 4.0


@dataclass(frozen=True)
class SyntheticSpec:
    n_scenes: int = 32
    n_agents: int = 3
    lateral_mix: dict = field(default_factory=lambda: {"S": 1.0})
    longitudinal_mix: dict = field(default_factory=lambda: {"C": 1.0})
    type_mix: dict = field(default_factory=lambda: {"vehicle": 1.0})
    noise: float = 0.0
    seed: int = 0
    frame_rate: float = 10.0
    n_lanes: int = 3
    speed_range: tuple[float, float] = (8.0, 14.0)
    scenario: str = "generic"  # or "braking_leader"
    t_h: float = 3.0
    t_f: float = 5.0
    downsample: int = 2
    d_close: float = 25.0
    n_max: int = 8
    context: str = "highway"

    def window_params(self) -> WindowParams:
        return WindowParams(
            t_h=self.t_h,
            t_f=self.t_f,
            stride=10_000_000,  # one anchor per scene
            downsample=self.downsample,
            d_close=self.d_close,
            n_max=self.n_max,
            frame_rate=self.frame_rate,
            context=self.context,
        )


def _sample_mix(rng: np.random.Generator, mix: dict) -> str:
    keys = sorted(mix)
    probs = np.array([mix[k] for k in keys], dtype=np.float64)
    total = probs.sum()
    if total <= 0:
        raise ArgumentError(f"mix has no positive mass: {mix}")
    return keys[rng.choice(len(keys), p=probs / total)]


def _segments_to_profile(
    k_frames: int, dt: float, x0: float, v0: float, segments: list[tuple[int, int, float]]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form positions/velocities for piecewise constant acceleration."""
    x = np.empty(k_frames)
    v = np.empty(k_frames)
    a = np.zeros(k_frames)
    xs, vs = x0, v0
    for start, stop, acc in segments:
        idx = np.arange(start, stop)
        tau = (idx - start) * dt
        x[idx] = xs + vs * tau + 0.5 * acc * tau * tau
        v[idx] = vs + acc * tau
        a[idx] = acc
        span = (stop - start) * dt
        xs = xs + vs * span + 0.5 * acc * span * span
        vs = vs + acc * span
    return x, v, a


def _lane_change_profile(
    k_frames: int, dt: float, y0: float, delta: float, start: int, stop: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cosine-ramp lateral move from y0 to y0+delta over frames [start, stop)."""
    t = np.arange(k_frames) * dt
    y = np.full(k_frames, y0)
    vy = np.zeros(k_frames)
    ay = np.zeros(k_frames)
    if delta == 0.0 or stop <= start:
        return y, vy, ay
    t1, t2 = start * dt, stop * dt
    dur = t2 - t1
    inside = (t >= t1) & (t < t2)
    u = (t[inside] - t1) / dur
    y[inside] = y0 + delta * (1.0 - np.cos(np.pi * u)) / 2.0
    vy[inside] = delta * np.pi / (2.0 * dur) * np.sin(np.pi * u)
    ay[inside] = delta * np.pi**2 / (2.0 * dur**2) * np.cos(np.pi * u)
    y[t >= t2] = y0 + delta
    return y, vy, ay


def _apply_jitter(
    rng: np.random.Generator,
    noise: float,
    dt: float,
    x: np.ndarray,
    v: np.ndarray,
    a: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if noise <= 0:
        return x, v, a
    aj = rng.normal(0.0, noise, size=len(a))
    vj = np.cumsum(aj) * dt
    xj = np.cumsum(vj) * dt
    return x + xj, v + vj, a + aj


def synthesize_tracks(spec: SyntheticSpec, scene_rng: np.random.Generator) -> list[Track]:
    """Tracks for a single scene; agent 0 is the designed ego."""
    if spec.n_agents < 1:
        raise ArgumentError(f"n_agents must be >= 1, got {spec.n_agents}")
    wp = spec.window_params()
    dt = 1.0 / spec.frame_rate
    hist_span = (wp.history_steps - 1) * spec.downsample
    fut_span = wp.future_steps * spec.downsample
    k_frames = hist_span + fut_span + 1
    anchor = hist_span
    event = anchor + 1
    future_dur = fut_span * dt

    ego_type = AgentType.parse(_sample_mix(scene_rng, spec.type_mix))
    speed_range = TYPE_SPEED_RANGES[ego_type] or spec.speed_range
    v0 = scene_rng.uniform(*speed_range)
    ego_lane = spec.n_lanes // 2
    y0 = ego_lane * LANE_WIDTH_M

    lat = _sample_mix(scene_rng, spec.lateral_mix)
    lon = _sample_mix(scene_rng, spec.longitudinal_mix)

    tracks: list[Track] = []
    if spec.scenario == "braking_leader":
        tracks = _braking_leader_scene(
            spec, scene_rng, k_frames, dt, event, v0, y0, ego_lane
        )
    else:
        delta = {"S": 0.0, "L": LANE_WIDTH_M, "R": -LANE_WIDTH_M}[lat]
        if delta != 0.0 and 0.8 * future_dur * v0 < 2.0:
            delta, lat = 0.0, "S"  # too slow to clear the lateral threshold
        # accelerate/decelerate targeting a +/-20% mean-speed change
        target = {"A": 0.2, "D": -0.2, "C": 0.0}[lon]
        accel = np.clip(2.0 * target * v0 / future_dur, -6.0, 6.0)
        if accel < 0:  # never brake to a stop inside the window
            accel = -min(-accel, max(v0 - 0.5, 0.0) / future_dur)
        if accel == 0.0:
            segments = [(0, k_frames, 0.0)]
        else:
            segments = [(0, event, 0.0), (event, k_frames, float(accel))]
        x, speed, ax = _segments_to_profile(k_frames, dt, 0.0, v0, segments)
        if delta == 0.0:
            x, speed, ax = _apply_jitter(scene_rng, spec.noise, dt, x, speed, ax)
            tracks.append(
                _make_track(0, ego_type, x, np.full(k_frames, y0), speed,
                            np.zeros(k_frames), ax, np.zeros(k_frames))
            )
        else:
            # lateral move borrows from the speed budget so |v| stays on the
            # longitudinal profile and speed-based labels survive exactly
            min_speed = float(speed.min())
            dur = max(0.8 * future_dur, delta * np.pi / (1.6 * min_speed) * 1.05)
            lat_stop = min(event + int(round(dur / dt)), k_frames - 1)
            y, vy, ay = _lane_change_profile(k_frames, dt, y0, delta, event, lat_stop)
            vx = np.sqrt(np.maximum(speed * speed - vy * vy, 1e-4))
            x = np.empty(k_frames)
            x[0] = 0.0
            x[1:] = np.cumsum((vx[:-1] + vx[1:]) / 2.0 * dt)
            ax_fd = np.zeros(k_frames)
            ax_fd[1:-1] = (vx[2:] - vx[:-2]) / (2.0 * dt)
            ax_fd[0] = (vx[1] - vx[0]) / dt
            ax_fd[-1] = (vx[-1] - vx[-2]) / dt
            x, vx, ax_fd = _apply_jitter(scene_rng, spec.noise, dt, x, vx, ax_fd)
            tracks.append(_make_track(0, ego_type, x, y, vx, vy, ax_fd, ay))

        for i in range(1, spec.n_agents):
            lane_offset = [0, 1, -1, 2, -2][i % 5]
            lane = int(np.clip(ego_lane + lane_offset, 0, spec.n_lanes - 1))
            if lane == ego_lane:
                off = scene_rng.uniform(8.0, min(24.0, 0.9 * spec.d_close))
                off = off if i % 2 == 1 else -off
            else:
                off = scene_rng.uniform(-18.0, 18.0)
            nv = max(0.5, v0 + scene_rng.uniform(-2.0, 2.0))
            xn, vxn, axn = _segments_to_profile(
                k_frames, dt, float(off), nv, [(0, k_frames, 0.0)]
            )
            yn = np.full(k_frames, lane * LANE_WIDTH_M)
            xn, vxn, axn = _apply_jitter(scene_rng, spec.noise, dt, xn, vxn, axn)
            tracks.append(
                _make_track(i, AgentType.VEHICLE, xn, yn, vxn, np.zeros(k_frames), axn,
                            np.zeros(k_frames))
            )
    return tracks


def _braking_leader_scene(
    spec: SyntheticSpec,
    rng: np.random.Generator,
    k_frames: int,
    dt: float,
    event: int,
    v0: float,
    y0: float,
    ego_lane: int,
) -> list[Track]:
    # deferred import; the safety module depends on these data types
    from ..rss import RssParameters, safe_longitudinal_distance

    gen_rss = RssParameters(**GEN_RSS_VALUES)
    gap0 = rng.uniform(10.0, min(24.0, 0.9 * spec.d_close))
    brake = rng.uniform(1.5, 3.5)
    brake_frames = int(round(rng.uniform(0.5, 0.9) * (k_frames - event)))
    stop = min(event + brake_frames, k_frames)

    lead_segments = [(0, event, 0.0), (event, stop, -brake)]
    if stop < k_frames:
        lead_segments.append((stop, k_frames, 0.0))
    # keep the leader moving forward
    max_drop = brake * (stop - event) * dt
    if v0 - max_drop < 0.5:
        brake = max(0.1, (v0 - 0.5) / ((stop - event) * dt))
        lead_segments = [(0, event, 0.0), (event, stop, -brake)]
        if stop < k_frames:
            lead_segments.append((stop, k_frames, 0.0))
    xl, vxl, axl = _segments_to_profile(k_frames, dt, gap0, v0, lead_segments)

    # reactive ego: proportional braking on safe-distance deficit after a delay
    delay = int(round(REACTION_DELAY_S / dt))
    x = np.empty(k_frames)
    vx = np.empty(k_frames)
    ax = np.zeros(k_frames)
    x[0], vx[0] = 0.0, v0
    for k in range(1, k_frames):
        a_cmd = 0.0
        if k - 1 >= event + delay:
            gap = xl[k - 1] - x[k - 1]
            d_req = safe_longitudinal_distance(max(vx[k - 1], 0.0), max(vxl[k - 1], 0.0), gen_rss)
            deficit = d_req - gap
            if deficit > 0:
                a_cmd = -min(MAX_FOLLOW_DECEL, FOLLOW_GAIN * deficit)
            if vx[k - 1] <= 0.3:
                a_cmd = 0.0
        ax[k - 1] = a_cmd
        vx[k] = max(0.0, vx[k - 1] + a_cmd * dt)
        x[k] = x[k - 1] + vx[k - 1] * dt + 0.5 * a_cmd * dt * dt
    ax[-1] = ax[-2]

    x, vx, ax = _apply_jitter(rng, spec.noise, dt, x, vx, ax)
    xl, vxl, axl = _apply_jitter(rng, spec.noise, dt, xl, vxl, axl)
    zeros = np.zeros(k_frames)
    yc = np.full(k_frames, y0)
    tracks = [
        _make_track(0, AgentType.VEHICLE, x, yc, vx, zeros, ax, zeros),
        _make_track(1, AgentType.VEHICLE, xl, yc, vxl, zeros, axl, zeros),
    ]
    for i in range(2, spec.n_agents):
        lane = int(np.clip(ego_lane + (1 if i % 2 == 0 else -1), 0, spec.n_lanes - 1))
        off = rng.uniform(-15.0, 15.0)
        nv = max(0.5, v0 + rng.uniform(-2.0, 2.0))
        xn, vxn, axn = _segments_to_profile(k_frames, dt, float(off), nv, [(0, k_frames, 0.0)])
        yn = np.full(k_frames, lane * LANE_WIDTH_M)
        tracks.append(
            _make_track(i, AgentType.VEHICLE, xn, yn, vxn, zeros, axn, zeros)
        )
    return tracks


def _make_track(agent_id, agent_type, x, y, vx, vy, ax, ay) -> Track:
    k = len(x)
    return Track(
        agent_id=agent_id,
        agent_type=agent_type,
        frames=np.arange(k, dtype=np.int64),
        position=np.column_stack([x, y]),
        velocity=np.column_stack([vx, vy]),
        acceleration=np.column_stack([ax, ay]),
        lane=np.floor(np.asarray(y) / LANE_WIDTH_M + 0.5).astype(np.int64),
    )


def synthesize_scenes(spec: SyntheticSpec):
    """Generate ``n_scenes`` windows, one per scene, ego always agent 0."""
    rng = np.random.default_rng(spec.seed)
    wp = spec.window_params()
    windows = []
    for scene_idx in range(spec.n_scenes):
        tracks = synthesize_tracks(spec, rng)
        scene_windows = window_scenes(
            tracks, wp, source=f"synthetic:{spec.seed}:{scene_idx}", ego_ids={0}
        )
        windows.extend(scene_windows)
    return windows


def write_tracks_csv(tracks: list[Track], path) -> None:
    """Write one scene in the ngsim_csv layout."""
    with open(path, "w") as fh:
        fh.write("frame,agent_id,x,y,vx,vy,ax,ay,type,lane_id\n")
        for track in tracks:
            name = track.agent_type.name.lower()
            for i, frame in enumerate(track.frames):
                values = ",".join(
                    repr(float(v))
                    for v in (*track.position[i], *track.velocity[i], *track.acceleration[i])
                )
                fh.write(f"{int(frame)},{track.agent_id},{values},{name},{int(track.lane[i])}\n")
