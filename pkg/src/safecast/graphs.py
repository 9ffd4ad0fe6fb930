"""Per-timestep interaction graphs over a window's agents.

Two node featurizations share one adjacency rule (symmetric, no self
loops, proximity-thresholded, valid nodes only):

* intention graphs carry raw kinematics plus the agent-type one-hot;
* safety graphs carry position plus the required safe longitudinal and
  lateral distances against the current neighbors.

Edge distances use agent center points. Node order matches the window's
slot order at every step, so downstream attention can share masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.types import AgentState, AgentType, SceneWindow
from .errors import ArgumentError
from .rss import RssParameters, safety_envelope

DIG_FEATURES = 9  # x, y, vx, vy, ax, ay, one-hot agent type (3)
DSG_FEATURES = 4  # x, y, d_lon, d_lat


@dataclass
class SceneGraph:
    node_features: np.ndarray  # (n, F)
    adjacency: np.ndarray      # (n, n) float 0/1, symmetric, zero diagonal
    mask: np.ndarray           # (n,) bool validity
    kind: str                  # "DIG" | "DSG"
    t: int                     # history step index

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]


def _proximity_adjacency(
    positions: np.ndarray, mask: np.ndarray, threshold: float
) -> np.ndarray:
    n = positions.shape[0]
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    adj = (dist <= threshold).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    valid = mask.astype(np.float64)
    return adj * valid[:, None] * valid[None, :]


def _states_at(window: SceneWindow, t_k: int) -> list[AgentState | None]:
    states: list[AgentState | None] = []
    for slot in range(window.n_slots):
        if not window.history_mask[slot, t_k]:
            states.append(None)
            continue
        x, y, vx, vy, ax, ay = window.history[slot, t_k]
        states.append(
            AgentState(
                agent_id=int(window.agent_ids[slot]),
                t=t_k,
                p=(float(x), float(y)),
                v=(float(vx), float(vy)),
                a=(float(ax), float(ay)),
                u=AgentType(int(window.agent_types[slot])),
                lane_id=int(window.lane_ids[slot, t_k]),
            )
        )
    return states


def _check_step(window: SceneWindow, t_k: int) -> None:
    if not 0 <= t_k < window.t_h:
        raise ArgumentError(
            f"step {t_k} outside the history span of {window.t_h} steps"
        )


def build_dig(window: SceneWindow, t_k: int, d_close: float = 25.0) -> SceneGraph:
    """Kinematic interaction graph at one history step."""
    _check_step(window, t_k)
    mask = window.history_mask[:, t_k].copy()
    features = np.zeros((window.n_slots, DIG_FEATURES))
    features[:, :6] = window.history[:, t_k, :] * mask[:, None]
    one_hot = np.eye(3)[window.agent_types]
    features[:, 6:9] = one_hot * mask[:, None]
    adjacency = _proximity_adjacency(window.history[:, t_k, :2], mask, d_close)
    return SceneGraph(features, adjacency, mask, "DIG", t_k)


def build_dsg(
    window: SceneWindow,
    t_k: int,
    params: RssParameters,
    d_close_lon: float = 2.0,
) -> SceneGraph:
    """Safety graph at one history step: positions plus required distances."""
    _check_step(window, t_k)
    mask = window.history_mask[:, t_k].copy()
    states = _states_at(window, t_k)
    present = [s for s in states if s is not None]
    features = np.zeros((window.n_slots, DSG_FEATURES))
    for slot, state in enumerate(states):
        if state is None:
            continue
        neighbors = [s for s in present if s is not state]
        envelope = safety_envelope(state, neighbors, params)
        features[slot] = (state.p[0], state.p[1], envelope.d_lon, envelope.d_lat)
    adjacency = _proximity_adjacency(window.history[:, t_k, :2], mask, d_close_lon)
    return SceneGraph(features, adjacency, mask, "DSG", t_k)


def graph_sequence(
    window: SceneWindow,
    kind: str,
    *,
    d_close: float = 25.0,
    rss_params: RssParameters | None = None,
    d_close_lon: float = 2.0,
) -> list[SceneGraph]:
    """One graph per history step with shared node ordering."""
    if kind == "DIG":
        return [build_dig(window, t, d_close) for t in range(window.t_h)]
    if kind == "DSG":
        if rss_params is None:
            raise ArgumentError("DSG sequences need resolved RSS parameters")
        return [build_dsg(window, t, rss_params, d_close_lon) for t in range(window.t_h)]
    raise ArgumentError(f"unknown graph kind: {kind!r}")
