"""Kinematic safe-distance computations and data-driven parameter fitting.

Coordinates are road-aligned: x is the longitudinal axis, y lateral with
left positive. The lateral-distance formula is implemented exactly as the
safety model states it, including adding the reaction-time acceleration
to *both* vehicles' lateral speeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError
from .data.types import LANE_UNKNOWN, LANE_WIDTH_M, AgentState


@dataclass(frozen=True)
class RssParameters:
    rho: float          # reaction time, s
    a_max: float        # max longitudinal acceleration, m/s^2
    b_min: float        # min (comfortable) braking, m/s^2
    b_max: float        # max braking, m/s^2
    alpha_max: float    # max lateral acceleration, m/s^2
    beta_min: float     # min lateral deceleration, m/s^2
    mu: float           # lateral fluctuation margin, m
    context: str = "highway"

    def __post_init__(self):
        for name in ("rho", "a_max", "b_min", "b_max", "alpha_max", "beta_min", "mu"):
            if getattr(self, name) <= 0:
                raise ArgumentError(f"RSS parameter {name} must be positive, got {getattr(self, name)}")
        if self.b_min > self.b_max:
            raise ArgumentError(
                f"b_min ({self.b_min}) must not exceed b_max ({self.b_max})"
            )

    def to_dict(self) -> dict:
        return {
            "rho": self.rho, "a_max": self.a_max, "b_min": self.b_min,
            "b_max": self.b_max, "alpha_max": self.alpha_max,
            "beta_min": self.beta_min, "mu": self.mu, "context": self.context,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RssParameters":
        return cls(**d)


CONTEXT_DEFAULTS = {
    "highway": RssParameters(
        rho=0.8, a_max=2.0, b_min=4.0, b_max=6.0,
        alpha_max=0.5, beta_min=1.0, mu=1.0, context="highway",
    ),
    "urban": RssParameters(
        rho=0.8, a_max=2.0, b_min=4.0, b_max=6.0,
        alpha_max=0.5, beta_min=1.0, mu=2.5, context="urban",
    ),
}

# floors keep differentiation noise from collapsing the estimates
ESTIMATE_FLOORS = {"a_max": 0.5, "b_min": 1.0, "b_max": 2.0, "alpha_max": 0.5, "beta_min": 1.0}


@dataclass(frozen=True)
class SafetyEnvelope:
    d_lon: float
    d_lat: float
    ego_id: int
    leader_id: int | None = None
    adjacent_id: int | None = None


@dataclass(frozen=True)
class ParameterEstimate:
    params: RssParameters
    fallback_fields: tuple[str, ...] = ()

    @property
    def used_fallback(self) -> bool:
        return bool(self.fallback_fields)


def safe_longitudinal_distance(v_rear: float, v_front: float, params: RssParameters) -> float:
    """Minimum rear-to-front spacing so the rear car can always stop in time.

    The rear car accelerates at ``a_max`` for the reaction time ``rho`` and
    then brakes at only ``b_min`` while the front car brakes at ``b_max``.
    Negative brackets clamp to zero.
    """
    if v_rear < 0 or v_front < 0:
        raise ArgumentError(
            f"longitudinal speeds must be non-negative, got v_rear={v_rear}, v_front={v_front}"
        )
    rho, a_max = params.rho, params.a_max
    bracket = (
        v_rear * rho
        + 0.5 * a_max * rho**2
        + (v_rear + rho * a_max) ** 2 / (2.0 * params.b_min)
        - v_front**2 / (2.0 * params.b_max)
    )
    return max(bracket, 0.0)


def safe_lateral_distance(v_right: float, v_left: float, params: RssParameters) -> float:
    """Minimum lateral spacing between laterally converging vehicles.

    ``v_right`` is the right vehicle's lateral speed and ``v_left`` the left
    vehicle's (both signed, left positive). The fluctuation margin ``mu`` is
    always kept; the kinematic bracket clamps at zero.
    """
    rho = params.rho
    v1r = v_right + params.alpha_max * rho
    v2r = v_left + params.alpha_max * rho
    bracket = (
        (v_right + v1r) / 2.0 * rho
        + v1r**2 / (2.0 * params.beta_min)
        - ((v_left + v2r) / 2.0 * rho - v2r**2 / (2.0 * params.beta_min))
    )
    return params.mu + max(bracket, 0.0)


def _percentile(values: np.ndarray, q: float) -> float:
    return float(np.percentile(values, q, method="higher"))


def estimate_parameters(tracks, context: str = "highway") -> ParameterEstimate:
    """Fit acceleration/braking bounds from observed kinematics.

    Longitudinal acceleration bounds come from the 99th percentile of
    positive/negative observations (braking floor b_min from the median);
    lateral bounds analogously from |lateral acceleration|. Reaction time
    and the fluctuation margin always come from the context defaults, as do
    any bounds whose observation pool is empty.
    """
    if context not in CONTEXT_DEFAULTS:
        raise ArgumentError(f"unknown context {context!r}")
    defaults = CONTEXT_DEFAULTS[context]
    usable = [t for t in tracks if len(t) >= 3]
    if not usable:
        return ParameterEstimate(
            params=defaults,
            fallback_fields=("a_max", "b_min", "b_max", "alpha_max", "beta_min"),
        )

    a_lon = np.concatenate([t.acceleration[:, 0] for t in usable])
    a_lat = np.concatenate([t.acceleration[:, 1] for t in usable])
    accel_pool = a_lon[a_lon > 0]
    decel_pool = -a_lon[a_lon < 0]
    lat_pool = np.abs(a_lat[a_lat != 0])

    fallbacks = []
    values = {}
    if accel_pool.size:
        values["a_max"] = max(_percentile(accel_pool, 99), ESTIMATE_FLOORS["a_max"])
    else:
        values["a_max"] = defaults.a_max
        fallbacks.append("a_max")
    if decel_pool.size:
        values["b_min"] = max(_percentile(decel_pool, 50), ESTIMATE_FLOORS["b_min"])
        values["b_max"] = max(_percentile(decel_pool, 99), ESTIMATE_FLOORS["b_max"])
    else:
        values["b_min"], values["b_max"] = defaults.b_min, defaults.b_max
        fallbacks.extend(["b_min", "b_max"])
    if lat_pool.size:
        values["alpha_max"] = max(_percentile(lat_pool, 99), ESTIMATE_FLOORS["alpha_max"])
        values["beta_min"] = max(_percentile(lat_pool, 50), ESTIMATE_FLOORS["beta_min"])
    else:
        values["alpha_max"], values["beta_min"] = defaults.alpha_max, defaults.beta_min
        fallbacks.extend(["alpha_max", "beta_min"])
    values["b_max"] = max(values["b_max"], values["b_min"])

    params = replace(defaults, **values)
    return ParameterEstimate(params=params, fallback_fields=tuple(fallbacks))


def _lane_of(state: AgentState) -> int:
    if state.lane_id != LANE_UNKNOWN:
        return state.lane_id
    return int(np.floor(state.p[1] / LANE_WIDTH_M + 0.5))


def safety_envelope(
    ego: AgentState, neighbors: list[AgentState], params: RssParameters
) -> SafetyEnvelope:
    """Required distances against the most constraining neighbors.

    d_lon is the safe longitudinal distance against the nearest same-lane
    leader (0 without one); d_lat the safe lateral distance against the
    nearest adjacent-lane agent (mu without one). Longitudinal speeds are
    clamped at zero before entering the formula, which assumes
    same-direction travel.
    """
    ego_lane = _lane_of(ego)

    leader = None
    leader_rank = None
    adjacent = None
    adjacent_rank = None
    for other in neighbors:
        lane = _lane_of(other)
        if lane == ego_lane:
            gap = other.p[0] - ego.p[0]
            if gap > 0:
                rank = (gap, other.agent_id)
                if leader_rank is None or rank < leader_rank:
                    leader, leader_rank = other, rank
        elif abs(lane - ego_lane) == 1:
            dist = float(np.hypot(other.p[0] - ego.p[0], other.p[1] - ego.p[1]))
            rank = (dist, other.agent_id)
            if adjacent_rank is None or rank < adjacent_rank:
                adjacent, adjacent_rank = other, rank

    if leader is None:
        d_lon = 0.0
        leader_id = None
    else:
        d_lon = safe_longitudinal_distance(max(ego.v[0], 0.0), max(leader.v[0], 0.0), params)
        leader_id = leader.agent_id

    if adjacent is None:
        d_lat = params.mu
        adjacent_id = None
    else:
        if adjacent.p[1] >= ego.p[1]:
            v_right, v_left = ego.v[1], adjacent.v[1]
        else:
            v_right, v_left = adjacent.v[1], ego.v[1]
        d_lat = safe_lateral_distance(v_right, v_left, params)
        adjacent_id = adjacent.agent_id

    return SafetyEnvelope(
        d_lon=d_lon, d_lat=d_lat, ego_id=ego.agent_id,
        leader_id=leader_id, adjacent_id=adjacent_id,
    )
