"""Displacement metrics: per-horizon RMSE, per-class ADE/FDE, weighted sums."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data.types import AgentType
from .errors import ArgumentError

CLASS_WEIGHTS = {
    AgentType.VEHICLE: 0.20,
    AgentType.PEDESTRIAN: 0.58,
    AgentType.BICYCLE: 0.22,
}


def weighted_class_sum(per_class: dict[AgentType, float]) -> float:
    """Fixed-weight combination over vehicle/pedestrian/bicycle metrics."""
    return float(sum(CLASS_WEIGHTS[c] * per_class.get(c, 0.0) for c in CLASS_WEIGHTS))


def wsade(ade_vehicle: float, ade_pedestrian: float, ade_bicycle: float) -> float:
    return weighted_class_sum(
        {
            AgentType.VEHICLE: ade_vehicle,
            AgentType.PEDESTRIAN: ade_pedestrian,
            AgentType.BICYCLE: ade_bicycle,
        }
    )


def wsfde(fde_vehicle: float, fde_pedestrian: float, fde_bicycle: float) -> float:
    return wsade(fde_vehicle, fde_pedestrian, fde_bicycle)


@dataclass
class MetricReport:
    rmse_by_horizon: dict[float, float] = field(default_factory=dict)
    ade_by_class: dict[str, float] = field(default_factory=dict)
    fde_by_class: dict[str, float] = field(default_factory=dict)
    ade: float = 0.0
    fde: float = 0.0
    wsade: float = 0.0
    wsfde: float = 0.0
    count: int = 0
    classes_present: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rmse_by_horizon": {f"{h:g}": v for h, v in self.rmse_by_horizon.items()},
            "ade_by_class": dict(self.ade_by_class),
            "fde_by_class": dict(self.fde_by_class),
            "ade": self.ade,
            "fde": self.fde,
            "wsade": self.wsade,
            "wsfde": self.wsfde,
            "count": self.count,
            "classes_present": list(self.classes_present),
        }


def displacement_errors(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-step Euclidean displacement between (..., t_f, 2) trajectories."""
    if pred.shape != truth.shape:
        raise ArgumentError(f"trajectory shapes differ: {pred.shape} vs {truth.shape}")
    return np.linalg.norm(pred - truth, axis=-1)


def rmse_by_horizon(
    preds: np.ndarray, truths: np.ndarray, frame_rate: float
) -> dict[float, float]:
    """RMSE at each whole second of horizon covered by the prediction.

    The value at horizon h uses only the single step closest to h seconds,
    so truncating the horizon never changes earlier entries.
    """
    errors = displacement_errors(preds, truths)  # (W, t_f)
    t_f = errors.shape[-1]
    out: dict[float, float] = {}
    horizon_s = t_f / frame_rate
    second = 1
    while second <= horizon_s + 1e-9:
        step = int(round(second * frame_rate)) - 1
        if step >= t_f:
            break
        out[float(second)] = float(np.sqrt((errors[:, step] ** 2).mean()))
        second += 1
    return out


def compute_metric_report(
    preds: np.ndarray,
    truths: np.ndarray,
    classes: np.ndarray,
    frame_rate: float,
) -> MetricReport:
    """Aggregate displacement metrics over stacked (W, t_f, 2) predictions."""
    if len(preds) == 0:
        raise ArgumentError("cannot evaluate an empty prediction set")
    errors = displacement_errors(preds, truths)
    report = MetricReport(
        rmse_by_horizon=rmse_by_horizon(preds, truths, frame_rate),
        ade=float(errors.mean()),
        fde=float(errors[:, -1].mean()),
        count=len(preds),
    )
    per_class_ade: dict[AgentType, float] = {}
    per_class_fde: dict[AgentType, float] = {}
    present = []
    for agent_class in AgentType:
        sel = classes == int(agent_class)
        if not sel.any():
            continue
        present.append(agent_class.name.lower())
        per_class_ade[agent_class] = float(errors[sel].mean())
        per_class_fde[agent_class] = float(errors[sel, -1].mean())
    report.ade_by_class = {c.name.lower(): v for c, v in per_class_ade.items()}
    report.fde_by_class = {c.name.lower(): v for c, v in per_class_fde.items()}
    report.wsade = weighted_class_sum(per_class_ade)
    report.wsfde = weighted_class_sum(per_class_fde)
    report.classes_present = tuple(present)
    return report
