"""Run configuration: strict JSON parsing with explicit key whitelists.

Unknown keys are rejected everywhere; a silently ignored ablation flag or a
typoed hyperparameter is the most expensive failure mode this artifact has.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .rss import CONTEXT_DEFAULTS, RssParameters

ABLATION_METHODS = {
    "A": ("intention_off",),
    "B": ("safety_spatial_off",),
    "C": ("temporal_encoder_off",),
    "D": ("multimodal_off",),
    "E": ("fusion_attention_off",),
    "F": ("guf_off",),
    "G": (),
}


@dataclass(frozen=True)
class AblationFlags:
    intention_off: bool = False        # method A
    safety_spatial_off: bool = False   # method B
    temporal_encoder_off: bool = False  # method C
    multimodal_off: bool = False       # method D
    fusion_attention_off: bool = False  # method E
    guf_off: bool = False              # method F
    rss_off: bool = False              # strips safe-distance inputs entirely

    @classmethod
    def for_method(cls, method: str) -> "AblationFlags":
        if method not in ABLATION_METHODS:
            raise ConfigError(f"unknown ablation method {method!r}; use A..G")
        return cls(**{name: True for name in ABLATION_METHODS[method]})

    def active(self) -> tuple[str, ...]:
        return tuple(f.name for f in fields(self) if getattr(self, f.name))


@dataclass(frozen=True)
class ModelConfig:
    hidden_size: int = 64
    fusion_heads: int = 4
    gat_heads: int = 2
    second_gat_heads: int = 1
    d_close: float = 25.0
    d_close_lon: float = 2.0
    dropout: float = 0.1
    variant: str = "full"  # or "small"
    ablations: AblationFlags = field(default_factory=AblationFlags)
    guf_at_inference: bool = False
    guf_log_sigma_init: float = -3.0
    bn_momentum: float = 0.1
    leaky_slope: float = 0.2
    rmse_reduction: str = "top_mode"  # or "weighted"

    def __post_init__(self):
        if self.hidden_size % self.fusion_heads != 0:
            raise ConfigError(
                f"hidden_size {self.hidden_size} must divide into "
                f"{self.fusion_heads} fusion heads"
            )
        if self.variant not in ("full", "small"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.rmse_reduction not in ("top_mode", "weighted"):
            raise ConfigError(f"unknown rmse_reduction {self.rmse_reduction!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")


@dataclass(frozen=True)
class DataConfig:
    paths: tuple[str, ...] = ()
    format: str = "ngsim_csv"
    synthetic: dict | None = None  # inline generator spec instead of files
    t_h: float = 3.0
    t_f: float = 5.0
    frame_rate: float = 10.0
    downsample: int = 2
    stride: int = 5
    n_max: int = 8
    seed: int = 0
    split: tuple[float, float, float] = (0.7, 0.15, 0.15)
    context: str = "highway"
    ego_only: bool = False  # restrict egos to agent id 0 (synthetic convention)

    def __post_init__(self):
        if self.context not in CONTEXT_DEFAULTS:
            raise ConfigError(f"unknown context {self.context!r}")
        if not self.paths and self.synthetic is None:
            raise ConfigError("data section needs either paths or a synthetic block")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 128
    epochs: int = 50
    t0: int = 10
    t_mult: int = 2
    lambda_nll: float = 1.0
    lambda_maneuver: float = 1.0
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("lr, batch_size, and epochs must be positive")


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig
    model: ModelConfig
    train: TrainConfig
    rss: RssParameters | str = "estimate"
    out_dir: str = "runs/default"

    def rss_mode(self) -> str:
        return "estimate" if isinstance(self.rss, str) else "explicit"


def _take(raw: dict, section: str, allowed: set[str]) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"section {section!r} must be an object, got {type(raw).__name__}")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {section}: {', '.join(sorted(unknown))}"
        )
    return dict(raw)


def _field_names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def parse_run_config(raw: dict) -> RunConfig:
    top = _take(raw, "config", {"data", "model", "train", "rss", "out_dir"})

    data_kw = _take(top.get("data", {}), "data", _field_names(DataConfig))
    if "paths" in data_kw:
        data_kw["paths"] = tuple(data_kw["paths"])
    if "split" in data_kw:
        data_kw["split"] = tuple(data_kw["split"])
    data = DataConfig(**data_kw)

    model_kw = _take(top.get("model", {}), "model", _field_names(ModelConfig) | {"method"})
    method = model_kw.pop("method", None)
    abl_kw = model_kw.pop("ablations", None)
    if method is not None and abl_kw is not None:
        raise ConfigError("give either model.method or model.ablations, not both")
    if method is not None:
        model_kw["ablations"] = AblationFlags.for_method(method)
    elif abl_kw is not None:
        abl = _take(abl_kw, "model.ablations", _field_names(AblationFlags))
        model_kw["ablations"] = AblationFlags(**abl)
    model = ModelConfig(**model_kw)

    train_kw = _take(top.get("train", {}), "train", _field_names(TrainConfig))
    train = TrainConfig(**train_kw)

    rss_raw = top.get("rss", "estimate")
    if isinstance(rss_raw, str):
        if rss_raw != "estimate":
            raise ConfigError(f"rss must be 'estimate' or a parameter object, got {rss_raw!r}")
        rss = "estimate"
    else:
        rss_kw = _take(rss_raw, "rss", {
            "rho", "a_max", "b_min", "b_max", "alpha_max", "beta_min", "mu", "context",
        })
        rss_kw.setdefault("context", data.context)
        rss = RssParameters(**rss_kw)

    return RunConfig(
        data=data, model=model, train=train, rss=rss,
        out_dir=str(top.get("out_dir", "runs/default")),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_run_config(raw)


def config_digest(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_config_to_dict(cfg: RunConfig) -> dict:
    out = {
        "data": asdict(cfg.data),
        "model": asdict(cfg.model),
        "train": asdict(cfg.train),
        "rss": cfg.rss if isinstance(cfg.rss, str) else cfg.rss.to_dict(),
        "out_dir": cfg.out_dir,
    }
    out["data"]["paths"] = list(out["data"]["paths"])
    out["data"]["split"] = list(out["data"]["split"])
    return out
