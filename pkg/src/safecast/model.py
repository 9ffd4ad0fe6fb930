"""The end-to-end forecaster.

Full variant: two uncertainty-aware graph encoders (kinematic interaction
graphs and safety-distance graphs) plus an MLP-ELU-LSTM temporal encoder
over the ego's own state and safety distances; a fusion block that convolves
the stacked per-agent grids, pools them to per-step tokens (ego slice plus
masked neighbor mean), cross-attends from the temporal features, and
refines through a gated linear unit with layer normalization; finally a
maneuver-conditioned decoder producing one bivariate-Gaussian sequence per
(lateral x longitudinal) maneuver mode along with factorized maneuver
probabilities.

Small variant: one merged graph encoder over kinematics plus safety
distances; the per-step temporal stream is the encoder's ego slice; the
fusion attention and decoder are unchanged; the convolutional grid stage
and the dedicated temporal encoder disappear.

Mode conditioning evaluates the shared decoder once per mode with that
mode's one-hot pair appended to the fused context. Means are emitted as
per-step displacements and accumulated, standard deviations go through a
clamped exponential, correlations through tanh.

Every module of a variant is constructed up front regardless of ablation
flags, so toggling an ablation rewires the forward pass without changing
the parameter set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .data.labels import extract_maneuver_labels, label_indices
from .data.types import SceneWindow
from .errors import ArgumentError, InferenceError
from .gat import UncertaintyGatStack
from .graphs import DIG_FEATURES, DSG_FEATURES, graph_sequence
from .nn import (
    Conv2d,
    LayerNorm,
    Linear,
    LSTMCell,
    Module,
    Tensor,
    clip,
    concat,
    cumsum,
    elu,
    exp,
    glu,
    matmul,
    mul,
    relu,
    reshape,
    softmax,
    stack,
    swapaxes,
    tanh,
    transpose,
)
from .nn import tensor as T
from .rss import RssParameters

# fixed feature scaling for the unnormalized temporal stream
TEMPORAL_DIM = 11  # d_lon, d_lat, x, y, vx, vy, ax, ay, type one-hot (3)
TEMPORAL_SCALE = np.array([0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.5, 0.5, 1.0, 1.0, 1.0])

MERGED_FEATURES = DIG_FEATURES + 2  # kinematics + type one-hot + d_lon, d_lat

LOG_SIGMA_CLAMP = 8.0
CORR_RAW_CLAMP = 5.0

N_LAT = 3
N_LON = 3


@dataclass
class Batch:
    """Stacked, graph-encoded windows ready for the model."""

    dig_x: np.ndarray       # (B, T, N, 9)
    dig_adj: np.ndarray     # (B, T, N, N)
    dsg_x: np.ndarray       # (B, T, N, 4)
    dsg_adj: np.ndarray     # (B, T, N, N)
    mask: np.ndarray        # (B, T, N) bool
    temporal_x: np.ndarray  # (B, T, 11)
    future: np.ndarray      # (B, t_f, 2)
    lat_idx: np.ndarray     # (B,) true lateral maneuver index
    lon_idx: np.ndarray     # (B,) true longitudinal maneuver index
    ego_class: np.ndarray   # (B,) agent type values

    @property
    def size(self) -> int:
        return self.dig_x.shape[0]

    @property
    def t_f(self) -> int:
        return self.future.shape[1]

    def select(self, indices) -> "Batch":
        return Batch(
            self.dig_x[indices], self.dig_adj[indices], self.dsg_x[indices],
            self.dsg_adj[indices], self.mask[indices], self.temporal_x[indices],
            self.future[indices], self.lat_idx[indices], self.lon_idx[indices],
            self.ego_class[indices],
        )


def encode_windows(
    windows: list[SceneWindow], cfg: ModelConfig, rss_params: RssParameters
) -> Batch:
    """Build graph sequences and temporal streams for a list of windows."""
    if not windows:
        raise ArgumentError("cannot encode an empty window list")
    t_h = windows[0].t_h
    n = windows[0].n_slots
    b = len(windows)
    t_f = windows[0].t_f

    dig_x = np.zeros((b, t_h, n, DIG_FEATURES))
    dig_adj = np.zeros((b, t_h, n, n))
    dsg_x = np.zeros((b, t_h, n, DSG_FEATURES))
    dsg_adj = np.zeros((b, t_h, n, n))
    mask = np.zeros((b, t_h, n), dtype=bool)
    temporal_x = np.zeros((b, t_h, TEMPORAL_DIM))
    future = np.zeros((b, t_f, 2))
    lat_idx = np.zeros(b, dtype=np.int64)
    lon_idx = np.zeros(b, dtype=np.int64)
    ego_class = np.zeros(b, dtype=np.int64)

    for i, window in enumerate(windows):
        digs = graph_sequence(window, "DIG", d_close=cfg.d_close)
        dsgs = graph_sequence(
            window, "DSG", rss_params=rss_params, d_close_lon=cfg.d_close_lon
        )
        for t in range(t_h):
            dig_x[i, t] = digs[t].node_features
            dig_adj[i, t] = digs[t].adjacency
            dsg_x[i, t] = dsgs[t].node_features
            dsg_adj[i, t] = dsgs[t].adjacency
            mask[i, t] = digs[t].mask
            temporal_x[i, t, 0:2] = dsgs[t].node_features[0, 2:4]
            temporal_x[i, t, 2:8] = window.history[0, t]
            temporal_x[i, t, 8 + int(window.agent_types[0])] = 1.0
        future[i] = window.future
        lat, lon = extract_maneuver_labels(window)
        lat_idx[i], lon_idx[i] = label_indices(lat, lon)
        ego_class[i] = int(window.agent_types[0])

    if cfg.ablations.rss_off:
        dsg_x[..., 2:4] = 0.0
        temporal_x[..., 0:2] = 0.0

    return Batch(
        dig_x, dig_adj, dsg_x, dsg_adj, mask, temporal_x, future,
        lat_idx, lon_idx, ego_class,
    )


@dataclass
class DecoderOutput:
    """Tape tensors for the loss path plus mode-grid conveniences."""

    lat_probs: Tensor   # (B, 3)
    lon_probs: Tensor   # (B, 3)
    mu: Tensor          # (B, 3, 3, t_f, 2) accumulated positions
    log_sigma: Tensor   # (B, 3, 3, t_f, 2)
    sigma: Tensor       # (B, 3, 3, t_f, 2)
    corr: Tensor        # (B, 3, 3, t_f, 1)
    corr_raw: Tensor    # (B, 3, 3, t_f, 1)


@dataclass
class ForecastDistribution:
    """Per-mode bivariate Gaussian sequences with maneuver probabilities."""

    lat_probs: np.ndarray     # (3,)
    lon_probs: np.ndarray     # (3,)
    trajectories: np.ndarray  # (3, 3, t_f, 5): mu_x, mu_y, sigma_x, sigma_y, corr

    @property
    def maneuver_probs(self) -> np.ndarray:
        return np.outer(self.lat_probs, self.lon_probs)

    @property
    def t_f(self) -> int:
        return self.trajectories.shape[2]


def predict_point(dist: ForecastDistribution, mode: str = "top_mode") -> np.ndarray:
    """Reduce a mode grid to one (t_f, 2) trajectory."""
    if mode == "top_mode":
        joint = dist.maneuver_probs
        i, j = np.unravel_index(np.argmax(joint), joint.shape)
        return dist.trajectories[i, j, :, :2].copy()
    if mode == "weighted":
        joint = dist.maneuver_probs[:, :, None, None]
        return (joint * dist.trajectories[:, :, :, :2]).sum(axis=(0, 1))
    raise ArgumentError(f"unknown point-prediction mode {mode!r}")


def _mode_one_hots() -> np.ndarray:
    rows = []
    for i in range(N_LAT):
        for j in range(N_LON):
            row = np.zeros(N_LAT + N_LON)
            row[i] = 1.0
            row[N_LAT + j] = 1.0
            rows.append(row)
    return np.array(rows)  # (9, 6)


class SafecastModel(Module):
    def __init__(self, cfg: ModelConfig, seed: int = 0):
        rng = np.random.default_rng(seed)
        c = cfg.hidden_size
        self.cfg = cfg
        stack_kw = dict(
            heads=cfg.gat_heads,
            second_heads=cfg.second_gat_heads,
            dropout_rate=cfg.dropout,
            leaky_slope=cfg.leaky_slope,
            bn_momentum=cfg.bn_momentum,
            log_sigma_init=cfg.guf_log_sigma_init,
        )
        if cfg.variant == "full":
            self.intention_stack = UncertaintyGatStack(DIG_FEATURES, c, rng, **stack_kw)
            self.safety_stack = UncertaintyGatStack(DSG_FEATURES, c, rng, **stack_kw)
            self.temporal_mlp = Linear(TEMPORAL_DIM, c, rng)
            self.temporal_lstm = LSTMCell(c, c, rng)
            self.temporal_bypass = Linear(TEMPORAL_DIM, c, rng)
            self.fusion_conv = Conv2d(2 * c, c, rng, kernel_size=3, padding=1)
            self.fusion_mlp = Linear(c, c, rng)
        else:
            self.merged_stack = UncertaintyGatStack(MERGED_FEATURES, c, rng, **stack_kw)
        self.q_proj = Linear(c, c, rng)
        self.k_proj = Linear(c, c, rng)
        self.v_proj = Linear(c, c, rng)
        self.o_proj = Linear(c, c, rng)
        if cfg.variant == "full":
            self.fusion_bypass = Conv2d(2 * c, c, rng, kernel_size=3, padding=1)
        self.glu_linear = Linear(c, 2 * c, rng)
        self.norm = LayerNorm(c)
        self.maneuver_lat = Linear(c, N_LAT, rng)
        self.maneuver_lon = Linear(c, N_LON, rng)
        self.dec_mlp_in = Linear(c + N_LAT + N_LON, c, rng)
        self.dec_lstm = LSTMCell(c, c, rng)
        self.dec_mlp_out = Linear(c, 5, rng)
        self.bind_parameter_names()

    def bind_parameter_names(self) -> None:
        for name, p in self.named_parameters():
            p.name = name

    # ------------------------------------------------------------- encoders

    def intention_encode(self, batch: Batch, training: bool, rng) -> Tensor:
        """Interaction-graph features, (B, T, N, C); zeros under ablation A."""
        b, t, n, _ = batch.dig_x.shape
        if self.cfg.ablations.intention_off:
            return Tensor(np.zeros((b, t, n, self.cfg.hidden_size)))
        return self.intention_stack(
            batch.dig_x, batch.dig_adj, batch.mask, training, rng,
            noise_active=self._noise_active(training),
        )

    def safety_encode(self, batch: Batch, training: bool, rng) -> tuple[Tensor, Tensor]:
        """Safety-graph features (B,T,N,C) and temporal features (B,T,C)."""
        b, t, n, _ = batch.dsg_x.shape
        if self.cfg.ablations.safety_spatial_off:
            spatial = Tensor(np.zeros((b, t, n, self.cfg.hidden_size)))
        else:
            spatial = self.safety_stack(
                batch.dsg_x, batch.dsg_adj, batch.mask, training, rng,
                noise_active=self._noise_active(training),
            )
        stream = Tensor(batch.temporal_x * TEMPORAL_SCALE)
        if self.cfg.ablations.temporal_encoder_off:
            temporal = self.temporal_bypass(stream)
        else:
            temporal = self.temporal_lstm.run_sequence(elu(self.temporal_mlp(stream)))
        return spatial, temporal

    def _noise_active(self, training: bool) -> bool:
        if self.cfg.ablations.guf_off:
            return False
        return training or self.cfg.guf_at_inference

    # --------------------------------------------------------------- fusion

    def _pool_tokens(self, grid: Tensor, mask: np.ndarray) -> Tensor:
        """Ego slice plus masked neighbor mean: (B, T, N, C) -> (B, T, C)."""
        ego = grid[:, :, 0, :]
        neighbor_mask = mask[:, :, 1:].astype(np.float64)
        counts = np.maximum(neighbor_mask.sum(axis=-1, keepdims=True), 1.0)
        weights = (neighbor_mask / counts)[..., None]  # (B, T, N-1, 1)
        neighbors = T.sum_(mul(grid[:, :, 1:, :], weights), axis=2)
        return ego + neighbors

    def _cross_attention(self, queries: Tensor, keys_values: Tensor) -> Tensor:
        b, t, c = queries.shape
        h = self.cfg.fusion_heads
        dk = c // h

        def split_heads(x: Tensor) -> Tensor:
            return transpose(reshape(x, (b, t, h, dk)), (0, 2, 1, 3))

        q = split_heads(self.q_proj(queries))
        k = split_heads(self.k_proj(keys_values))
        v = split_heads(self.v_proj(keys_values))
        scores = mul(matmul(q, swapaxes(k, -1, -2)), 1.0 / np.sqrt(dk))
        alpha = softmax(scores, axis=-1)
        mixed = matmul(alpha, v)  # (B, h, T, dk)
        merged = reshape(transpose(mixed, (0, 2, 1, 3)), (b, t, c))
        return self.o_proj(merged)

    def fuse(
        self,
        intention: Tensor,
        safety: Tensor,
        temporal: Tensor,
        mask: np.ndarray,
    ) -> Tensor:
        """Grid conv + pooling + cross-attention + gated refinement."""
        grid = concat([intention, safety], axis=-1)        # (B, T, N, 2C)
        conv_in = transpose(grid, (0, 3, 1, 2))            # (B, 2C, T, N)
        convolved = relu(self.fusion_conv(conv_in))
        per_agent = self.fusion_mlp(transpose(convolved, (0, 2, 3, 1)))
        tokens = self._pool_tokens(per_agent, mask)        # (B, T, C)
        if self.cfg.ablations.fusion_attention_off:
            paired = concat([temporal, tokens], axis=-1)   # (B, T, 2C)
            conv_img = reshape(
                swapaxes(paired, 1, 2),
                (paired.shape[0], paired.shape[2], paired.shape[1], 1),
            )
            mixed = self.fusion_bypass(conv_img)           # (B, C, T, 1)
            fused = transpose(reshape(mixed, mixed.shape[:3]), (0, 2, 1))
        else:
            fused = self._cross_attention(temporal, tokens)
        return self.norm(glu(self.glu_linear(fused)))

    # --------------------------------------------------------------- decode

    def decode(self, fused: Tensor, t_f: int) -> DecoderOutput:
        """Maneuver heads plus the per-mode Gaussian parameter sequences."""
        context = fused[:, -1, :]  # most recent step carries the scene state
        b, c = context.shape
        if self.cfg.ablations.multimodal_off:
            modes = np.zeros((1, N_LAT + N_LON))
            n_modes = 1
            lat_probs = Tensor(np.full((b, N_LAT), 1.0 / N_LAT))
            lon_probs = Tensor(np.full((b, N_LON), 1.0 / N_LON))
        else:
            modes = _mode_one_hots()
            n_modes = modes.shape[0]
            lat_probs = softmax(self.maneuver_lat(context), axis=-1)
            lon_probs = softmax(self.maneuver_lon(context), axis=-1)

        tiled = reshape(
            concat(
                [
                    reshape(context, (b, 1, c)) + np.zeros((b, n_modes, c)),
                    Tensor(np.broadcast_to(modes, (b, n_modes, modes.shape[1]))),
                ],
                axis=-1,
            ),
            (b * n_modes, c + N_LAT + N_LON),
        )
        state = elu(self.dec_mlp_in(tiled))
        h, cell = self.dec_lstm.init_state(b * n_modes)
        steps = []
        for _ in range(t_f):
            h, cell = self.dec_lstm(state, h, cell)
            steps.append(self.dec_mlp_out(h))
        raw = stack(steps, axis=1)  # (B * modes, t_f, 5)

        deltas = raw[:, :, 0:2]
        mu_flat = cumsum(deltas, axis=1)
        log_sigma_flat = clip(raw[:, :, 2:4], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
        corr_raw_flat = clip(raw[:, :, 4:5], -CORR_RAW_CLAMP, CORR_RAW_CLAMP)

        def to_grid(x: Tensor, width: int) -> Tensor:
            grid = reshape(x, (b, n_modes, t_f, width))
            if n_modes == 1:
                grid = grid + np.zeros((b, N_LAT * N_LON, t_f, width))
            return reshape(grid, (b, N_LAT, N_LON, t_f, width))

        mu = to_grid(mu_flat, 2)
        log_sigma = to_grid(log_sigma_flat, 2)
        corr_raw = to_grid(corr_raw_flat, 1)
        return DecoderOutput(
            lat_probs=lat_probs,
            lon_probs=lon_probs,
            mu=mu,
            log_sigma=log_sigma,
            sigma=exp(log_sigma),
            corr=tanh(corr_raw),
            corr_raw=corr_raw,
        )

    # -------------------------------------------------------------- forward

    def forward(self, batch: Batch, training: bool, rng: np.random.Generator) -> DecoderOutput:
        if self.cfg.variant == "small":
            return self._small_forward(batch, training, rng)
        intention = self.intention_encode(batch, training, rng)
        safety, temporal = self.safety_encode(batch, training, rng)
        fused = self.fuse(intention, safety, temporal, batch.mask)
        return self.decode(fused, batch.t_f)

    def _small_forward(self, batch: Batch, training: bool, rng) -> DecoderOutput:
        merged_x = np.concatenate([batch.dig_x, batch.dsg_x[..., 2:4]], axis=-1)
        if self.cfg.ablations.rss_off:
            merged_x = merged_x.copy()
            merged_x[..., DIG_FEATURES:] = 0.0
        grid = self.merged_stack(
            merged_x, batch.dig_adj, batch.mask, training, rng,
            noise_active=self._noise_active(training),
        )
        temporal = grid[:, :, 0, :]  # ego slice along the agent dimension
        tokens = self._pool_tokens(grid, batch.mask)
        fused = self.norm(glu(self.glu_linear(self._cross_attention(temporal, tokens))))
        return self.decode(fused, batch.t_f)

    # ------------------------------------------------------------ inference

    def forecast(
        self,
        window: SceneWindow,
        rss_params: RssParameters,
        rng: np.random.Generator | None = None,
    ) -> ForecastDistribution:
        batch = encode_windows([window], self.cfg, rss_params)
        return self.forecast_batch(batch, rng)[0]

    def forecast_batch(
        self, batch: Batch, rng: np.random.Generator | None = None
    ) -> list[ForecastDistribution]:
        rng = rng or np.random.default_rng(0)
        out = self.forward(batch, training=False, rng=rng)
        lat = out.lat_probs.data
        lon = out.lon_probs.data
        traj = np.concatenate([out.mu.data, out.sigma.data, out.corr.data], axis=-1)
        if not np.all(np.isfinite(traj)):
            raise InferenceError("forward pass produced non-finite distribution parameters")
        return [
            ForecastDistribution(
                lat_probs=lat[i].copy(), lon_probs=lon[i].copy(),
                trajectories=traj[i].copy(),
            )
            for i in range(batch.size)
        ]

    # ----------------------------------------------------------- checkpoint

    def state_entries(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_entries(self, entries: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(entries)
        extra = set(entries) - set(own)
        if missing or extra:
            raise ArgumentError(
                f"checkpoint mismatch; missing={sorted(missing)[:4]} extra={sorted(extra)[:4]}"
            )
        for name, p in own.items():
            if entries[name].shape != p.data.shape:
                raise ArgumentError(
                    f"checkpoint shape mismatch for {name}: "
                    f"{entries[name].shape} vs {p.data.shape}"
                )
            p.data = entries[name].astype(np.float64).copy()
