"""Graph attention with learnable feature-noise injection.

The encoder stack applied per history step is: batch norm, noise injection,
a bank of attention heads whose neighbor-averaged outputs pass through ELU,
dropout, a second (single-head by default, configurable) attention layer,
then a linear reshape to the working width, with a residual connection from
the post-noise features into the second attention layer's output.

Noise is one fresh per-feature Gaussian draw per forward pass, shared by
every node and timestep, with a learnable log standard deviation so the
scale stays positive and receives gradient through the reparameterized
draw. At log_sigma = -inf the injection is exactly the identity.

All attention is dense and masked: coefficients are zero wherever the
adjacency (restricted to valid nodes) is zero, and each row with at least
one neighbor forms a simplex.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .nn import (
    Linear,
    Module,
    Parameter,
    Tensor,
    add,
    dropout,
    elu,
    exp,
    leaky_relu,
    matmul,
    mul,
    reshape,
    sub,
    sum_,
    swapaxes,
    uniform_init,
)
from .nn import tensor as T

LEAKY_SLOPE_DEFAULT = 0.2
GUF_LOG_SIGMA_INIT = -3.0
MASK_NEG = 1e9


class GufNoise(Module):
    """Learnable per-feature noise scale, shared across nodes and steps."""

    def __init__(self, dim: int, log_sigma_init: float = GUF_LOG_SIGMA_INIT):
        self.log_sigma = Parameter(np.full(dim, float(log_sigma_init)))
        self.dim = dim

    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma.data)


def guf_apply(
    nodes: Tensor, noise: GufNoise, training: bool, rng: np.random.Generator
) -> Tensor:
    """Add one reparameterized noise draw to every node's features."""
    nodes = T._as_tensor(nodes)
    if not training:
        return nodes
    if nodes.shape[-1] != noise.dim:
        raise DimensionError(
            f"noise is sized for {noise.dim} features, nodes have shape {nodes.shape}"
        )
    z = rng.standard_normal(noise.dim)
    eps = mul(exp(noise.log_sigma), z)
    return add(nodes, eps)


class GatHead(Module):
    """Shared projection plus the attention vector of one head."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.weight = Parameter(uniform_init(rng, in_dim, (in_dim, out_dim)))
        self.attn = Parameter(uniform_init(rng, 2 * out_dim, (2 * out_dim,)))
        self.in_dim = in_dim
        self.out_dim = out_dim

    def project(self, nodes: Tensor) -> Tensor:
        if nodes.shape[-1] != self.in_dim:
            raise DimensionError(
                f"head expects {self.in_dim} input features, got shape {nodes.shape}"
            )
        return matmul(nodes, self.weight)


def masked_softmax_rows(scores: Tensor, adjacency: np.ndarray) -> Tensor:
    """Row softmax over allowed entries; all-masked rows come out zero."""
    blocked = (1.0 - adjacency) * -MASK_NEG
    shifted = add(mul(scores, adjacency), blocked)
    row_max = shifted.data.max(axis=-1, keepdims=True)
    weights = mul(exp(sub(shifted, row_max)), adjacency)
    denom = sum_(weights, axis=-1, keepdims=True)
    safe = add(denom, (denom.data == 0.0).astype(np.float64))
    return T.div(weights, safe)


def gat_attention(
    projected: Tensor,
    adjacency: np.ndarray,
    attn: Parameter,
    leaky_slope: float = LEAKY_SLOPE_DEFAULT,
) -> Tensor:
    """Attention coefficients over neighbors from projected node features.

    Scores follow the concatenation form: the attention vector splits into
    a source and a destination half, so score(i, j) = leaky(a_s.h_i +
    a_d.h_j), masked to the adjacency and row-normalized.
    """
    c = projected.shape[-1]
    if attn.shape != (2 * c,):
        raise DimensionError(
            f"attention vector shape {attn.shape} does not match 2x{c} features"
        )
    a_src = reshape(attn[0:c], (c, 1))
    a_dst = reshape(attn[c : 2 * c], (c, 1))
    s_src = matmul(projected, a_src)                     # (..., N, 1)
    s_dst = swapaxes(matmul(projected, a_dst), -1, -2)   # (..., 1, N)
    scores = leaky_relu(add(s_src, s_dst), leaky_slope)
    return masked_softmax_rows(scores, adjacency)


def gat_layer(
    nodes: Tensor,
    adjacency: np.ndarray,
    heads: list[GatHead],
    leaky_slope: float = LEAKY_SLOPE_DEFAULT,
) -> Tensor:
    """ELU of the head-averaged, attention-weighted neighbor aggregation."""
    if not heads:
        raise DimensionError("gat_layer needs at least one head")
    total = None
    for head in heads:
        projected = head.project(nodes)
        alpha = gat_attention(projected, adjacency, head.attn, leaky_slope)
        aggregated = matmul(alpha, projected)
        total = aggregated if total is None else add(total, aggregated)
    return elu(mul(total, 1.0 / len(heads)))


class UncertaintyGatStack(Module):
    """The full per-step encoder; see the module docstring for the layout."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        heads: int = 2,
        second_heads: int = 1,
        dropout_rate: float = 0.1,
        leaky_slope: float = LEAKY_SLOPE_DEFAULT,
        bn_momentum: float = 0.1,
        log_sigma_init: float = GUF_LOG_SIGMA_INIT,
    ):
        from .nn import BatchNorm

        self.norm = BatchNorm(in_dim, momentum=bn_momentum)
        self.guf = GufNoise(in_dim, log_sigma_init)
        self.heads = [GatHead(in_dim, out_dim, rng) for _ in range(heads)]
        self.second = [GatHead(out_dim, out_dim, rng) for _ in range(second_heads)]
        self.skip = Linear(in_dim, out_dim, rng, bias=False)
        self.out = Linear(out_dim, out_dim, rng)
        self.dropout_rate = dropout_rate
        self.leaky_slope = leaky_slope
        self.in_dim = in_dim
        self.out_dim = out_dim

    def __call__(
        self,
        features,
        adjacency: np.ndarray,
        mask: np.ndarray,
        training: bool,
        rng: np.random.Generator,
        noise_active: bool | None = None,
    ) -> Tensor:
        """Encode (..., N, F) node features into (..., N, out_dim).

        ``adjacency`` must already be restricted to valid nodes; ``mask``
        zeroes the representations of padded slots on the way out.
        ``noise_active`` overrides the training flag for the noise layer
        only (the inference-noise config switch).
        """
        x = T._as_tensor(features)
        noise_on = training if noise_active is None else noise_active
        normed = self.norm(x, training=training, mask=mask)
        noised = guf_apply(normed, self.guf, noise_on, rng)
        hidden = gat_layer(noised, adjacency, self.heads, self.leaky_slope)
        hidden = dropout(hidden, self.dropout_rate, training, rng)
        refined = gat_layer(hidden, adjacency, self.second, self.leaky_slope)
        merged = add(refined, self.skip(noised))
        out = self.out(merged)
        return mul(out, mask.astype(np.float64)[..., None])
