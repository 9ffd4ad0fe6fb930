"""Neural layers composed from tape primitives.

Weights initialize uniformly in +/- 1/sqrt(fan_in); biases start at zero.
Layers that behave differently during training (dropout, batch norm) take
explicit ``training`` flags rather than hidden global state.
"""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError, DimensionError
from . import tensor as T
from .tensor import Parameter, Tensor


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Parameter container with deterministic, attribute-ordered traversal."""

    def named_parameters(self, prefix: str = ""):
        for key, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + key, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{key}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Parameter):
                        yield f"{prefix}{key}.{i}", item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{key}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self) -> list[Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.reset_grad()


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        self.weight = Parameter(uniform_init(rng, in_dim, (in_dim, out_dim)))
        self.bias = Parameter(np.zeros(out_dim)) if bias else None
        self.in_dim = in_dim
        self.out_dim = out_dim

    def __call__(self, x: Tensor) -> Tensor:
        x = T._as_tensor(x)
        if x.shape[-1] != self.in_dim:
            raise DimensionError(
                f"linear expects last extent {self.in_dim}, got input shape "
                f"{x.shape} vs weight shape {self.weight.shape}"
            )
        squeeze = x.ndim == 1
        if squeeze:
            x = T.reshape(x, (1, self.in_dim))
        y = T.matmul(x, self.weight)
        if self.bias is not None:
            y = T.add(y, self.bias)
        if squeeze:
            y = T.reshape(y, (self.out_dim,))
        return y


class LayerNorm(Module):
    """Normalize the last axis to zero mean / unit variance, then affine."""

    EPS = 1e-5

    def __init__(self, dim: int):
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))
        self.dim = dim

    def __call__(self, x: Tensor) -> Tensor:
        x = T._as_tensor(x)
        if x.shape[-1] != self.dim:
            raise DimensionError(
                f"layer_norm expects last extent {self.dim}, got shape {x.shape}"
            )
        mu = T.mean(x, axis=-1, keepdims=True)
        centered = T.sub(x, mu)
        var = T.mean(T.mul(centered, centered), axis=-1, keepdims=True)
        normed = T.div(centered, T.sqrt(T.add(var, self.EPS)))
        return T.add(T.mul(normed, self.gain), self.bias)


class BatchNorm(Module):
    """Feature-wise batch normalization with running statistics.

    Statistics are taken over every leading axis; an optional boolean mask
    (matching the leading axes) restricts them to valid positions so padded
    graph nodes do not pollute the estimates. Running buffers are stored as
    non-trainable parameters so checkpoints capture them.
    """

    EPS = 1e-5

    def __init__(self, dim: int, momentum: float = 0.1):
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))
        self.running_mean = Parameter(np.zeros(dim), trainable=False)
        self.running_var = Parameter(np.ones(dim), trainable=False)
        self.momentum = momentum
        self.dim = dim

    def __call__(self, x: Tensor, training: bool, mask: np.ndarray | None = None) -> Tensor:
        x = T._as_tensor(x)
        if x.shape[-1] != self.dim:
            raise DimensionError(
                f"batch_norm expects last extent {self.dim}, got shape {x.shape}"
            )
        axes = tuple(range(x.ndim - 1))
        if training:
            if mask is None:
                mu = T.mean(x, axis=axes, keepdims=True)
                centered = T.sub(x, mu)
                var = T.mean(T.mul(centered, centered), axis=axes, keepdims=True)
            else:
                m = mask.astype(np.float64)[..., None]
                count = max(float(m.sum()), 1.0)
                mu = T.mul(T.sum_(T.mul(x, m), axis=axes, keepdims=True), 1.0 / count)
                centered = T.sub(x, mu)
                var = T.mul(
                    T.sum_(T.mul(T.mul(centered, centered), m), axis=axes, keepdims=True),
                    1.0 / count,
                )
            self.running_mean.data = (
                (1.0 - self.momentum) * self.running_mean.data
                + self.momentum * mu.data.reshape(self.dim)
            )
            self.running_var.data = (
                (1.0 - self.momentum) * self.running_var.data
                + self.momentum * var.data.reshape(self.dim)
            )
        else:
            mu = Tensor(self.running_mean.data)
            var = Tensor(self.running_var.data)
            centered = T.sub(x, mu)
        normed = T.div(centered, T.sqrt(T.add(var, self.EPS)))
        return T.add(T.mul(normed, self.gain), self.bias)


class LSTMCell(Module):
    """Standard gated recurrence: sigmoid input/forget/output, tanh candidate."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.w_input = Parameter(uniform_init(rng, in_dim, (in_dim, 4 * hidden)))
        self.w_hidden = Parameter(uniform_init(rng, hidden, (hidden, 4 * hidden)))
        self.bias = Parameter(np.zeros(4 * hidden))
        self.in_dim = in_dim
        self.hidden = hidden

    def init_state(self, batch: int) -> tuple[Tensor, Tensor]:
        return Tensor(np.zeros((batch, self.hidden))), Tensor(np.zeros((batch, self.hidden)))

    def __call__(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        x, h, c = T._as_tensor(x), T._as_tensor(h), T._as_tensor(c)
        if x.shape[-1] != self.in_dim:
            raise DimensionError(
                f"lstm_cell expects input extent {self.in_dim}, got shape {x.shape}"
            )
        if h.shape[-1] != self.hidden or c.shape[-1] != self.hidden:
            raise DimensionError(
                f"lstm_cell hidden size {self.hidden} does not match state shapes "
                f"{h.shape} / {c.shape}"
            )
        z = T.add(T.add(T.matmul(x, self.w_input), T.matmul(h, self.w_hidden)), self.bias)
        n = self.hidden
        i = T.sigmoid(z[:, 0 * n : 1 * n])
        f = T.sigmoid(z[:, 1 * n : 2 * n])
        g = T.tanh(z[:, 2 * n : 3 * n])
        o = T.sigmoid(z[:, 3 * n : 4 * n])
        c_next = T.add(T.mul(f, c), T.mul(i, g))
        h_next = T.mul(o, T.tanh(c_next))
        return h_next, c_next

    def run_sequence(self, xs: Tensor) -> Tensor:
        """Apply the cell over (B, T, in_dim); returns (B, T, hidden)."""
        b, steps = xs.shape[0], xs.shape[1]
        h, c = self.init_state(b)
        outputs = []
        for t in range(steps):
            h, c = self(xs[:, t, :], h, c)
            outputs.append(h)
        return T.stack(outputs, axis=1)


class Conv2d(Module):
    """Same-size cross-correlation with zero padding (stride 1)."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        padding: int = 1,
    ):
        if kernel_size % 2 != 1:
            raise ArgumentError(f"kernel_size must be odd, got {kernel_size}")
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            uniform_init(rng, fan_in, (out_channels, in_channels, kernel_size, kernel_size))
        )
        self.bias = Parameter(np.zeros(out_channels))
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        x = T._as_tensor(x)
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(
                f"conv2d expects (B, {self.in_channels}, H, W), got shape {x.shape}"
            )
        b, _, h, w = x.shape
        k = self.kernel_size
        cols = T.im2col3x3(x, k, self.padding)  # (B, H, W, Cin*k*k)
        wmat = T.reshape(self.weight, (self.out_channels, self.in_channels * k * k))
        y = T.matmul(cols, T.swapaxes(wmat, 0, 1))  # (B, H, W, Cout)
        y = T.add(y, self.bias)
        return T.transpose(y, (0, 3, 1, 2))


def activate(x, kind: str, *, slope: float = 0.01, axis: int = -1) -> Tensor:
    """Dispatch by activation name; see the individual ops for semantics."""
    kind_l = kind.lower()
    if kind_l == "elu":
        return T.elu(x)
    if kind_l == "leakyrelu":
        return T.leaky_relu(x, slope)
    if kind_l == "relu":
        return T.relu(x)
    if kind_l == "glu":
        return T.glu(x, axis=axis)
    if kind_l == "softmax":
        return T.softmax(x, axis=axis)
    if kind_l == "sigmoid":
        return T.sigmoid(x)
    if kind_l == "tanh":
        return T.tanh(x)
    raise ArgumentError(f"unknown activation kind: {kind!r}")
