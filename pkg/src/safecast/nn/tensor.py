"""Dense float64 arrays with reverse-mode differentiation.

The engine is a Wengert list: while a :class:`Tape` is active, every
primitive appends the backward closure for its output in execution order.
``Tape.backward`` replays the list in reverse, which visits each recorded
node exactly once in reverse topological order. When no tape is active the
primitives compute plain forward values with no bookkeeping, which is the
inference path.

All data is 64-bit; gradient checks against central finite differences are
the correctness backbone and would be drowned by float32 noise.

Gradient arrays are never mutated in place: accumulation is always
``t.grad = t.grad + g``. Backward closures may therefore hand the same
array object to several consumers (identity pass-through in ``add``).
"""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError, DimensionError

_TAPES: list["Tape"] = []


class Tensor:
    """A dense float64 array, optionally tracked on the active tape."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; implementations below
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __getitem__(self, idx):
        return take(self, idx)


class Parameter(Tensor):
    """A named, trainable tensor whose gradient persists across backward calls.

    The gradient starts as zeros, accumulates during backward passes, and is
    reset to zeros by :meth:`reset_grad`.
    """

    __slots__ = ("name", "trainable")

    def __init__(self, data, name: str = "", trainable: bool = True):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.trainable = trainable
        self.grad = np.zeros_like(self.data)

    def reset_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


class Tape:
    """Execution-ordered record of primitive ops for one backward replay.

    Use as a context manager around the forward pass, then call
    :meth:`backward` on a scalar output. A tape is single-use: backward
    clears the record.
    """

    def __init__(self):
        self._nodes: list[tuple[Tensor, object]] = []

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        popped = _TAPES.pop()
        assert popped is self, "tape stack corrupted"
        return False

    def __len__(self) -> int:
        return len(self._nodes)

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise DimensionError(
                f"backward requires a scalar loss, got shape {loss.shape}"
            )
        loss.grad = np.ones_like(loss.data)
        for out, backward_fn in reversed(self._nodes):
            if out.grad is None:
                continue
            backward_fn(out.grad)
        self._nodes.clear()


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracking(*tensors: Tensor) -> bool:
    return bool(_TAPES) and any(t.requires_grad for t in tensors)


def _record(out: Tensor, backward_fn) -> Tensor:
    out.requires_grad = True
    _TAPES[-1]._nodes.append((out, backward_fn))
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the shape of its source operand."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------- arithmetic


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data)
    if not _tracking(a, b):
        return out

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _record(out, backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data - b.data)
    if not _tracking(a, b):
        return out

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _record(out, backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data)
    if not _tracking(a, b):
        return out
    ad, bd = a.data, b.data

    def backward(g):
        _accum(a, _unbroadcast(g * bd, ad.shape))
        _accum(b, _unbroadcast(g * ad, bd.shape))

    return _record(out, backward)


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data / b.data)
    if not _tracking(a, b):
        return out
    ad, bd = a.data, b.data

    def backward(g):
        _accum(a, _unbroadcast(g / bd, ad.shape))
        _accum(b, _unbroadcast(-g * ad / (bd * bd), bd.shape))

    return _record(out, backward)


def neg(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(-a.data)
    if not _tracking(a):
        return out

    def backward(g):
        _accum(a, -g)

    return _record(out, backward)


def power(a, p: float) -> Tensor:
    a = _as_tensor(a)
    p = float(p)
    out = Tensor(a.data**p)
    if not _tracking(a):
        return out
    ad = a.data

    def backward(g):
        _accum(a, g * p * ad ** (p - 1.0))

    return _record(out, backward)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul requires ndim >= 2 operands, got {a.shape} @ {b.shape}"
        )
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)
    if not _tracking(a, b):
        return out
    ad, bd = a.data, b.data

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape))

    return _record(out, backward)


# ------------------------------------------------------------- elementwise


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.exp(a.data))
    if not _tracking(a):
        return out
    od = out.data

    def backward(g):
        _accum(a, g * od)

    return _record(out, backward)


def log(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.log(a.data))
    if not _tracking(a):
        return out
    ad = a.data

    def backward(g):
        _accum(a, g / ad)

    return _record(out, backward)


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.sqrt(a.data))
    if not _tracking(a):
        return out
    od = out.data

    def backward(g):
        _accum(a, g / (2.0 * od))

    return _record(out, backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.tanh(a.data))
    if not _tracking(a):
        return out
    od = out.data

    def backward(g):
        _accum(a, g * (1.0 - od * od))

    return _record(out, backward)


def _sigmoid_data(d: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(d))
    return np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(_sigmoid_data(a.data))
    if not _tracking(a):
        return out
    od = out.data

    def backward(g):
        _accum(a, g * od * (1.0 - od))

    return _record(out, backward)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0))
    if not _tracking(a):
        return out
    mask = a.data > 0

    def backward(g):
        _accum(a, g * mask)

    return _record(out, backward)


def leaky_relu(a, slope: float = 0.01) -> Tensor:
    a = _as_tensor(a)
    factor = np.where(a.data > 0, 1.0, slope)
    out = Tensor(a.data * factor)
    if not _tracking(a):
        return out

    def backward(g):
        _accum(a, g * factor)

    return _record(out, backward)


def elu(a, alpha: float = 1.0) -> Tensor:
    a = _as_tensor(a)
    ad = a.data
    neg_part = alpha * np.expm1(np.minimum(ad, 0.0))
    out = Tensor(np.where(ad > 0, ad, neg_part))
    if not _tracking(a):
        return out

    def backward(g):
        _accum(a, g * np.where(ad > 0, 1.0, neg_part + alpha))

    return _record(out, backward)


def softplus(a) -> Tensor:
    a = _as_tensor(a)
    ad = a.data
    out = Tensor(np.maximum(ad, 0.0) + np.log1p(np.exp(-np.abs(ad))))
    if not _tracking(a):
        return out
    sig = _sigmoid_data(ad)

    def backward(g):
        _accum(a, g * sig)

    return _record(out, backward)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values; gradient passes through strictly inside the interval."""
    a = _as_tensor(a)
    out = Tensor(np.clip(a.data, lo, hi))
    if not _tracking(a):
        return out
    mask = (a.data > lo) & (a.data < hi)

    def backward(g):
        _accum(a, g * mask)

    return _record(out, backward)


def maximum_scalar(a, floor: float) -> Tensor:
    """max(a, floor) elementwise; subgradient 1 where a > floor."""
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, floor))
    if not _tracking(a):
        return out
    mask = a.data > floor

    def backward(g):
        _accum(a, g * mask)

    return _record(out, backward)


# -------------------------------------------------------------- reductions


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))
    if not _tracking(a):
        return out
    shape = a.data.shape

    def backward(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(gg, shape))

    return _record(out, backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    if not _tracking(a):
        return out
    shape = a.data.shape
    count = a.data.size / out.data.size

    def backward(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(gg, shape) / count)

    return _record(out, backward)


def cumsum(a, axis: int) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.cumsum(a.data, axis=axis))
    if not _tracking(a):
        return out

    def backward(g):
        flipped = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
        _accum(a, flipped)

    return _record(out, backward)


# ------------------------------------------------------------ shape/index


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.reshape(shape))
    if not _tracking(a):
        return out
    orig = a.data.shape

    def backward(g):
        _accum(a, g.reshape(orig))

    return _record(out, backward)


def swapaxes(a, ax1: int, ax2: int) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.swapaxes(a.data, ax1, ax2))
    if not _tracking(a):
        return out

    def backward(g):
        _accum(a, np.swapaxes(g, ax1, ax2))

    return _record(out, backward)


def transpose(a, axes) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.transpose(a.data, axes))
    if not _tracking(a):
        return out
    inv = np.argsort(axes)

    def backward(g):
        _accum(a, np.transpose(g, inv))

    return _record(out, backward)


def take(a, idx) -> Tensor:
    """Basic/advanced indexing; backward scatter-adds into the source."""
    a = _as_tensor(a)
    out = Tensor(a.data[idx])
    if not _tracking(a):
        return out
    shape = a.data.shape

    def backward(g):
        full = np.zeros(shape)
        np.add.at(full, idx, g)
        _accum(a, full)

    return _record(out, backward)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    if not _tracking(*tensors):
        return out
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, stop)
            _accum(t, g[tuple(sl)])

    return _record(out, backward)


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = Tensor(np.stack([t.data for t in tensors], axis=axis))
    if not _tracking(*tensors):
        return out

    def backward(g):
        for i, t in enumerate(tensors):
            _accum(t, np.take(g, i, axis=axis))

    return _record(out, backward)


def im2col3x3(a, kernel: int, padding: int) -> Tensor:
    """Unfold (B,C,H,W) into (B,H',W',C*k*k) patches with zero padding."""
    a = _as_tensor(a)
    if a.ndim != 4:
        raise DimensionError(f"im2col expects a 4-d input, got shape {a.shape}")
    b, c, h, w = a.shape
    k, p = kernel, padding
    padded = np.pad(a.data, ((0, 0), (0, 0), (p, p), (p, p)))
    h2 = h + 2 * p - k + 1
    w2 = w + 2 * p - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(2, 3))
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b, h2, w2, c * k * k).copy()
    out = Tensor(cols)
    if not _tracking(a):
        return out

    def backward(g):
        gg = g.reshape(b, h2, w2, c, k, k)
        gpad = np.zeros_like(padded)
        for dy in range(k):
            for dx in range(k):
                gpad[:, :, dy : dy + h2, dx : dx + w2] += gg[:, :, :, :, dy, dx].transpose(
                    0, 3, 1, 2
                )
        _accum(a, gpad[:, :, p : p + h, p : p + w])

    return _record(out, backward)


# -------------------------------------------------------------- composites


def softmax(a, axis: int = -1) -> Tensor:
    """Shift-stabilized softmax; rows sum to 1 along ``axis``."""
    a = _as_tensor(a)
    if not (-a.ndim <= axis < a.ndim):
        raise DimensionError(f"softmax axis {axis} invalid for shape {a.shape}")
    shift = np.max(a.data, axis=axis, keepdims=True)
    z = exp(sub(a, shift))
    return div(z, sum_(z, axis=axis, keepdims=True))


def dropout(a, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: scale survivors by 1/(1-rate); identity in eval."""
    if not 0.0 <= rate < 1.0:
        raise ArgumentError(f"dropout rate must be in [0, 1), got {rate}")
    a = _as_tensor(a)
    if not training or rate == 0.0:
        return a
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, keep)


def glu(a, axis: int = -1) -> Tensor:
    """Gated linear unit: split in half along ``axis``, a * sigmoid(b)."""
    a = _as_tensor(a)
    extent = a.shape[axis]
    if extent % 2 != 0:
        raise DimensionError(f"glu needs an even extent on axis {axis}, got {extent}")
    half = extent // 2
    sl_a = [slice(None)] * a.ndim
    sl_b = [slice(None)] * a.ndim
    sl_a[axis] = slice(0, half)
    sl_b[axis] = slice(half, extent)
    return mul(take(a, tuple(sl_a)), sigmoid(take(a, tuple(sl_b))))
