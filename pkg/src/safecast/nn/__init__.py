from .tensor import (
    Parameter,
    Tape,
    Tensor,
    add,
    clip,
    concat,
    cumsum,
    div,
    dropout,
    elu,
    exp,
    glu,
    im2col3x3,
    leaky_relu,
    log,
    matmul,
    maximum_scalar,
    mean,
    mul,
    neg,
    power,
    relu,
    reshape,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    stack,
    sub,
    sum_,
    swapaxes,
    take,
    tanh,
    transpose,
)
from .layers import (
    BatchNorm,
    Conv2d,
    LayerNorm,
    Linear,
    LSTMCell,
    Module,
    activate,
    uniform_init,
)
from .optim import Adam, cosine_warm_restarts
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Adam",
    "BatchNorm",
    "Conv2d",
    "LayerNorm",
    "Linear",
    "LSTMCell",
    "Module",
    "Parameter",
    "Tape",
    "Tensor",
    "activate",
    "add",
    "clip",
    "concat",
    "cosine_warm_restarts",
    "cumsum",
    "div",
    "dropout",
    "elu",
    "exp",
    "glu",
    "im2col3x3",
    "leaky_relu",
    "load_checkpoint",
    "log",
    "matmul",
    "maximum_scalar",
    "mean",
    "mul",
    "neg",
    "power",
    "relu",
    "reshape",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "softplus",
    "sqrt",
    "stack",
    "sub",
    "sum_",
    "swapaxes",
    "take",
    "tanh",
    "transpose",
    "uniform_init",
]
