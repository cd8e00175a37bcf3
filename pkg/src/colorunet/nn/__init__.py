from .functional import (
    batch_norm,
    concat,
    conv2d,
    conv_transpose2d,
    log_softmax,
    max_pool2x2,
    relu,
    softmax,
    weighted_masked_cross_entropy,
)
from .layers import BatchNorm2d, Conv3x3, ConvTranspose3x3
from .optim import Adam, AdamState
from .tensor import Tensor

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm2d",
    "Conv3x3",
    "ConvTranspose3x3",
    "Tensor",
    "batch_norm",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "log_softmax",
    "max_pool2x2",
    "relu",
    "softmax",
    "weighted_masked_cross_entropy",
]
