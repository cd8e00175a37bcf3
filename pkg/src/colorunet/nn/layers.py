"""Parameter-holding layers.

Conv and transpose-conv weights are drawn from ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``
with ``fan_in = in_ch * 9``; biases start at zero, batchnorm scale at one and
shift at zero.
"""

from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Tensor


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv3x3:
    def __init__(self, in_ch: int, out_ch: int, rng: np.random.Generator, dtype=np.float32):
        self.in_ch, self.out_ch = in_ch, out_ch
        self.weight = Tensor(_uniform(rng, (out_ch, in_ch, 3, 3), in_ch * 9, dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias)

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}


class ConvTranspose3x3:
    """Doubles spatial size (stride 2, padding 1, output padding 1)."""

    def __init__(self, in_ch: int, out_ch: int, rng: np.random.Generator, dtype=np.float32):
        self.in_ch, self.out_ch = in_ch, out_ch
        self.weight = Tensor(_uniform(rng, (in_ch, out_ch, 3, 3), in_ch * 9, dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv_transpose2d(x, self.weight, self.bias)

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}


class BatchNorm2d:
    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5, dtype=np.float32):
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.tracked = 0

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        if not training and self.tracked == 0:
            raise RuntimeError(
                "batchnorm running statistics are uninitialized; run a training step before eval mode"
            )
        out = F.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training, self.momentum, self.eps,
        )
        if training:
            self.tracked += 1
        return out

    def parameters(self) -> dict[str, Tensor]:
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self) -> dict[str, np.ndarray]:
        return {
            "running_mean": self.running_mean,
            "running_var": self.running_var,
            "tracked": np.array([self.tracked], dtype=np.float64),
        }

    def load_buffers(self, buffers: dict[str, np.ndarray]) -> None:
        self.running_mean[...] = buffers["running_mean"]
        self.running_var[...] = buffers["running_var"]
        self.tracked = int(buffers["tracked"][0])
