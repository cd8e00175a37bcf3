"""The ColorUNet: a small U-Net mapping luminance to per-pixel bin logits.

Layout for ``num_down_groups = G`` with channel widths ``c[g] = base_filters * multiplier[g]``::

    DownConv g (g = 0..G-1):  [conv3x3 -> BN -> ReLU] x 2 -> (keep as skip g) -> maxpool
    UpConv k   (k = 0..G-2):  tconv(stride 2) -> ReLU -> concat(skip j) -> [conv3x3 -> BN -> ReLU] x 2
                              with j = G-1-k; output width c[j-1]
    Output:                   tconv(stride 2) -> ReLU -> conv3x3 to num_classes logits

Skips come from groups 1..G-1; the full-resolution group 0 and the bottleneck
carry none. With the defaults (base 32, multipliers 1/2/4) the encoder runs
32 -> 64 -> 128 channels and the decoder 64 -> 32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError
from .nn import functional as F
from .nn import serialize
from .nn.layers import BatchNorm2d, Conv3x3, ConvTranspose3x3
from .nn.tensor import Tensor, no_grad


@dataclass(frozen=True)
class ColorUNetConfig:
    base_filters: int = 32
    num_down_groups: int = 3
    num_classes: int = 32
    input_channels: int = 1
    channel_multipliers: tuple[int, ...] = (1, 2, 4)
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5

    def __post_init__(self):
        if self.num_down_groups < 1:
            raise ConfigError("num_down_groups must be at least 1")
        if len(self.channel_multipliers) != self.num_down_groups:
            raise ConfigError(
                f"need {self.num_down_groups} channel multipliers, got {len(self.channel_multipliers)}"
            )
        if min(self.base_filters, self.num_classes, self.input_channels, *self.channel_multipliers) < 1:
            raise ConfigError("channel counts must be positive")

    @property
    def widths(self) -> list[int]:
        return [self.base_filters * m for m in self.channel_multipliers]

    @property
    def divisor(self) -> int:
        return 2 ** self.num_down_groups

    def echo(self) -> tuple[int, ...]:
        return (self.input_channels, self.num_classes, self.base_filters, self.num_down_groups,
                *self.channel_multipliers)

    @classmethod
    def from_echo(cls, echo) -> ColorUNetConfig:
        if len(echo) < 4 or len(echo) != 4 + echo[3]:
            raise FormatError(f"malformed checkpoint config echo {echo}")
        return cls(input_channels=echo[0], num_classes=echo[1], base_filters=echo[2],
                   num_down_groups=echo[3], channel_multipliers=tuple(echo[4:]))


class _ConvBlock:
    """conv3x3 -> BN -> ReLU, twice."""

    def __init__(self, in_ch, out_ch, rng, cfg, dtype):
        self.conv1 = Conv3x3(in_ch, out_ch, rng, dtype)
        self.bn1 = BatchNorm2d(out_ch, cfg.bn_momentum, cfg.bn_eps, dtype)
        self.conv2 = Conv3x3(out_ch, out_ch, rng, dtype)
        self.bn2 = BatchNorm2d(out_ch, cfg.bn_momentum, cfg.bn_eps, dtype)

    def __call__(self, x, training):
        x = F.relu(self.bn1(self.conv1(x), training))
        return F.relu(self.bn2(self.conv2(x), training))


class ColorUNet:
    def __init__(self, config: ColorUNetConfig | None = None, seed: int = 0, dtype=np.float32):
        self.config = cfg = config or ColorUNetConfig()
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        c = cfg.widths
        g_count = cfg.num_down_groups

        self.down = []
        in_ch = cfg.input_channels
        for g in range(g_count):
            self.down.append(_ConvBlock(in_ch, c[g], rng, cfg, dtype))
            in_ch = c[g]

        self.up = []
        for k in range(g_count - 1):
            j = g_count - 1 - k
            tconv = ConvTranspose3x3(in_ch, c[j], rng, dtype)
            block = _ConvBlock(2 * c[j], c[j - 1], rng, cfg, dtype)
            self.up.append((tconv, block))
            in_ch = c[j - 1]

        self.out_tconv = ConvTranspose3x3(in_ch, c[0], rng, dtype)
        self.out_conv = Conv3x3(c[0], cfg.num_classes, rng, dtype)
        self.skip_shapes: list[tuple[tuple[int, ...], tuple[int, ...]]] = []

    # -- parameter bookkeeping -------------------------------------------------

    def _modules(self):
        for g, block in enumerate(self.down):
            yield f"down{g}", block
        for k, (tconv, block) in enumerate(self.up):
            yield f"up{k}.tconv", tconv
            yield f"up{k}", block
        yield "out.tconv", self.out_tconv
        yield "out.conv", self.out_conv

    def _layers(self):
        for prefix, mod in self._modules():
            if isinstance(mod, _ConvBlock):
                for name in ("conv1", "bn1", "conv2", "bn2"):
                    yield f"{prefix}.{name}", getattr(mod, name)
            else:
                yield prefix, mod

    def parameters(self) -> dict[str, Tensor]:
        return {
            f"{prefix}.{pname}": t
            for prefix, layer in self._layers()
            for pname, t in layer.parameters().items()
        }

    def batchnorms(self) -> dict[str, BatchNorm2d]:
        return {prefix: layer for prefix, layer in self._layers() if isinstance(layer, BatchNorm2d)}

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self.parameters().values())

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: t.data for name, t in self.parameters().items()}
        for prefix, bn in self.batchnorms().items():
            for bname, arr in bn.buffers().items():
                state[f"{prefix}.{bname}"] = arr
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        expected = self.state_dict()
        missing = sorted(set(expected) - set(state))
        extra = sorted(set(state) - set(expected))
        if missing or extra:
            raise FormatError(f"checkpoint tensors do not match model (missing {missing[:3]}, extra {extra[:3]})")
        for name, t in self.parameters().items():
            if state[name].shape != t.shape:
                raise FormatError(f"shape mismatch for {name}: {state[name].shape} vs {t.shape}")
            t.data[...] = state[name]
        for prefix, bn in self.batchnorms().items():
            bn.load_buffers({b: state[f"{prefix}.{b}"] for b in ("running_mean", "running_var", "tracked")})

    def save(self, path) -> None:
        serialize.save(path, self.state_dict(), self.config.echo())

    @classmethod
    def load(cls, path, dtype=np.float32) -> ColorUNet:
        tensors, echo = serialize.load(path)
        model = cls(ColorUNetConfig.from_echo(echo), seed=0, dtype=dtype)
        model.load_state_dict(tensors)
        return model

    # -- computation -----------------------------------------------------------

    def check_input(self, shape) -> None:
        if len(shape) != 4 or shape[1] != self.config.input_channels:
            raise ValueError(
                f"expected input (N, {self.config.input_channels}, H, W), got {tuple(shape)}"
            )
        d = self.config.divisor
        if shape[2] % d or shape[3] % d:
            raise ValueError(f"spatial dims {shape[2]}x{shape[3]} must be divisible by {d}")

    def forward(self, x, training: bool = True) -> Tensor:
        """Logits (N, num_classes, H, W) for a luminance batch (N, 1, H, W)."""
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.dtype))
        self.check_input(x.shape)
        skips = []
        for block in self.down:
            x = block(x, training)
            skips.append(x)
            x = F.max_pool2x2(x)
        self.skip_shapes = []
        for k, (tconv, block) in enumerate(self.up):
            x = F.relu(tconv(x))
            skip = skips[len(self.down) - 1 - k]
            self.skip_shapes.append((x.shape, skip.shape))
            x = block(F.concat([x, skip], axis=1), training)
        x = F.relu(self.out_tconv(x))
        return self.out_conv(x)

    __call__ = forward

    def predict_proba(self, y: np.ndarray, batch_size: int = 8) -> np.ndarray:
        """Eval-mode class probabilities (N, H, W, n) for luminance (N, H, W)."""
        y = np.asarray(y, dtype=self.dtype)
        if y.ndim == 2:
            y = y[None]
        out = []
        for start in range(0, len(y), batch_size):
            with no_grad():
                logits = self.forward(y[start:start + batch_size, None], training=False)
            out.append(F.softmax(logits.data, axis=1).transpose(0, 2, 3, 1))
        return np.concatenate(out, axis=0)


def build(config: ColorUNetConfig | None = None, seed: int = 0, dtype=np.float32) -> ColorUNet:
    return ColorUNet(config, seed, dtype)
