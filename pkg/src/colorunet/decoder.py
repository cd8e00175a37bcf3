"""From per-pixel bin probabilities to colors and diagnostics.

Probability volumes are float arrays with the bin axis last, ``(..., n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorspace import merge_yuv, yuv_to_rgb
from .discretizer import ColorDiscretizer

PROB_FLOOR = 1e-10
RATIO_CAP = 1e10
DEFAULT_TEMPERATURE = 0.4


def anneal(probs: np.ndarray, temperature: float) -> np.ndarray:
    """Temperature-sharpened distribution ``softmax(log(z) / T)`` over the last axis.

    Probabilities are floored at 1e-10 before the log. T = 1 returns the
    (renormalized) input; T -> 0 approaches the one-hot argmax.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = np.log(np.maximum(np.asarray(probs, dtype=np.float64), PROB_FLOOR)) / temperature
    z -= z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def annealed_mean(probs: np.ndarray, temperature: float, d: ColorDiscretizer) -> np.ndarray:
    """Per-pixel (u, v) as the annealed expectation of bin means; shape (..., 2)."""
    probs = np.asarray(probs)
    if probs.shape[-1] != d.n:
        raise ValueError(f"probability volume has {probs.shape[-1]} bins, discretizer has {d.n}")
    return anneal(probs, temperature) @ d.bin_mean


def colorize(y: np.ndarray, probs: np.ndarray, temperature: float, d: ColorDiscretizer) -> np.ndarray:
    """RGB image (H, W, 3) from luminance (H, W) and probabilities (H, W, n)."""
    y = np.asarray(y, dtype=np.float64)
    if probs.shape[:-1] != y.shape:
        raise ValueError(f"luminance {y.shape} and probabilities {probs.shape[:-1]} differ in size")
    return yuv_to_rgb(merge_yuv(y, annealed_mean(probs, temperature, d)))


@dataclass
class ConfidenceMaps:
    top1: np.ndarray  # highest class probability per pixel
    ratio: np.ndarray  # top1 / top2, capped at RATIO_CAP


def confidence(probs: np.ndarray) -> ConfidenceMaps:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape[-1] < 2:
        top1 = probs[..., 0]
        return ConfidenceMaps(top1, np.full_like(top1, RATIO_CAP))
    top2 = np.partition(probs, -2, axis=-1)[..., -2:]
    first, second = top2[..., 1], top2[..., 0]
    ratio = np.minimum(first / np.maximum(second, PROB_FLOOR), RATIO_CAP)
    return ConfidenceMaps(first, ratio)


def color_histogram(data: np.ndarray, n: int, mask: np.ndarray | None = None) -> np.ndarray:
    """Bin frequency vector summing to 1.

    Integer input is treated as a label map (normalized counts); floating
    input as a probability volume (..., n) (mean probability vector).
    """
    data = np.asarray(data)
    if np.issubdtype(data.dtype, np.integer):
        labels = data.ravel()
        w = None if mask is None else (np.asarray(mask).ravel() > 0).astype(np.float64)
        counts = np.bincount(labels, weights=w, minlength=n).astype(np.float64)
        if counts.size > n:
            raise ValueError(f"labels exceed the {n} bins")
    else:
        if data.shape[-1] != n:
            raise ValueError(f"probability volume has {data.shape[-1]} bins, expected {n}")
        flat = data.reshape(-1, n).astype(np.float64)
        if mask is not None:
            flat = flat[np.asarray(mask).ravel() > 0]
        counts = flat.sum(axis=0)
    total = counts.sum()
    if total <= 0:
        raise ValueError("histogram of an empty selection")
    return counts / total


def colormap(values: np.ndarray, lo: float, hi: float, cmap: str = "inferno") -> np.ndarray:
    """Render a scalar map as uint8 RGB; dark = low, light yellow = high."""
    from matplotlib import colormaps

    t = np.clip((np.asarray(values, dtype=np.float64) - lo) / max(hi - lo, 1e-12), 0.0, 1.0)
    rgba = colormaps[cmap](t)
    return np.clip(np.rint(rgba[..., :3] * 255), 0, 255).astype(np.uint8)


def render_confidence(maps: ConfidenceMaps, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Images for the two maps. top1 is scaled over [1/n, 1], the ratio
    logarithmically over [1, 100] (saturating above)."""
    top1 = colormap(maps.top1, 1.0 / n, 1.0)
    ratio = colormap(np.log10(maps.ratio), 0.0, 2.0)
    return top1, ratio
