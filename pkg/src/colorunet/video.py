"""Frame-sequence colorization with causal temporal smoothing.

Each frame's probability volume is replaced by an exponentially decayed sum of
the current and up to ``window`` previous volumes::

    p_hat[t] = sum_{i=0}^{min(t, window)} p[t - i] * exp(-alpha * i)

renormalized per pixel, before annealed-mean decoding.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .decoder import DEFAULT_TEMPERATURE, annealed_mean
from .colorspace import merge_yuv, yuv_to_rgb
from .discretizer import ColorDiscretizer


@dataclass(frozen=True)
class SmoothingSpec:
    window: int = 20
    alpha: float = 0.2

    def __post_init__(self):
        if self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


class TemporalSmoother:
    """Streaming form of the kernel; keeps only the last ``window + 1`` volumes."""

    def __init__(self, spec: SmoothingSpec | None = None):
        self.spec = spec or SmoothingSpec()
        self._buf: deque[np.ndarray] = deque(maxlen=self.spec.window + 1)
        self._decay = np.exp(-self.spec.alpha * np.arange(self.spec.window + 1))

    def push(self, probs: np.ndarray) -> np.ndarray:
        probs = np.asarray(probs, dtype=np.float64)
        if self._buf and probs.shape != self._buf[-1].shape:
            raise ValueError(f"frame shape {probs.shape} differs from previous {self._buf[-1].shape}")
        self._buf.append(probs)
        acc = np.zeros_like(probs)
        # newest first: i = 0 is the current frame
        for i, p in enumerate(reversed(self._buf)):
            acc += self._decay[i] * p
        return acc / acc.sum(axis=-1, keepdims=True)


def smooth(prob_sequence: Iterable[np.ndarray], spec: SmoothingSpec | None = None) -> list[np.ndarray]:
    smoother = TemporalSmoother(spec)
    return [smoother.push(p) for p in prob_sequence]


@dataclass
class SequenceResult:
    frames: list[np.ndarray] = field(default_factory=list)  # RGB, smoothed
    uv: list[np.ndarray] = field(default_factory=list)  # smoothed chrominance
    raw_uv: list[np.ndarray] = field(default_factory=list)  # per-frame chrominance, no smoothing


def check_frames(frames: Sequence[np.ndarray], divisor: int = 8) -> None:
    if len(frames) == 0:
        raise ValueError("frame sequence is empty")
    shape = np.shape(frames[0])
    for i, f in enumerate(frames):
        if np.shape(f) != shape:
            raise ValueError(f"frame {i} has shape {np.shape(f)}, expected {shape}")
    if len(shape) != 2 or shape[0] % divisor or shape[1] % divisor:
        raise ValueError(f"frames must be 2-D with sides divisible by {divisor}, got {shape}")


def iter_colorize_sequence(
    frames: Iterable[np.ndarray],
    model,
    d: ColorDiscretizer,
    temperature: float = DEFAULT_TEMPERATURE,
    spec: SmoothingSpec | None = None,
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(rgb, smoothed_uv, raw_uv)`` per frame, in input order."""
    smoother = TemporalSmoother(spec)
    for y in frames:
        probs = model.predict_proba(np.asarray(y)[None])[0]
        raw_uv = annealed_mean(probs, temperature, d)
        smoothed = smoother.push(probs)
        uv = annealed_mean(smoothed, temperature, d)
        yield yuv_to_rgb(merge_yuv(y, uv)), uv, raw_uv


def colorize_sequence_detailed(frames, model, d, temperature=DEFAULT_TEMPERATURE, spec=None) -> SequenceResult:
    frames = list(frames)
    check_frames(frames, model.config.divisor)
    result = SequenceResult()
    for rgb, uv, raw in iter_colorize_sequence(frames, model, d, temperature, spec):
        result.frames.append(rgb)
        result.uv.append(uv)
        result.raw_uv.append(raw)
    return result


def colorize_sequence(frames, model, d, temperature=DEFAULT_TEMPERATURE, spec=None) -> list[np.ndarray]:
    """Colorize luminance frames with smoothing; returns RGB frames."""
    return colorize_sequence_detailed(frames, model, d, temperature, spec).frames


def frame_tv(uv_sequence: Sequence[np.ndarray]) -> np.ndarray:
    """Mean per-pixel UV distance between consecutive frames, per transition."""
    return np.array([
        float(np.mean(np.linalg.norm(b - a, axis=-1)))
        for a, b in zip(uv_sequence[:-1], uv_sequence[1:])
    ])


def stability_report(raw_uv: Sequence[np.ndarray], smoothed_uv: Sequence[np.ndarray]) -> list[dict]:
    """Rows ``{transition, raw_tv, smoothed_tv}``; transition t compares frames t and t+1."""
    if len(raw_uv) != len(smoothed_uv):
        raise ValueError(f"sequence lengths differ: {len(raw_uv)} vs {len(smoothed_uv)}")
    raw, sm = frame_tv(raw_uv), frame_tv(smoothed_uv)
    return [{"transition": t, "raw_tv": float(r), "smoothed_tv": float(s)} for t, (r, s) in enumerate(zip(raw, sm))]


__all__ = [
    "SequenceResult",
    "SmoothingSpec",
    "TemporalSmoother",
    "colorize_sequence",
    "colorize_sequence_detailed",
    "frame_tv",
    "smooth",
    "stability_report",
]
