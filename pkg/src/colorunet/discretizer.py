"""Discrete chrominance codebook.

The UV plane is cut into square cells of side ``grid_step`` covering the full
YUV gamut. Fitting counts pixels per cell over a corpus, keeps the ``n`` most
populated cells (ties go to the lower cell id) and records each kept cell's
mean chrominance, its renormalized frequency and a rebalancing weight.

Bins are indexed 0..n-1 in order of decreasing frequency.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels
from .colorspace import U_MAX, V_MAX
from .errors import FittingError, FormatError, DataError

MAGIC = b"CDSC"
VERSION = 1

DEFAULT_GRID_STEP = 0.1
DEFAULT_LAMBDA = 0.5

# magic, version, n, lambda, grid_step, u_min, u_max, v_min, v_max
_HEADER = struct.Struct("<4sII6d")
# cell id, mean u, mean v, freq, weight
_RECORD = struct.Struct("<I4d")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class BinGrid:
    step: float = DEFAULT_GRID_STEP
    u_min: float = -U_MAX
    u_max: float = U_MAX
    v_min: float = -V_MAX
    v_max: float = V_MAX

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid_step must be positive, got {self.step}")
        if not (self.u_max > self.u_min and self.v_max > self.v_min):
            raise ValueError("empty UV range")

    @property
    def nu(self) -> int:
        return max(1, math.ceil((self.u_max - self.u_min) / self.step - 1e-9))

    @property
    def nv(self) -> int:
        return max(1, math.ceil((self.v_max - self.v_min) / self.step - 1e-9))

    @property
    def num_cells(self) -> int:
        return self.nu * self.nv

    def cell_of(self, u, v) -> np.ndarray:
        iu = np.clip(np.floor((np.asarray(u) - self.u_min) / self.step), 0, self.nu - 1).astype(np.int64)
        iv = np.clip(np.floor((np.asarray(v) - self.v_min) / self.step), 0, self.nv - 1).astype(np.int64)
        return iu * self.nv + iv

    def cell_bounds(self, cell_id: int) -> tuple[float, float, float, float]:
        """(u_lo, u_hi, v_lo, v_hi) of a cell."""
        iu, iv = divmod(int(cell_id), self.nv)
        u_lo = self.u_min + iu * self.step
        v_lo = self.v_min + iv * self.step
        return u_lo, u_lo + self.step, v_lo, v_lo + self.step


def compute_weights(freq, lam: float, n: int | None = None) -> np.ndarray:
    """Rebalancing weights ``1 / ((1 - lam) * freq + lam / n)`` rescaled so
    that ``sum(freq * w) == 1``."""
    freq = np.asarray(freq, dtype=np.float64)
    if n is None:
        n = freq.size
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if freq.ndim != 1 or freq.size != n:
        raise ValueError(f"expected {n} frequencies, got shape {freq.shape}")
    if np.any(freq < 0) or abs(freq.sum() - 1.0) > 1e-9:
        raise ValueError("frequencies must be nonnegative and sum to 1")
    raw = 1.0 / ((1.0 - lam) * freq + lam / n)
    return raw / np.dot(freq, raw)


@dataclass(frozen=True, eq=False)
class ColorDiscretizer:
    grid: BinGrid
    lam: float
    cell_ids: np.ndarray  # (n,) int64
    bin_mean: np.ndarray  # (n, 2) float64, (u, v)
    freq: np.ndarray  # (n,)
    weight: np.ndarray  # (n,)

    @property
    def n(self) -> int:
        return int(self.cell_ids.size)

    def __eq__(self, other):
        if not isinstance(other, ColorDiscretizer):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.lam == other.lam
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("cell_ids", "bin_mean", "freq", "weight")
            )
        )

    def encode(self, yuv: np.ndarray) -> np.ndarray:
        return encode(yuv, self)

    def decode_labels(self, labels: np.ndarray, y: np.ndarray) -> np.ndarray:
        return decode_labels(labels, self, y)


class DiscretizerFitter:
    """Streaming pixel counter over a UV grid.

    Call :meth:`update` once per image (with an optional validity mask), then
    :meth:`finalize`.
    """

    def __init__(self, grid: BinGrid | None = None):
        self.grid = grid or BinGrid()
        self.counts = np.zeros(self.grid.num_cells, dtype=np.int64)
        self.sum_u = np.zeros(self.grid.num_cells)
        self.sum_v = np.zeros(self.grid.num_cells)
        self.images = 0

    def update(self, yuv: np.ndarray, mask: np.ndarray | None = None) -> None:
        yuv = np.asarray(yuv, dtype=np.float64)
        u = yuv[..., 1].ravel()
        v = yuv[..., 2].ravel()
        if mask is not None:
            keep = np.asarray(mask).ravel() > 0
            u, v = u[keep], v[keep]
        cells = self.grid.cell_of(u, v)
        m = self.grid.num_cells
        self.counts += np.bincount(cells, minlength=m)
        self.sum_u += np.bincount(cells, weights=u, minlength=m)
        self.sum_v += np.bincount(cells, weights=v, minlength=m)
        self.images += 1

    def finalize(self, n: int, lam: float = DEFAULT_LAMBDA) -> ColorDiscretizer:
        if self.images == 0:
            raise FittingError("no images were supplied")
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n}")
        occupied = int(np.count_nonzero(self.counts))
        if occupied < n:
            raise FittingError(
                f"requested n={n} bins but only {occupied} grid cells are occupied "
                f"(deficit {n - occupied}); lower n or reduce grid_step"
            )
        ids = np.arange(self.grid.num_cells)
        order = np.lexsort((ids, -self.counts))[:n]
        counts = self.counts[order].astype(np.float64)
        means = np.stack([self.sum_u[order] / counts, self.sum_v[order] / counts], axis=1)
        freq = counts / counts.sum()
        return ColorDiscretizer(
            grid=self.grid,
            lam=float(lam),
            cell_ids=order.astype(np.int64),
            bin_mean=means,
            freq=freq,
            weight=compute_weights(freq, lam, n),
        )


def fit(
    images: Iterable,
    grid_step: float = DEFAULT_GRID_STEP,
    n: int = 32,
    lam: float = DEFAULT_LAMBDA,
) -> ColorDiscretizer:
    """Fit a codebook on a stream of YUV images.

    Items may be bare ``(H, W, 3)`` YUV arrays or ``(yuv, mask)`` pairs, in
    which case only pixels with a nonzero mask are counted.
    """
    fitter = DiscretizerFitter(BinGrid(step=grid_step))
    for item in images:
        if isinstance(item, tuple):
            fitter.update(*item)
        else:
            fitter.update(item)
    return fitter.finalize(n, lam)


def encode(yuv: np.ndarray, d: ColorDiscretizer) -> np.ndarray:
    """Per-pixel index of the nearest bin mean (Euclidean in UV)."""
    yuv = np.asarray(yuv)
    labels = _kernels.nearest_bin(yuv[..., 1], yuv[..., 2], d.bin_mean)
    return labels.reshape(yuv.shape[:-1])


def decode_labels(labels: np.ndarray, d: ColorDiscretizer, y: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= d.n):
        raise ValueError(f"labels must lie in [0, {d.n}), got range [{labels.min()}, {labels.max()}]")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != labels.shape:
        raise ValueError(f"luminance shape {y.shape} does not match labels {labels.shape}")
    uv = d.bin_mean[labels]
    return np.concatenate([y[..., None], uv], axis=-1)


def to_bytes(d: ColorDiscretizer) -> bytes:
    g = d.grid
    parts = [_HEADER.pack(MAGIC, VERSION, d.n, d.lam, g.step, g.u_min, g.u_max, g.v_min, g.v_max)]
    for i in range(d.n):
        parts.append(
            _RECORD.pack(int(d.cell_ids[i]), d.bin_mean[i, 0], d.bin_mean[i, 1], d.freq[i], d.weight[i])
        )
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def from_bytes(buf: bytes) -> ColorDiscretizer:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise FormatError("not a discretizer file (bad magic)")
    if len(buf) < _HEADER.size + _CRC.size:
        raise FormatError("truncated discretizer file")
    _, version, n, lam, step, u_min, u_max, v_min, v_max = _HEADER.unpack_from(buf, 0)
    if version != VERSION:
        raise FormatError(f"unsupported discretizer version {version} (expected {VERSION})")
    expected = _HEADER.size + n * _RECORD.size + _CRC.size
    if len(buf) != expected:
        raise FormatError(f"discretizer file has {len(buf)} bytes, header implies {expected}")
    (crc,) = _CRC.unpack_from(buf, len(buf) - _CRC.size)
    if zlib.crc32(buf[: -_CRC.size]) != crc:
        raise FormatError("discretizer checksum mismatch")
    if n < 1:
        raise DataError(f"discretizer declares n={n}; at least one bin is required")
    if not 0.0 <= lam <= 1.0:
        raise DataError(f"discretizer lambda {lam} outside [0, 1]")
    grid = BinGrid(step, u_min, u_max, v_min, v_max)
    recs = [_RECORD.unpack_from(buf, _HEADER.size + i * _RECORD.size) for i in range(n)]
    arr = np.array([r[1:] for r in recs], dtype=np.float64)
    cell_ids = np.array([r[0] for r in recs], dtype=np.int64)
    if np.any(cell_ids >= grid.num_cells):
        raise DataError("discretizer cell id outside its grid")
    freq, weight = arr[:, 2].copy(), arr[:, 3].copy()
    if np.any(freq <= 0) or np.any(~np.isfinite(weight)) or np.any(weight <= 0):
        raise DataError("discretizer frequencies and weights must be positive and finite")
    return ColorDiscretizer(
        grid=grid, lam=lam, cell_ids=cell_ids, bin_mean=arr[:, :2].copy(), freq=freq, weight=weight
    )


def save(d: ColorDiscretizer, path) -> None:
    Path(path).write_bytes(to_bytes(d))


def load(path) -> ColorDiscretizer:
    return from_bytes(Path(path).read_bytes())
