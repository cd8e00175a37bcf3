"""Hot inner loops, each with a numba and a pure-numpy implementation.

The backend is chosen once at import from the ``COLORUNET_BACKEND``
environment variable (``numba`` or ``numpy``). When unset, numba is used if it
imports. ``set_backend`` switches at runtime, which the tests and the benchmark
use to compare both paths on identical inputs.

Patch layout shared by ``im2col``/``col2im`` (3x3 kernels only)::

    cols[b, c*9 + ky*3 + kx, oy*out_w + ox] = x[b, c, oy*stride - pad + ky, ox*stride - pad + kx]

with out-of-range taps reading as zero. ``col2im`` is the exact adjoint.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit, uint64

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

BACKENDS = ("numba", "numpy")


def _default_backend() -> str:
    requested = os.environ.get("COLORUNET_BACKEND", "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"COLORUNET_BACKEND must be one of {BACKENDS}, got {requested!r}")
    return "numba" if HAS_NUMBA else "numpy"


_backend = _default_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the previous one."""
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not importable")
    previous, _backend = _backend, name
    return previous


# ---------------------------------------------------------------------------
# numpy implementations


def _pad_amounts(size, out, stride, pad):
    hi = max(0, (out - 1) * stride + 2 - pad - (size - 1))
    return pad, hi


def _im2col_np(x, stride, pad, out_h, out_w):
    n, c, h, w = x.shape
    ph = _pad_amounts(h, out_h, stride, pad)
    pw = _pad_amounts(w, out_w, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), ph, pw))
    cols = np.empty((n, c, 9, out_h, out_w), dtype=x.dtype)
    span_h = stride * (out_h - 1) + 1
    span_w = stride * (out_w - 1) + 1
    for ky in range(3):
        for kx in range(3):
            cols[:, :, ky * 3 + kx] = xp[:, :, ky:ky + span_h:stride, kx:kx + span_w:stride]
    return cols.reshape(n, c * 9, out_h * out_w)


def _col2im_np(cols, h, w, stride, pad, out_h, out_w):
    n, k, _ = cols.shape
    c = k // 9
    ph = _pad_amounts(h, out_h, stride, pad)
    pw = _pad_amounts(w, out_w, stride, pad)
    xp = np.zeros((n, c, h + ph[0] + ph[1], w + pw[0] + pw[1]), dtype=cols.dtype)
    cols5 = cols.reshape(n, c, 9, out_h, out_w)
    span_h = stride * (out_h - 1) + 1
    span_w = stride * (out_w - 1) + 1
    for ky in range(3):
        for kx in range(3):
            xp[:, :, ky:ky + span_h:stride, kx:kx + span_w:stride] += cols5[:, :, ky * 3 + kx]
    return np.ascontiguousarray(xp[:, :, ph[0]:ph[0] + h, pw[0]:pw[0] + w])


def _maxpool_np(x):
    n, c, h, w = x.shape
    win = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    idx = np.argmax(win, axis=-1).astype(np.int8)
    out = np.take_along_axis(win, idx[..., None].astype(np.intp), axis=-1)[..., 0]
    return np.ascontiguousarray(out), idx


def _maxpool_backward_np(dout, idx):
    n, c, h2, w2 = dout.shape
    win = np.zeros((n, c, h2, w2, 4), dtype=dout.dtype)
    np.put_along_axis(win, idx[..., None].astype(np.intp), dout[..., None], axis=-1)
    dx = win.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2 * 2, w2 * 2)
    return np.ascontiguousarray(dx)


def _nearest_bin_np(u, v, means):
    du = u[:, None] - means[None, :, 0]
    dv = v[:, None] - means[None, :, 1]
    return np.argmin(du * du + dv * dv, axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# numba implementations

if HAS_NUMBA:

    @njit(cache=True)
    def _valid_range(k, stride, pad, size, out):
        # output positions o with 0 <= o*stride - pad + k < size
        lo = max(0, (pad - k + stride - 1) // stride)
        hi = min(out, (size - 1 + pad - k) // stride + 1)
        return lo, max(lo, hi)

    # Both kernels fill a caller-allocated, zeroed flat buffer: numpy's
    # allocator recycles large blocks, numba's faults in fresh pages each call.
    # Unsigned offsets let LLVM drop the negative-index wraparound checks.

    @njit(cache=True)
    def _im2col_nb(x, cols, stride, pad, out_h, out_w):
        n, c, h, w = x.shape
        xf = x.ravel()
        hw = h * w
        ohw = out_h * out_w
        step = uint64(stride)
        for bc in range(n * c):
            for ky in range(3):
                oy_lo, oy_hi = _valid_range(ky, stride, pad, h, out_h)
                for kx in range(3):
                    ox_lo, ox_hi = _valid_range(kx, stride, pad, w, out_w)
                    span = uint64(ox_hi - ox_lo)
                    dst = (bc * 9 + ky * 3 + kx) * ohw + ox_lo
                    for oy in range(oy_lo, oy_hi):
                        s = uint64(bc * hw + (oy * stride - pad + ky) * w + ox_lo * stride - pad + kx)
                        d = uint64(dst + oy * out_w)
                        for j in range(span):
                            cols[d + j] = xf[s + j * step]

    @njit(cache=True)
    def _col2im_nb(cols, x, h, w, stride, pad, out_h, out_w):
        nc = x.size // (h * w)
        hw = h * w
        ohw = out_h * out_w
        step = uint64(stride)
        for bc in range(nc):
            for ky in range(3):
                oy_lo, oy_hi = _valid_range(ky, stride, pad, h, out_h)
                for kx in range(3):
                    ox_lo, ox_hi = _valid_range(kx, stride, pad, w, out_w)
                    span = uint64(ox_hi - ox_lo)
                    src = (bc * 9 + ky * 3 + kx) * ohw + ox_lo
                    for oy in range(oy_lo, oy_hi):
                        d = uint64(bc * hw + (oy * stride - pad + ky) * w + ox_lo * stride - pad + kx)
                        s = uint64(src + oy * out_w)
                        for j in range(span):
                            x[d + j * step] += cols[s + j]

    @njit(cache=True)
    def _maxpool_nb(x):
        n, c, h, w = x.shape
        h2 = h // 2
        w2 = w // 2
        out = np.empty((n, c, h2, w2), dtype=x.dtype)
        idx = np.empty((n, c, h2, w2), dtype=np.int8)
        for b in range(n):
            for ch in range(c):
                for i in range(h2):
                    for j in range(w2):
                        best = x[b, ch, 2 * i, 2 * j]
                        arg = 0
                        for k in range(1, 4):
                            val = x[b, ch, 2 * i + k // 2, 2 * j + k % 2]
                            if val > best:
                                best = val
                                arg = k
                        out[b, ch, i, j] = best
                        idx[b, ch, i, j] = arg
        return out, idx

    @njit(cache=True)
    def _maxpool_backward_nb(dout, idx):
        n, c, h2, w2 = dout.shape
        dx = np.zeros((n, c, 2 * h2, 2 * w2), dtype=dout.dtype)
        for b in range(n):
            for ch in range(c):
                for i in range(h2):
                    for j in range(w2):
                        k = idx[b, ch, i, j]
                        dx[b, ch, 2 * i + k // 2, 2 * j + k % 2] = dout[b, ch, i, j]
        return dx

    @njit(cache=True)
    def _nearest_bin_nb(u, v, means):
        m = u.shape[0]
        nb = means.shape[0]
        out = np.empty(m, dtype=np.int64)
        for p in range(m):
            best = np.inf
            arg = 0
            for k in range(nb):
                du = u[p] - means[k, 0]
                dv = v[p] - means[k, 1]
                d = du * du + dv * dv
                if d < best:
                    best = d
                    arg = k
            out[p] = arg
        return out


# ---------------------------------------------------------------------------
# dispatch


def im2col(x: np.ndarray, stride: int, pad: int, out_h: int, out_w: int) -> np.ndarray:
    """Gather 3x3 patches of ``x`` (N, C, H, W) into (N, C*9, out_h*out_w)."""
    x = np.ascontiguousarray(x)
    if _backend == "numba":
        n, c = x.shape[:2]
        cols = np.zeros(n * c * 9 * out_h * out_w, dtype=x.dtype)
        _im2col_nb(x, cols, stride, pad, out_h, out_w)
        return cols.reshape(n, c * 9, out_h * out_w)
    return _im2col_np(x, stride, pad, out_h, out_w)


def col2im(cols: np.ndarray, h: int, w: int, stride: int, pad: int, out_h: int, out_w: int) -> np.ndarray:
    """Scatter-add patches back onto an (N, C, h, w) grid; adjoint of :func:`im2col`."""
    cols = np.ascontiguousarray(cols)
    if _backend == "numba":
        n, k = cols.shape[:2]
        x = np.zeros(n * (k // 9) * h * w, dtype=cols.dtype)
        _col2im_nb(cols.ravel(), x, h, w, stride, pad, out_h, out_w)
        return x.reshape(n, k // 9, h, w)
    return _col2im_np(cols, h, w, stride, pad, out_h, out_w)


def maxpool2x2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2/stride-2 max pooling. Returns the pooled array and the in-window
    argmax (0..3, row-major, first maximum on ties)."""
    x = np.ascontiguousarray(x)
    if _backend == "numba":
        return _maxpool_nb(x)
    return _maxpool_np(x)


def maxpool2x2_backward(dout: np.ndarray, idx: np.ndarray) -> np.ndarray:
    dout = np.ascontiguousarray(dout)
    if _backend == "numba":
        return _maxpool_backward_nb(dout, idx)
    return _maxpool_backward_np(dout, idx)


def nearest_bin(u: np.ndarray, v: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Index of the nearest row of ``means`` (K, 2) for each flat (u, v) pair.
    Ties resolve to the lowest index."""
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    means = np.ascontiguousarray(means, dtype=np.float64)
    if _backend == "numba":
        return _nearest_bin_nb(u, v, means)
    return _nearest_bin_np(u, v, means)
