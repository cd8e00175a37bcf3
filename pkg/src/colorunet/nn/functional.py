"""Differentiable ops on (N, C, H, W) tensors.

Each op computes its forward pass with numpy (the patch gather/scatter and
pooling loops go through :mod:`colorunet._kernels`) and registers a closure
for the backward pass.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import DataError
from .tensor import Tensor, make_node


def _check_rank4(x: Tensor, what: str):
    if x.data.ndim != 4:
        raise ValueError(f"{what} expects an (N, C, H, W) tensor, got shape {x.shape}")


def conv2d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """3x3 convolution, stride 1, padding 1 (spatial size preserved).

    weight: (out_ch, in_ch, 3, 3); bias: (out_ch,).
    """
    _check_rank4(x, "conv2d")
    n, c, h, w = x.shape
    out_ch, in_ch, kh, kw = weight.shape
    if (kh, kw) != (3, 3):
        raise ValueError(f"conv2d supports 3x3 kernels only, got {kh}x{kw}")
    if in_ch != c:
        raise ValueError(f"conv2d: input has {c} channels, weight expects {in_ch}")
    if bias.shape != (out_ch,):
        raise ValueError(f"conv2d: bias shape {bias.shape} != ({out_ch},)")

    cols = _kernels.im2col(x.data, 1, 1, h, w)
    wm = weight.data.reshape(out_ch, c * 9)
    out = np.matmul(wm, cols)
    out += bias.data[:, None]
    out = out.reshape(n, out_ch, h, w)

    def backward(g):
        g2 = g.reshape(n, out_ch, h * w)
        if weight.requires_grad:
            weight.accumulate(np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0).reshape(weight.shape))
        if bias.requires_grad:
            bias.accumulate(g2.sum(axis=(0, 2)))
        if x.requires_grad:
            dcols = np.matmul(wm.T, g2)
            x.accumulate(_kernels.col2im(dcols, h, w, 1, 1, h, w))

    return make_node(out, (x, weight, bias), backward)


def conv_transpose2d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """3x3 transposed convolution, stride 2, padding 1, output padding 1.

    Output spatial size is exactly twice the input. weight: (in_ch, out_ch, 3, 3).
    Input pixel (i, j) scatters ``weight[:, :, ky, kx]`` onto output pixel
    (2i - 1 + ky, 2j - 1 + kx); taps landing outside the output are dropped.
    """
    _check_rank4(x, "conv_transpose2d")
    n, c, h, w = x.shape
    in_ch, out_ch, kh, kw = weight.shape
    if (kh, kw) != (3, 3):
        raise ValueError(f"conv_transpose2d supports 3x3 kernels only, got {kh}x{kw}")
    if in_ch != c:
        raise ValueError(f"conv_transpose2d: input has {c} channels, weight expects {in_ch}")
    if bias.shape != (out_ch,):
        raise ValueError(f"conv_transpose2d: bias shape {bias.shape} != ({out_ch},)")

    wm = weight.data.reshape(in_ch, out_ch * 9)
    x2 = x.data.reshape(n, c, h * w)
    cols = np.matmul(wm.T, x2)
    out = _kernels.col2im(cols, 2 * h, 2 * w, 2, 1, h, w)
    out += bias.data[None, :, None, None]

    def backward(g):
        dcols = _kernels.im2col(g, 2, 1, h, w)
        if weight.requires_grad:
            weight.accumulate(np.matmul(x2, dcols.transpose(0, 2, 1)).sum(axis=0).reshape(weight.shape))
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            x.accumulate(np.matmul(wm, dcols).reshape(x.shape))

    return make_node(out, (x, weight, bias), backward)


def max_pool2x2(x: Tensor) -> Tensor:
    _check_rank4(x, "max_pool2x2")
    h, w = x.shape[2:]
    if h % 2 or w % 2:
        raise ValueError(f"max_pool2x2 needs even spatial dims, got {h}x{w}")
    out, idx = _kernels.maxpool2x2(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate(_kernels.maxpool2x2_backward(g, idx))

    return make_node(out, (x,), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = np.where(mask, x.data, 0).astype(x.dtype, copy=False)

    def backward(g):
        if x.requires_grad:
            x.accumulate(g * mask)

    return make_node(out, (x,), backward)


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = list(tensors)
    ref = tensors[0].shape
    for t in tensors[1:]:
        if t.data.ndim != len(ref) or any(a != b for i, (a, b) in enumerate(zip(t.shape, ref)) if i != axis):
            raise ValueError(f"concat: shape {t.shape} incompatible with {ref} along axis {axis}")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        for t, part in zip(tensors, np.split(g, splits, axis=axis)):
            if t.requires_grad:
                t.accumulate(part)

    return make_node(out, tensors, backward)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalization over (N, H, W).

    In training mode the batch statistics are used and the running buffers are
    updated in place as ``running = momentum * running + (1 - momentum) * batch``
    (the variance buffer tracks the unbiased estimate). In eval mode the
    running buffers are used instead.
    """
    _check_rank4(x, "batch_norm")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ValueError(f"batch_norm: expected ({c},) scale/shift, got {gamma.shape}/{beta.shape}")
    axes = (0, 2, 3)
    m = x.data.size // c
    if training:
        if m < 2:
            raise ValueError("batch_norm in training mode needs more than one value per channel")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= momentum
        running_mean += (1 - momentum) * mean
        running_var *= momentum
        running_var += (1 - momentum) * var * (m / (m - 1))
    else:
        mean = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)
    inv = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    xhat = (x.data - mean[None, :, None, None]) * inv[None, :, None, None]
    out = xhat * gamma.data[None, :, None, None] + beta.data[None, :, None, None]

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate((g * xhat).sum(axis=axes))
        if beta.requires_grad:
            beta.accumulate(g.sum(axis=axes))
        if x.requires_grad:
            dxhat = g * gamma.data[None, :, None, None]
            if training:
                s1 = dxhat.sum(axis=axes)[None, :, None, None]
                s2 = (dxhat * xhat).sum(axis=axes)[None, :, None, None]
                dx = (dxhat - s1 / m - xhat * (s2 / m)) * inv[None, :, None, None]
            else:
                dx = dxhat * inv[None, :, None, None]
            x.accumulate(dx)

    return make_node(out, (x, gamma, beta), backward)


def softmax(logits, axis: int = 1) -> np.ndarray:
    """Max-subtracted softmax along ``axis`` (channels by default)."""
    z = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits, axis: int = 1) -> np.ndarray:
    z = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def weighted_masked_cross_entropy(logits: Tensor, labels, mask, weights) -> Tensor:
    """Class-weighted cross-entropy averaged over valid pixels.

    ``loss = sum(mask * w[label] * -log p[label]) / sum(mask * w[label])``

    logits: (N, n, H, W); labels: (N, H, W) ints; mask: (N, H, W) 0/1;
    weights: (n,). Labels under a zero mask are ignored and may hold anything.
    """
    _check_rank4(logits, "weighted_masked_cross_entropy")
    n_cls = logits.shape[1]
    labels = np.asarray(labels)
    mask = np.asarray(mask, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    spatial = (logits.shape[0],) + logits.shape[2:]
    if labels.shape != spatial or mask.shape != spatial:
        raise ValueError(f"labels {labels.shape} / mask {mask.shape} must match {spatial}")
    if weights.shape != (n_cls,):
        raise ValueError(f"expected {n_cls} class weights, got shape {weights.shape}")

    valid = mask != 0
    safe = np.where(valid, labels, 0).astype(np.intp)
    if safe.size and (safe.min() < 0 or safe.max() >= n_cls):
        raise ValueError(f"labels must lie in [0, {n_cls}) on unmasked pixels")
    pix_w = mask * weights[safe]
    total = pix_w.sum()
    if not total > 0:
        raise DataError("loss is undefined: every pixel is masked out")

    logp = log_softmax(logits.data, axis=1)
    picked = np.take_along_axis(logp, safe[:, None], axis=1)[:, 0]
    loss = -(pix_w * picked.astype(np.float64)).sum() / total
    out = np.array(loss, dtype=logits.dtype)

    def backward(g):
        if not logits.requires_grad:
            return
        d = np.exp(logp)
        np.put_along_axis(d, safe[:, None], np.take_along_axis(d, safe[:, None], axis=1) - 1, axis=1)
        scale = (pix_w / total * g).astype(logits.dtype)
        logits.accumulate(d * scale[:, None])

    return make_node(out, (logits,), backward)
