"""RGB <-> YUV conversion (BT.601 analog YUV, channels in [0, 1]).

Images are float arrays with the channel axis last: RGB is ``(..., 3)`` with
values in [0, 1]; YUV is ``(..., 3)`` holding (y, u, v).

The forward matrix is built from the BT.601 luma weights W_R = 0.299,
W_B = 0.114 and the chroma extremes U_MAX = 0.436, V_MAX = 0.615::

    y = 0.299 r + 0.587 g + 0.114 b
    u = U_MAX (b - y) / (1 - W_B)   ~ -0.14714 r - 0.28886 g + 0.436   b
    v = V_MAX (r - y) / (1 - W_R)   ~  0.615   r - 0.51499 g - 0.10001 b

Deriving u and v from (b - y) and (r - y) makes both chroma rows sum to
exactly zero, so gray pixels map to u = v = 0 up to rounding. No gamma or ICC
handling is applied; values are treated as linear.
"""

from __future__ import annotations

import numpy as np

W_R = 0.299
W_B = 0.114
W_G = 1.0 - W_R - W_B
U_MAX = 0.436
V_MAX = 0.615

RGB_TO_YUV = np.array(
    [
        [W_R, W_G, W_B],
        [-U_MAX * W_R / (1 - W_B), -U_MAX * W_G / (1 - W_B), U_MAX],
        [V_MAX, -V_MAX * W_G / (1 - W_R), -V_MAX * W_B / (1 - W_R)],
    ]
)
YUV_TO_RGB = np.linalg.inv(RGB_TO_YUV)


def rgb_to_yuv(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError(f"expected a trailing channel axis of size 3, got shape {rgb.shape}")
    return rgb @ RGB_TO_YUV.T


def yuv_to_rgb(yuv: np.ndarray) -> np.ndarray:
    """Inverse transform; out-of-gamut results are clamped to [0, 1]."""
    yuv = np.asarray(yuv, dtype=np.float64)
    if yuv.shape[-1] != 3:
        raise ValueError(f"expected a trailing channel axis of size 3, got shape {yuv.shape}")
    return np.clip(yuv @ YUV_TO_RGB.T, 0.0, 1.0)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """The y plane of :func:`rgb_to_yuv`, i.e. the network input."""
    return rgb_to_yuv(rgb)[..., 0]


def merge_yuv(y: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Stack a luminance plane (H, W) with chrominance (H, W, 2)."""
    return np.concatenate([np.asarray(y, dtype=np.float64)[..., None], uv], axis=-1)


def to_float(img_u8: np.ndarray) -> np.ndarray:
    return np.asarray(img_u8, dtype=np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
