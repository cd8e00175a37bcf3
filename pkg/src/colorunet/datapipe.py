"""Image loading, frame fitting, train/validation split and augmentation.

Every training image lives in a square ``frame x frame`` canvas. Images larger
than the frame are Lanczos-downsampled so their longer side equals the frame;
smaller ones are left alone. Content sits in the top-left corner and a 0/1
mask marks which canvas pixels carry image data.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .colorspace import luminance, rgb_to_yuv, to_float
from .discretizer import ColorDiscretizer, encode
from .errors import DataError

FRAME = 256
IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}

DEFAULT_VARIANTS = (
    "original",
    "flip",
    "noise_low",
    "noise_high",
    "crop",
    "crop",
    "flip+noise_low",
)


@dataclass(frozen=True)
class AugmentationSpec:
    noise_low: float = 0.02
    noise_high: float = 0.05
    crop_min: float = 0.6
    crop_max: float = 0.9
    variants: tuple[str, ...] = DEFAULT_VARIANTS

    def __post_init__(self):
        known = {"original", "flip", "noise_low", "noise_high", "crop"}
        for v in self.variants:
            bad = set(v.split("+")) - known
            if bad:
                raise ValueError(f"unknown augmentation op(s) {sorted(bad)} in variant {v!r}")
        if not 0 < self.crop_min <= self.crop_max <= 1:
            raise ValueError("crop fractions must satisfy 0 < crop_min <= crop_max <= 1")


@dataclass
class Sample:
    y: np.ndarray  # (H, W) float32 luminance
    labels: np.ndarray  # (H, W) int64 bin index; 0 on padding
    mask: np.ndarray  # (H, W) uint8
    source_id: str = ""


# -- files ---------------------------------------------------------------------


def scan_images(root) -> list[Path]:
    """All PNG/JPEG files under ``root`` (recursive, case-insensitive), sorted."""
    root = Path(root)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise DataError(f"no such directory: {root}")
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)


def read_rgb(path) -> np.ndarray:
    """Load an image file as an (H, W, 3) uint8 array."""
    try:
        with Image.open(path) as im:
            im.load()
            arr = np.asarray(im.convert("RGB"))
    except (OSError, UnidentifiedImageError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from None
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DataError(f"image {path} has a zero dimension")
    return arr


def fitted_size(h: int, w: int, frame: int) -> tuple[int, int]:
    longest = max(h, w)
    if longest <= frame:
        return h, w
    scale = frame / longest
    return max(1, round(h * scale)), max(1, round(w * scale))


def _resize_u8(arr: np.ndarray, h: int, w: int) -> np.ndarray:
    if arr.shape[:2] == (h, w):
        return arr
    return np.asarray(Image.fromarray(arr).resize((w, h), Image.LANCZOS))


def _resize_float(img: np.ndarray, h: int, w: int) -> np.ndarray:
    """Lanczos resize of a float (H, W, C) image, channel by channel."""
    if img.shape[:2] == (h, w):
        return img.copy()
    chans = [
        np.asarray(Image.fromarray(img[..., c].astype(np.float32), mode="F").resize((w, h), Image.LANCZOS))
        for c in range(img.shape[-1])
    ]
    return np.clip(np.stack(chans, axis=-1).astype(np.float64), 0.0, 1.0)


def place_in_frame(content: np.ndarray, frame: int, frame_w: int | None = None):
    """Top-left placement on a zero canvas; returns (canvas, mask)."""
    frame_w = frame if frame_w is None else frame_w
    h, w = content.shape[:2]
    canvas = np.zeros((frame, frame_w, 3), dtype=np.float64)
    canvas[:h, :w] = content
    mask = np.zeros((frame, frame_w), dtype=np.uint8)
    mask[:h, :w] = 1
    return canvas, mask


def fit_to_frame(rgb_u8: np.ndarray, frame: int = FRAME) -> tuple[np.ndarray, np.ndarray]:
    """Downsample (never upsample) into the frame; returns float RGB canvas and mask."""
    h, w = fitted_size(rgb_u8.shape[0], rgb_u8.shape[1], frame)
    return place_in_frame(to_float(_resize_u8(rgb_u8, h, w)), frame)


def load_and_fit(path, frame: int = FRAME) -> tuple[np.ndarray, np.ndarray]:
    return fit_to_frame(read_rgb(path), frame)


# -- augmentation ----------------------------------------------------------------


def content_box(mask: np.ndarray) -> tuple[int, int]:
    """(height, width) of the top-left content region."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise DataError("mask selects no pixels")
    return int(rows[-1]) + 1, int(cols[-1]) + 1


def flip(img: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mirror the content region left-right, keeping it in the top-left corner."""
    h, w = content_box(mask)
    out = img.copy()
    out[:h, :w] = img[:h, :w][:, ::-1]
    return out, mask.copy()


def add_noise(img, mask, sigma: float, rng: np.random.Generator):
    """Additive Gaussian noise on content pixels, clamped to [0, 1]."""
    if sigma == 0:
        return img.copy(), mask.copy()
    noise = rng.normal(0.0, sigma, size=img.shape) * (mask[..., None] > 0)
    return np.clip(img + noise, 0.0, 1.0), mask.copy()


def random_crop(img, mask, spec: AugmentationSpec, rng: np.random.Generator):
    """Crop 60-90% (by default) of each side of the content at a uniform
    position, then resize the crop back so its longer side matches the
    content's longer side."""
    ch, cw = content_box(mask)
    fh, fw = rng.uniform(spec.crop_min, spec.crop_max, size=2)
    h = max(1, int(round(ch * fh)))
    w = max(1, int(round(cw * fw)))
    top = int(rng.integers(0, ch - h + 1))
    left = int(rng.integers(0, cw - w + 1))
    crop = img[top:top + h, left:left + w]
    scale = max(ch, cw) / max(h, w)
    nh = min(img.shape[0], max(1, round(h * scale)))
    nw = min(img.shape[1], max(1, round(w * scale)))
    return place_in_frame(_resize_float(crop, nh, nw), img.shape[0], img.shape[1])


def augment(img: np.ndarray, mask: np.ndarray, spec: AugmentationSpec | None = None, seed=0):
    """Expand one framed image into ``len(spec.variants)`` (img, mask) pairs
    (seven by default). Operations inside a variant apply left to right."""
    spec = spec or AugmentationSpec()
    rng = np.random.default_rng(seed)
    out = []
    for variant in spec.variants:
        cur_img, cur_mask = img.copy(), mask.copy()
        for op in variant.split("+"):
            if op == "flip":
                cur_img, cur_mask = flip(cur_img, cur_mask)
            elif op == "noise_low":
                cur_img, cur_mask = add_noise(cur_img, cur_mask, spec.noise_low, rng)
            elif op == "noise_high":
                cur_img, cur_mask = add_noise(cur_img, cur_mask, spec.noise_high, rng)
            elif op == "crop":
                cur_img, cur_mask = random_crop(cur_img, cur_mask, spec, rng)
        out.append((cur_img, cur_mask))
    return out


# -- split and samples --------------------------------------------------------------


def split(paths: Sequence, val_fraction: float, seed: int = 0) -> tuple[list, list]:
    """Random disjoint train/validation split, deterministic in ``seed``."""
    if not 0 < val_fraction < 1:
        raise ValueError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    items = sorted(set(paths), key=str)
    if not items:
        raise DataError("cannot split an empty path list")
    n_val = int(round(len(items) * val_fraction))
    if len(items) >= 2:
        n_val = min(max(n_val, 1), len(items) - 1)
    perm = np.random.default_rng(seed).permutation(len(items))
    val_idx = set(perm[:n_val].tolist())
    train = [p for i, p in enumerate(items) if i not in val_idx]
    val = [p for i, p in enumerate(items) if i in val_idx]
    return train, val


def write_split(train, val, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train.txt").write_text("".join(f"{p}\n" for p in train))
    (out_dir / "val.txt").write_text("".join(f"{p}\n" for p in val))


def make_sample(img: np.ndarray, mask: np.ndarray, d: ColorDiscretizer, source_id: str = "") -> Sample:
    labels = encode(rgb_to_yuv(img), d)
    labels[mask == 0] = 0
    return Sample(
        y=luminance(img).astype(np.float32),
        labels=labels.astype(np.int64),
        mask=np.asarray(mask, dtype=np.uint8),
        source_id=source_id,
    )


def make_samples(images: Iterable, d: ColorDiscretizer) -> Iterator[Sample]:
    """Turn ``(img, mask[, source_id])`` tuples into training samples."""
    for item in images:
        img, mask, *rest = item
        yield make_sample(img, mask, d, rest[0] if rest else "")


def image_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def framed_images(paths, frame: int = FRAME, augmentation: AugmentationSpec | None = None, seed: int = 0):
    """Yield ``(img, mask, source_id)`` for each path, expanded by augmentation
    when a spec is given."""
    for i, path in enumerate(paths):
        img, mask = load_and_fit(path, frame)
        if augmentation is None:
            yield img, mask, str(path)
        else:
            for k, (a_img, a_mask) in enumerate(augment(img, mask, augmentation, image_seed(seed, i))):
                yield a_img, a_mask, f"{path}#{k}"


def build_samples(paths, d: ColorDiscretizer, frame: int = FRAME,
                  augmentation: AugmentationSpec | None = None, seed: int = 0) -> list[Sample]:
    return list(make_samples(framed_images(paths, frame, augmentation, seed), d))
