"""Acceptance criteria, one check per criterion.

Each check returns ``(ok, detail)``. Under pytest every criterion prints a
``PASS``/``FAIL`` line even when output is captured; run this file directly
(``python3 tests/test_acceptance.py``) for the same lines without pytest.
"""

from __future__ import annotations

import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from colorunet import cli  # noqa: E402
from colorunet import datapipe as dp  # noqa: E402
from colorunet import decoder as dec  # noqa: E402
from colorunet import discretizer as dz  # noqa: E402
from colorunet.colorspace import RGB_TO_YUV, rgb_to_yuv, to_uint8, yuv_to_rgb  # noqa: E402
from colorunet.model import ColorUNet, ColorUNetConfig  # noqa: E402
from colorunet.nn import functional as F  # noqa: E402
from colorunet.nn.gradcheck import check_gradients  # noqa: E402
from colorunet.nn.tensor import Tensor, no_grad  # noqa: E402
from colorunet.train import Schedule, train  # noqa: E402
from colorunet.video import SmoothingSpec, colorize_sequence_detailed, smooth, stability_report  # noqa: E402

from synthetic import scenes  # noqa: E402


def _t(shape, seed, lo=-1.0, hi=1.0):
    return Tensor(np.random.default_rng(seed).uniform(lo, hi, shape), requires_grad=True)


def gradient_verification():
    start = time.perf_counter()
    errs = {}

    x, w, b = _t((2, 3, 5, 4), 1), _t((4, 3, 3, 3), 2), _t(4, 3)
    errs["conv3x3"] = check_gradients(lambda: F.conv2d(x, w, b), {"x": x, "w": w, "b": b}, seed=50)
    x, w, b = _t((2, 3, 3, 2), 4), _t((3, 2, 3, 3), 5), _t(2, 6)
    errs["convtranspose3x3"] = check_gradients(lambda: F.conv_transpose2d(x, w, b), {"x": x, "w": w, "b": b}, seed=51)
    xp = Tensor(np.random.default_rng(7).permutation(96).reshape(2, 3, 4, 4) * 0.01, requires_grad=True)
    errs["maxpool2x2"] = check_gradients(lambda: F.max_pool2x2(xp), {"x": xp}, seed=52)
    xr = _t((2, 2, 3, 3), 8)
    xr.data[np.abs(xr.data) < 1e-3] = 0.5
    errs["relu"] = check_gradients(lambda: F.relu(xr), {"x": xr}, seed=53)
    a, c = _t((1, 2, 3, 3), 9), _t((1, 3, 3, 3), 10)
    errs["concat"] = check_gradients(lambda: F.concat([a, c]), {"a": a, "b": c}, seed=54)
    for training in (True, False):
        xb, g, be = _t((3, 2, 3, 3), 11, -2, 3), _t(2, 12, 0.5, 1.5), _t(2, 13)
        rm, rv = np.array([0.1, -0.2]), np.array([1.3, 0.7])
        errs[f"batchnorm[{'train' if training else 'eval'}]"] = check_gradients(
            lambda: F.batch_norm(xb, g, be, rm.copy(), rv.copy(), training), {"x": xb, "gamma": g, "beta": be}, seed=55)
    rng = np.random.default_rng(14)
    logits = Tensor(rng.standard_normal((2, 5, 3, 3)), requires_grad=True)
    labels, mask, wts = rng.integers(0, 5, (2, 3, 3)), (rng.random((2, 3, 3)) > 0.3).astype(float), rng.uniform(0.2, 3, 5)
    errs["weighted_masked_cross_entropy"] = check_gradients(
        lambda: F.weighted_masked_cross_entropy(logits, labels, mask, wts), {"logits": logits}, seed=56)

    model = ColorUNet(ColorUNetConfig(base_filters=2), seed=0, dtype=np.float64)
    prng = np.random.default_rng(15)
    for name, t in model.parameters().items():
        if name.endswith("bias") or name.endswith("beta"):
            t.data[:] = prng.uniform(-0.1, 0.1, t.shape)
    y = np.random.default_rng(16).random((2, 1, 8, 8))
    errs["tiny ColorUNet"] = check_gradients(lambda: model.forward(y, training=True), model.parameters(), seed=57)

    worst = {k: max(v.values()) for k, v in errs.items()}
    elapsed = time.perf_counter() - start
    name, top = max(worst.items(), key=lambda kv: kv[1])
    ok = top < 1e-3 and elapsed < 120
    return ok, f"{len(worst)} checks, worst rel err {top:.2e} ({name}), {elapsed:.1f}s"


def colorspace_round_trip():
    rgb = np.random.default_rng(0).random((10_000, 3))
    err = np.abs(yuv_to_rgb(rgb_to_yuv(rgb)) - rgb).max()
    return err <= 1e-6, f"max channel error {err:.2e} over 10000 pixels"


def rebalancing_oracle():
    w = dz.compute_weights([0.75, 0.25], 0.0, 2)
    err = np.abs(w - [2 / 3, 2]).max()
    uniform = np.abs(dz.compute_weights(np.full(32, 1 / 32), 0.5) - 1).max()
    lam1 = np.abs(dz.compute_weights([0.6, 0.3, 0.1], 1.0) - 1).max()
    ok = err <= 1e-12 and uniform <= 1e-12 and lam1 <= 1e-12
    return ok, f"w={w.tolist()}, oracle err {err:.1e}, uniform dev {uniform:.1e}, lambda=1 dev {lam1:.1e}"


def annealed_mean_identities():
    d = dz.fit([rgb_to_yuv(s) for s in scenes(8, 64, 64)], n=32)
    rng = np.random.default_rng(1)
    p = rng.random((8, 8, 32))
    p /= p.sum(-1, keepdims=True)
    e1 = np.abs(dec.annealed_mean(p, 1.0, d) - p @ d.bin_mean).max()
    idx = rng.integers(0, 32, (8, 8))
    pk = rng.random((8, 8, 32))
    np.put_along_axis(pk, idx[..., None], pk.max() + 0.3, axis=-1)
    pk /= pk.sum(-1, keepdims=True)
    e2 = np.abs(dec.annealed_mean(pk, 0.01, d) - d.bin_mean[idx]).max()
    valid = argmax = True
    for t in (0.1, 0.5, 1.0, 2.0):
        q = dec.anneal(p, t)
        valid &= bool(np.all(q >= 0) and np.abs(q.sum(-1) - 1).max() < 1e-12)
        argmax &= bool(np.array_equal(q.argmax(-1), p.argmax(-1)))
    ok = e1 <= 1e-6 and e2 <= 1e-6 and valid and argmax
    return ok, f"T=1 err {e1:.1e}, T=0.01 vs argmax {e2:.1e}, valid={valid}, argmax kept={argmax}"


def uniform_logit_loss():
    logits = Tensor(np.zeros((2, 32, 8, 8), np.float32))
    labels = np.random.default_rng(0).integers(0, 32, (2, 8, 8))
    loss = F.weighted_masked_cross_entropy(logits, labels, np.ones((2, 8, 8)), np.ones(32)).item()
    err = abs(loss - math.log(32))
    return err <= 1e-6, f"loss {loss:.7f} vs ln 32 = {math.log(32):.7f}"


def overfit_smoke():
    start = time.perf_counter()
    imgs = scenes(8, 64, 64)
    d = dz.fit([rgb_to_yuv(i) for i in imgs], n=32)
    samples = [dp.make_sample(i, np.ones((64, 64), np.uint8), d) for i in imgs]
    model = ColorUNet(ColorUNetConfig(num_classes=32), seed=0)
    schedule = Schedule()
    res = train(model, samples, d.weight, schedule, batch_size=8, seed=0)
    losses = res.train_losses
    elapsed = time.perf_counter() - start
    ratio = losses[-1] / losses[0]
    ok = len(losses) == 200 and ratio < 0.5 and elapsed < 600
    return ok, (f"{len(losses)} iters ({schedule.steps1}+{schedule.steps2}), loss {losses[0]:.3f} -> "
                f"{losses[-1]:.3f} (ratio {ratio:.3f}), {elapsed:.0f}s")


def quantization_bound():
    imgs = scenes(20, 48, 48, seed=7)
    d = dz.fit([rgb_to_yuv(i) for i in imgs], n=32)
    # fine-lattice scan of the RGB cube; Lipschitz slack makes it an upper bound
    k = 48
    axis = np.linspace(0, 1, k)
    lattice = rgb_to_yuv(np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), -1).reshape(-1, 3))[:, 1:]
    dist = np.sqrt(((lattice[:, None] - d.bin_mean[None]) ** 2).sum(-1)).min(1)
    bound = dist.max() + np.linalg.norm(RGB_TO_YUV[1:], 2) * math.sqrt(3) / 2 / (k - 1)
    errs = []
    for rgb in imgs:
        yuv = rgb_to_yuv(rgb)
        rec = dz.decode_labels(dz.encode(yuv, d), d, yuv[..., 0])
        errs.append(np.linalg.norm(rec[..., 1:] - yuv[..., 1:], axis=-1))
    errs = np.concatenate([e.ravel() for e in errs])
    ok = errs.mean() <= bound and errs.max() <= bound
    return ok, f"mean UV error {errs.mean():.4f}, max {errs.max():.4f}, bound {bound:.4f}"


def sevenfold_augmentation():
    rgb = scenes(1, 48, 40)[0]
    img, mask = dp.place_in_frame(rgb, 64)
    variants = dp.augment(img, mask, seed=3)
    again = dp.augment(img, mask, seed=3)
    reproducible = all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) for a, b in zip(variants, again))
    twice = dp.flip(*dp.flip(img, mask))
    involution = np.array_equal(twice[0], img) and np.array_equal(twice[1], mask)
    noiseless = np.array_equal(dp.add_noise(img, mask, 0.0, np.random.default_rng(0))[0], img)
    ok = len(variants) == 7 and reproducible and involution and noiseless
    return ok, (f"{len(variants)} variants, flip involution={involution}, sigma=0 identity={noiseless}, "
                f"seeded reproducible={reproducible}")


def temporal_smoothing():
    p1 = smooth([np.array([1.0, 0.0]), np.array([0.0, 1.0])], SmoothingSpec(20, 0.2))[1]
    e_two = np.abs(p1 - [0.4502, 0.5498]).max()
    rng = np.random.default_rng(0)
    const = rng.random((4, 4, 6))
    const /= const.sum(-1, keepdims=True)
    e_const = max(np.abs(q - const).max() for q in smooth([const] * 6))
    seq = list(rng.random((5, 4, 4, 6)))
    seq = [s / s.sum(-1, keepdims=True) for s in seq]
    e_alpha = max(np.abs(q - s).max() for q, s in zip(smooth(seq, SmoothingSpec(20, 1e6)), seq))

    imgs = scenes(8, 32, 32)
    d = dz.fit([rgb_to_yuv(i) for i in imgs], n=16)
    model = ColorUNet(ColorUNetConfig(base_filters=4, num_classes=16), seed=0)
    samples = [dp.make_sample(i, np.ones((32, 32), np.uint8), d) for i in imgs]
    train(model, samples, d.weight, Schedule(1e-3, 1e-4, 20, 5), batch_size=8)
    base = rgb_to_yuv(imgs[0])[..., 0]
    frames = [np.clip(base + rng.normal(0, 0.03, base.shape), 0, 1) for _ in range(10)]
    res = colorize_sequence_detailed(frames, model, d)
    rows = stability_report(res.raw_uv, res.uv)
    tv_ok = all(r["smoothed_tv"] <= r["raw_tv"] for r in rows)
    mean_raw = np.mean([r["raw_tv"] for r in rows])
    mean_sm = np.mean([r["smoothed_tv"] for r in rows])
    ok = e_two <= 1e-4 and e_const <= 1e-12 and e_alpha <= 1e-6 and tv_ok
    return ok, (f"two-frame p1={np.round(p1, 4).tolist()}, constant dev {e_const:.1e}, alpha=1e6 dev {e_alpha:.1e}, "
                f"TV smoothed<=raw on {sum(r['smoothed_tv'] <= r['raw_tv'] for r in rows)}/{len(rows)} "
                f"(mean {mean_sm:.2e} vs {mean_raw:.2e})")


def shape_contracts():
    out = ColorUNet(seed=0).forward(np.zeros((2, 1, 64, 64), np.float32), training=True)
    model = ColorUNet(ColorUNetConfig(base_filters=1), seed=0)
    checked = 0
    bad = []
    with no_grad():
        for h in range(8, 257, 8):
            for w in range(8, 257, 8):
                o = model.forward(np.zeros((1, 1, h, w), np.float32), training=True)
                if o.shape != (1, 32, h, w) or any(u[2:] != s[2:] for u, s in model.skip_shapes):
                    bad.append((h, w))
                checked += 1
    ok = out.shape == (2, 32, 64, 64) and not bad
    return ok, f"forward {out.shape}; skip shapes matched for {checked - len(bad)}/{checked} sizes"


def _pipeline(root: Path):
    """Full CLI run inside ``root`` using relative paths only."""
    cwd = os.getcwd()
    os.chdir(root)
    try:
        Path("imgs").mkdir()
        from PIL import Image

        for i, s in enumerate(scenes(6, 48, 48)):
            Image.fromarray(to_uint8(s)).save(f"imgs/img{i}.png")
        frames = Path("frames")
        frames.mkdir()
        for i in range(3):
            Image.fromarray(to_uint8(scenes(1, 48, 48, seed=i)[0])).save(frames / f"frame_{i:06d}.png")
        common = ["--seed", "3", "--threads", "1"]
        codes = [
            cli.main(["fit-discretizer", "--input", "imgs", "--output", "disc/d.cdsc", "--n", "16", "--frame", "48",
                      *common]),
            cli.main(["train", "--input", "imgs", "--discretizer", "disc/d.cdsc", "--output", "run", "--frame", "48",
                      "--phase1-steps", "4", "--phase2-steps", "2", "--base-filters", "4", "--batch-size", "4",
                      "--augment", "--checkpoint-every", "2", *common]),
            cli.main(["colorize", "--input", "imgs", "--checkpoint", "run/checkpoint.cunw", "--discretizer",
                      "disc/d.cdsc", "--output", "col", "--temperature", "0.1,0.4,1", "--confidence", "--histogram",
                      *common]),
            cli.main(["colorize-video", "--input", "frames", "--checkpoint", "run/checkpoint.cunw", "--discretizer",
                      "disc/d.cdsc", "--output", "vid", *common]),
            cli.main(["analyze", "--log", "run/train_log.csv", "--output", "ana", "--discretizer", "disc/d.cdsc",
                      "--checkpoint", "run/checkpoint.cunw", "--input", "imgs", "--frame", "48", *common]),
        ]
    finally:
        os.chdir(cwd)
    files = {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    return codes, files


def determinism(tmp_root: Path | None = None):
    import tempfile

    with tempfile.TemporaryDirectory(dir=tmp_root) as tmp:
        a, b = Path(tmp, "a"), Path(tmp, "b")
        a.mkdir()
        b.mkdir()
        codes_a, files_a = _pipeline(a)
        codes_b, files_b = _pipeline(b)
    differing = sorted(k for k in files_a if files_a.get(k) != files_b.get(k))
    differing += sorted(set(files_b) - set(files_a))
    ok = codes_a == codes_b == [0] * 5 and not differing
    return ok, f"{len(files_a)} files compared, {len(differing)} differ{(': ' + ', '.join(differing[:5])) if differing else ''}"


CRITERIA = [
    ("gradient-verification", gradient_verification),
    ("colorspace-round-trip", colorspace_round_trip),
    ("rebalancing-oracle", rebalancing_oracle),
    ("annealed-mean-identities", annealed_mean_identities),
    ("uniform-logit-loss", uniform_logit_loss),
    ("overfit-smoke", overfit_smoke),
    ("quantization-bound", quantization_bound),
    ("sevenfold-augmentation", sevenfold_augmentation),
    ("temporal-smoothing", temporal_smoothing),
    ("shape-contracts", shape_contracts),
    ("determinism", determinism),
]


def _line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("name,check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for name, check in CRITERIA:
        ok, detail = check()
        failures += not ok
        print(_line(name, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
