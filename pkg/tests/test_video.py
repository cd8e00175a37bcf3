import math

import numpy as np
import pytest

from colorunet import video
from colorunet.decoder import colorize
from colorunet.model import ColorUNet, ColorUNetConfig
from colorunet.video import SmoothingSpec, TemporalSmoother, smooth


def random_probs(seed, count=6, shape=(3, 4), n=5):
    rng = np.random.default_rng(seed)
    seq = rng.random((count,) + shape + (n,))
    return list(seq / seq.sum(-1, keepdims=True))


def test_two_frame_oracle():
    p0 = np.array([1.0, 0.0])
    p1 = np.array([0.0, 1.0])
    out = smooth([p0, p1], SmoothingSpec(20, 0.2))
    a = math.exp(-0.2)
    np.testing.assert_allclose(out[1], [a / (1 + a), 1 / (1 + a)], atol=1e-12)
    np.testing.assert_allclose(out[1], [0.4502, 0.5498], atol=1e-4)
    np.testing.assert_array_equal(out[0], p0)


def test_constant_is_fixed_point():
    p = random_probs(0, 1)[0]
    for q in smooth([p] * 8):
        np.testing.assert_allclose(q, p, atol=1e-12)


def test_large_alpha_is_identity():
    seq = random_probs(1)
    for q, p in zip(smooth(seq, SmoothingSpec(20, 1e6)), seq):
        np.testing.assert_allclose(q, p, atol=1e-6)


def test_alpha_zero_running_mean():
    seq = random_probs(2)
    out = smooth(seq, SmoothingSpec(window=len(seq), alpha=0.0))
    for t, q in enumerate(out):
        np.testing.assert_allclose(q, np.mean(seq[:t + 1], axis=0), atol=1e-12)


def test_window_truncates():
    seq = random_probs(3, count=5)
    out = smooth(seq, SmoothingSpec(window=1, alpha=0.5))
    a = math.exp(-0.5)
    expected = seq[4] + a * seq[3]
    np.testing.assert_allclose(out[4], expected / expected.sum(-1, keepdims=True), atol=1e-12)


def test_causal_and_normalized():
    seq = random_probs(4)
    base = smooth(seq)
    changed = list(seq)
    changed[4] = random_probs(99, 1)[0]
    again = smooth(changed)
    for t in range(4):
        np.testing.assert_array_equal(base[t], again[t])
    for q in base:
        np.testing.assert_allclose(q.sum(-1), 1, atol=1e-12)


def test_linear_before_normalization():
    a, b = random_probs(5), random_probs(6)
    spec = SmoothingSpec(3, 0.3)
    decay = np.exp(-0.3 * np.arange(4))

    def raw(seq, t):
        return sum(decay[i] * seq[t - i] for i in range(min(t, 3) + 1))

    sup = [0.3 * x + 0.7 * y for x, y in zip(a, b)]
    out = smooth(sup, spec)
    for t in range(len(a)):
        r = 0.3 * raw(a, t) + 0.7 * raw(b, t)
        np.testing.assert_allclose(out[t], r / r.sum(-1, keepdims=True), atol=1e-12)


def test_spec_and_shape_checks():
    with pytest.raises(ValueError):
        SmoothingSpec(window=-1)
    with pytest.raises(ValueError):
        SmoothingSpec(alpha=-0.1)
    s = TemporalSmoother()
    s.push(np.full((2, 2, 3), 1 / 3))
    with pytest.raises(ValueError):
        s.push(np.full((3, 2, 3), 1 / 3))


def test_buffer_bounded():
    s = TemporalSmoother(SmoothingSpec(window=3))
    for p in random_probs(7, count=10):
        s.push(p)
    assert len(s._buf) == 4


@pytest.fixture(scope="module")
def trained_tiny():
    model = ColorUNet(ColorUNetConfig(base_filters=2, num_classes=16), seed=0)
    model.forward(np.random.default_rng(0).random((2, 1, 16, 16)), training=True)
    return model


def test_single_frame_matches_still(trained_tiny, fitted):
    y = np.random.default_rng(1).random((16, 16))
    out = video.colorize_sequence([y], trained_tiny, fitted, 0.4)
    still = colorize(y, trained_tiny.predict_proba(y[None])[0], 0.4, fitted)
    np.testing.assert_allclose(out[0], still, atol=1e-12)


def test_repeated_frames_identical(trained_tiny, fitted):
    y = np.random.default_rng(2).random((16, 16))
    out = video.colorize_sequence([y] * 3, trained_tiny, fitted)
    for f in out[1:]:
        np.testing.assert_allclose(f, out[0], atol=1e-12)


def test_smoothing_reduces_flicker(trained_tiny, fitted):
    rng = np.random.default_rng(3)
    base = rng.random((16, 16))
    frames = [np.clip(base + rng.normal(0, 0.05, base.shape), 0, 1) for _ in range(8)]
    res = video.colorize_sequence_detailed(frames, trained_tiny, fitted)
    rows = video.stability_report(res.raw_uv, res.uv)
    assert len(rows) == 7
    for r in rows:
        assert r["smoothed_tv"] <= r["raw_tv"]


def test_stability_report_cases():
    const = [np.ones((2, 2, 2))] * 3
    rows = video.stability_report(const, const)
    assert all(r["raw_tv"] == 0 and r["smoothed_tv"] == 0 for r in rows)
    seq = [np.random.default_rng(i).random((2, 2, 2)) for i in range(3)]
    rows = video.stability_report(seq, seq)
    assert all(r["raw_tv"] == r["smoothed_tv"] for r in rows)
    with pytest.raises(ValueError):
        video.stability_report(seq, seq[:2])


def test_check_frames():
    with pytest.raises(ValueError):
        video.check_frames([])
    with pytest.raises(ValueError):
        video.check_frames([np.zeros((8, 8)), np.zeros((16, 8))])
    with pytest.raises(ValueError):
        video.check_frames([np.zeros((12, 8))])
