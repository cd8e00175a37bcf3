"""Compare the numba and numpy kernel backends.

Times each hot kernel on training-sized inputs, then one full training step
(forward, loss, backward, Adam) of the default ColorUNet at 8x64x64.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--step-repeat 3]
"""

import argparse
import time

import numpy as np

from colorunet import _kernels
from colorunet.model import ColorUNet
from colorunet.nn.functional import weighted_masked_cross_entropy
from colorunet.nn.optim import Adam


def best_of(fn, repeat):
    fn()  # warm-up (triggers JIT compilation on the numba path)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    x = rng.standard_normal((8, 32, 64, 64)).astype(np.float32)
    cols = rng.standard_normal((8, 32 * 9, 32 * 32)).astype(np.float32)
    pooled, idx = _kernels.maxpool2x2(x)
    u = rng.uniform(-0.4, 0.4, 8 * 256 * 256)
    v = rng.uniform(-0.6, 0.6, 8 * 256 * 256)
    means = rng.uniform(-0.4, 0.4, (32, 2))
    return {
        "im2col s1 8x32x64x64": lambda: _kernels.im2col(x, 1, 1, 64, 64),
        "col2im s2 -> 64x64": lambda: _kernels.col2im(cols, 64, 64, 2, 1, 32, 32),
        "maxpool2x2 8x32x64x64": lambda: _kernels.maxpool2x2(x),
        "maxpool backward": lambda: _kernels.maxpool2x2_backward(pooled, idx),
        "nearest_bin 524k px, n=32": lambda: _kernels.nearest_bin(u, v, means),
    }


def train_step_case(rng):
    model = ColorUNet(seed=0)
    opt = Adam(model.parameters())
    y = rng.random((8, 1, 64, 64)).astype(np.float32)
    labels = rng.integers(0, 32, (8, 64, 64))
    mask = np.ones((8, 64, 64))
    weights = np.ones(32)

    def step():
        opt.zero_grad()
        loss = weighted_masked_cross_entropy(model.forward(y), labels, mask, weights)
        loss.backward()
        opt.step()

    return step


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--step-repeat", type=int, default=3)
    args = ap.parse_args()

    backends = _kernels.BACKENDS if _kernels.HAS_NUMBA else ("numpy",)
    results = {}
    for name in backends:
        prev = _kernels.set_backend(name)
        try:
            rng = np.random.default_rng(0)
            for label, fn in kernel_cases(rng).items():
                results[(label, name)] = best_of(fn, args.repeat)
            results[("train step 8x64x64", name)] = best_of(train_step_case(rng), args.step_repeat)
        finally:
            _kernels.set_backend(prev)

    labels = list(dict.fromkeys(k[0] for k in results))
    print(f"{'case':30s}" + "".join(f"{b:>12s}" for b in backends) + ("   speedup" if len(backends) == 2 else ""))
    for label in labels:
        row = [results[(label, b)] for b in backends]
        line = f"{label:30s}" + "".join(f"{t * 1e3:10.2f}ms" for t in row)
        if len(row) == 2:
            line += f"   {row[1] / row[0]:6.2f}x"
        print(line)


if __name__ == "__main__":
    main()
