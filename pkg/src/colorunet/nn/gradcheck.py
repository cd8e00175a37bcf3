"""Central finite-difference gradient verification.

Run in float64: single precision cannot resolve the difference quotients.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


def numerical_gradient(f: Callable[[], float], arr: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """d f / d arr by central differences, perturbing ``arr`` in place."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f()
        flat[i] = orig - step
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-12) -> float:
    """``||a - n|| / max(||a||, ||n||, floor)``.

    The floor keeps gradients that are identically zero (a bias feeding a
    batchnorm, say) from turning finite-difference roundoff into a large ratio.
    """
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: dict[str, Tensor],
    seed: int = 0,
    step: float = 1e-5,
) -> dict[str, float]:
    """Compare backprop against finite differences for every tensor in ``inputs``.

    ``fn`` must rebuild the graph from the current ``inputs`` data on each
    call. A fixed random projection of its output serves as the scalar loss.
    Returns the relative error per input name, with the norm floor set to
    1e-6 of the largest analytic gradient norm among the inputs.
    """
    out = fn()
    proj = np.random.default_rng(seed).standard_normal(out.shape)
    for t in inputs.values():
        t.grad = None
    out.backward(proj.astype(out.dtype))
    analytic = {k: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data)) for k, t in inputs.items()}

    def scalar():
        return float(np.sum(fn().data * proj))

    floor = 1e-6 * max((np.linalg.norm(g) for g in analytic.values()), default=0.0)
    floor = max(floor, 1e-12)
    return {
        k: relative_error(analytic[k], numerical_gradient(scalar, t.data, step), floor)
        for k, t in inputs.items()
    }
