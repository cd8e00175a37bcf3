"""Two-phase Adam training loop with CSV logging and checkpoints."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .datapipe import Sample
from .errors import ConfigError, DataError, NumericalError
from .model import ColorUNet
from .nn import serialize
from .nn.functional import weighted_masked_cross_entropy
from .nn.optim import Adam
from .nn.tensor import no_grad

log = logging.getLogger(__name__)

LOG_COLUMNS = ("iter", "phase", "lr", "train_loss", "val_loss")


@dataclass(frozen=True)
class Schedule:
    """Phase 1 runs ``steps1`` iterations at ``lr1``, then phase 2 runs
    ``steps2`` at the lower ``lr2``."""

    lr1: float = 1e-3
    lr2: float = 1e-4
    steps1: int = 150
    steps2: int = 50

    def __post_init__(self):
        if self.steps1 < 0 or self.steps2 < 0:
            raise ConfigError("phase lengths must be nonnegative")
        if self.lr1 < 0 or self.lr2 < 0:
            raise ConfigError("learning rates must be nonnegative")

    @classmethod
    def for_total(cls, total: int, lr1: float = 1e-3, lr2: float = 1e-4, decay_at: float = 0.75) -> Schedule:
        steps1 = int(round(total * decay_at))
        return cls(lr1, lr2, steps1, total - steps1)

    @property
    def total(self) -> int:
        return self.steps1 + self.steps2

    def at(self, iteration: int) -> tuple[int, float]:
        """(phase, lr) for a 1-based iteration number."""
        return (1, self.lr1) if iteration <= self.steps1 else (2, self.lr2)


@dataclass
class TrainResult:
    rows: list[dict] = field(default_factory=list)

    @property
    def train_losses(self) -> np.ndarray:
        return np.array([r["train_loss"] for r in self.rows])

    @property
    def val_losses(self) -> np.ndarray:
        return np.array([r["val_loss"] for r in self.rows if r["val_loss"] is not None])


def stack_batch(samples: Sequence[Sample], dtype=np.float32):
    y = np.stack([s.y for s in samples]).astype(dtype)[:, None]
    labels = np.stack([s.labels for s in samples])
    mask = np.stack([s.mask for s in samples])
    return y, labels, mask


def batch_order(n: int, batch_size: int, iterations: int, rng: np.random.Generator):
    """Index batches drawn from consecutive shuffled epochs."""
    bs = min(batch_size, n)
    stream: list[int] = []
    for _ in range(iterations):
        while len(stream) < bs:
            stream.extend(rng.permutation(n).tolist())
        yield stream[:bs]
        del stream[:bs]


def evaluate(model: ColorUNet, samples: Sequence[Sample], weights, batch_size: int = 8) -> float:
    """Eval-mode loss over ``samples``, pooled by total pixel weight."""
    num = den = 0.0
    w = np.asarray(weights, dtype=np.float64)
    with no_grad():
        for start in range(0, len(samples), batch_size):
            y, labels, mask = stack_batch(samples[start:start + batch_size], model.dtype)
            valid = mask > 0
            if not valid.any():
                continue
            logits = model.forward(y, training=False)
            loss = weighted_masked_cross_entropy(logits, labels, mask, w).item()
            part = float((w[np.where(valid, labels, 0)] * valid).sum())
            num += loss * part
            den += part
    if den == 0:
        raise DataError("validation set has no unmasked pixels")
    return num / den


def save_adam(path, opt: Adam, echo=()) -> None:
    st = opt.state
    tensors = {"adam.hyper": np.array([st.lr, st.beta1, st.beta2, st.eps]),
               "adam.step": np.array([st.step], dtype=np.float64)}
    for name in st.m:
        tensors[f"adam.m.{name}"] = st.m[name]
        tensors[f"adam.v.{name}"] = st.v[name]
    serialize.save(path, tensors, echo)


def load_adam(path, opt: Adam) -> None:
    tensors, _ = serialize.load(path)
    st = opt.state
    st.lr, st.beta1, st.beta2, st.eps = (float(v) for v in tensors["adam.hyper"])
    st.step = int(tensors["adam.step"][0])
    for name in st.m:
        st.m[name][...] = tensors[f"adam.m.{name}"]
        st.v[name][...] = tensors[f"adam.v.{name}"]


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_log(path, rows, preamble: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if preamble:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in preamble.items()) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        for r in rows:
            writer.writerow([r["iter"], r["phase"], _fmt(r["lr"]), _fmt(r["train_loss"]), _fmt(r["val_loss"])])


def train(
    model: ColorUNet,
    samples: Sequence[Sample],
    weights,
    schedule: Schedule | None = None,
    batch_size: int = 8,
    seed: int = 0,
    val_samples: Sequence[Sample] = (),
    val_every: int = 0,
    checkpoint_dir=None,
    checkpoint_every: int = 0,
    on_step: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Run the schedule and return the per-iteration loss log.

    ``train_loss`` is the weighted cross-entropy of the batch before that
    iteration's update. Validation runs every ``val_every`` iterations and on
    the last one when a validation set is given. A non-finite loss raises
    :class:`NumericalError`; checkpoints already on disk are left untouched.
    """
    schedule = schedule or Schedule()
    if not samples:
        raise DataError("training set is empty")
    if batch_size < 1:
        raise ConfigError("batch_size must be positive")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (model.config.num_classes,):
        raise ConfigError(
            f"{weights.size} class weights for a model with {model.config.num_classes} classes"
        )

    params = model.parameters()
    opt = Adam(params, lr=schedule.lr1)
    rng = np.random.default_rng(seed)
    result = TrainResult()
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if ckpt_dir is not None:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    def checkpoint():
        if ckpt_dir is not None:
            model.save(ckpt_dir / "checkpoint.cunw")
            save_adam(ckpt_dir / "checkpoint.adam", opt, model.config.echo())

    for it, idx in enumerate(batch_order(len(samples), batch_size, schedule.total, rng), start=1):
        phase, lr = schedule.at(it)
        opt.lr = lr
        y, labels, mask = stack_batch([samples[i] for i in idx], model.dtype)
        opt.zero_grad()
        loss = weighted_masked_cross_entropy(model.forward(y, training=True), labels, mask, weights)
        value = loss.item()
        if not math.isfinite(value):
            raise NumericalError(f"non-finite training loss at iteration {it}")
        loss.backward()
        opt.step()

        val = None
        if val_samples and ((val_every and it % val_every == 0) or it == schedule.total):
            val = evaluate(model, val_samples, weights, batch_size)
        row = {"iter": it, "phase": phase, "lr": lr, "train_loss": value, "val_loss": val}
        result.rows.append(row)
        if on_step is not None:
            on_step(row)
        if it % 25 == 0 or it == schedule.total:
            log.info("iter %d phase %d lr %.2e loss %.4f%s", it, phase, lr, value,
                     "" if val is None else f" val {val:.4f}")
        if (checkpoint_every and it % checkpoint_every == 0) or it == schedule.steps1 or it == schedule.total:
            checkpoint()
    return result
