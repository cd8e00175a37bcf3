"""Command-line entry point.

Subcommands: fit-discretizer, train, colorize, colorize-video, analyze.

Options resolve as command-line flags > ``--config`` file > built-in defaults.
The config file holds ``key = value`` lines (``#`` comments allowed); keys are
the long flag names with or without the leading dashes. A run manifest written
by a previous invocation is accepted as a config file too.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import platform
import re
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__, _kernels
from . import discretizer as dz
from .colorspace import luminance, rgb_to_yuv, to_uint8
from .datapipe import (
    AugmentationSpec,
    build_samples,
    load_and_fit,
    read_rgb,
    scan_images,
    split,
    write_split,
)
from .decoder import (
    DEFAULT_TEMPERATURE,
    color_histogram,
    colorize,
    confidence,
    render_confidence,
)
from .errors import ConfigError, DataError, NumericalError
from .model import ColorUNet, ColorUNetConfig
from .train import LOG_COLUMNS, Schedule, train, write_log
from .video import SmoothingSpec, colorize_sequence_detailed, stability_report

log = logging.getLogger("colorunet")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

FRAME_RE = re.compile(r"^frame_(\d{6})\.png$")

DEFAULTS = {
    "common": {"seed": 0, "threads": 0, "config": None, "verbose": False},
    "fit-discretizer": {
        "input": None, "output": None, "n": 32, "lam": dz.DEFAULT_LAMBDA,
        "grid_step": dz.DEFAULT_GRID_STEP, "val_fraction": 0.1, "frame": 256,
    },
    "train": {
        "input": None, "discretizer": None, "output": None, "augment": True, "frame": 256,
        "batch_size": 8, "lr1": 1e-3, "lr2": 1e-4, "phase1_steps": 150, "phase2_steps": 50,
        "val_fraction": 0.1, "val_every": 10, "checkpoint_every": 50, "base_filters": 32,
        "noise_low": 0.02, "noise_high": 0.05,
    },
    "colorize": {
        "input": None, "checkpoint": None, "discretizer": None, "output": None,
        "temperature": None, "confidence": False, "histogram": False,
    },
    "colorize-video": {
        "input": None, "checkpoint": None, "discretizer": None, "output": None,
        "temperature": DEFAULT_TEMPERATURE, "window": 20, "alpha": 0.2,
    },
    "analyze": {
        "log": None, "output": None, "discretizer": None, "checkpoint": None, "input": None,
        "temperature": DEFAULT_TEMPERATURE, "frame": 256,
    },
}

REQUIRED = {
    "fit-discretizer": ("input", "output"),
    "train": ("input", "discretizer", "output"),
    "colorize": ("input", "checkpoint", "discretizer", "output"),
    "colorize-video": ("input", "checkpoint", "discretizer", "output"),
    "analyze": ("log", "output"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _temperatures(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colorunet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"colorunet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="BLAS thread cap (numba kernels are serial); 0 leaves the default")
        p.add_argument("--verbose", action=argparse.BooleanOptionalAction)
        return p

    p = command("fit-discretizer", "fit the chrominance codebook on the training split")
    p.add_argument("--input", help="image directory")
    p.add_argument("--output", help="discretizer file to write (.cdsc)")
    p.add_argument("--n", type=int, help="number of bins (default 32)")
    p.add_argument("--lambda", dest="lam", type=float, help="rebalancing parameter in [0, 1]")
    p.add_argument("--grid-step", type=float)
    p.add_argument("--val-fraction", type=float, help="held-out fraction; 0 uses every image")
    p.add_argument("--frame", type=int)

    p = command("train", "train a ColorUNet")
    p.add_argument("--input", help="image directory")
    p.add_argument("--discretizer")
    p.add_argument("--output", help="run directory")
    p.add_argument("--augment", action=argparse.BooleanOptionalAction)
    p.add_argument("--frame", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr1", type=float)
    p.add_argument("--lr2", type=float)
    p.add_argument("--phase1-steps", type=int)
    p.add_argument("--phase2-steps", type=int)
    p.add_argument("--val-fraction", type=float)
    p.add_argument("--val-every", type=int)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--base-filters", type=int)
    p.add_argument("--noise-low", type=float)
    p.add_argument("--noise-high", type=float)

    p = command("colorize", "colorize grayscale images")
    p.add_argument("--input", help="image file or directory")
    p.add_argument("--checkpoint")
    p.add_argument("--discretizer")
    p.add_argument("--output", help="output directory")
    p.add_argument("--temperature", type=_temperatures, action="extend",
                   help="annealing temperature(s); repeat or comma-separate")
    p.add_argument("--confidence", action=argparse.BooleanOptionalAction)
    p.add_argument("--histogram", action=argparse.BooleanOptionalAction)

    p = command("colorize-video", "colorize a frame_%%06d.png directory with temporal smoothing")
    p.add_argument("--input")
    p.add_argument("--checkpoint")
    p.add_argument("--discretizer")
    p.add_argument("--output")
    p.add_argument("--temperature", type=float)
    p.add_argument("--window", type=int, help="smoothing window in frames (default 20)")
    p.add_argument("--alpha", type=float, help="per-frame decay exponent (default 0.2)")

    p = command("analyze", "loss curves and color histograms")
    p.add_argument("--log", help="training log CSV")
    p.add_argument("--output")
    p.add_argument("--discretizer")
    p.add_argument("--checkpoint")
    p.add_argument("--input", help="images for the ground-truth vs predicted histograms")
    p.add_argument("--temperature", type=float)
    p.add_argument("--frame", type=int)
    return parser


# -- configuration --------------------------------------------------------------


def _coerce(action: argparse.Action, raw: str):
    if isinstance(action, argparse.BooleanOptionalAction):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean for {action.dest}, got {raw!r}")
    if action.type is None:
        return raw
    try:
        return action.type(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {action.dest}") from None


def read_config_file(path, subparser: argparse.ArgumentParser) -> dict:
    actions = {}
    for a in subparser._actions:
        if not a.option_strings:
            continue
        actions[a.dest] = a
        for opt in a.option_strings:
            actions[opt.lstrip("-").replace("-", "_")] = a
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        return _config_from_manifest(path, text, actions)
    lines = text.splitlines()
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in actions or key == "config":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[actions[key].dest] = _coerce(actions[key], value)
    return out


def _config_from_manifest(path, text: str, actions: dict) -> dict:
    """A run manifest doubles as a config file, so any run can be replayed."""
    try:
        doc = json.loads(text)["config"]
    except (ValueError, KeyError, TypeError):
        raise ConfigError(f"{path}: not a run manifest (no 'config' object)") from None
    out = {}
    for key, value in doc.items():
        if key == "config":
            continue
        if key not in actions:
            raise ConfigError(f"{path}: unknown key {key!r}")
        out[actions[key].dest] = value
    return out


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    cmd = args.command
    cfg = {**DEFAULTS["common"], **DEFAULTS[cmd]}
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[cmd]
        cfg.update(read_config_file(args.config, sub))
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k != "command"})
    cfg["command"] = cmd
    missing = [k for k in REQUIRED[cmd] if not cfg.get(k)]
    if missing:
        raise ConfigError(f"{cmd}: missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg["threads"] >= 0, "--threads must be >= 0")
    if "n" in cfg:
        need(cfg["n"] >= 1, "--n must be >= 1")
    if "lam" in cfg:
        need(0.0 <= cfg["lam"] <= 1.0, "--lambda must lie in [0, 1]")
    if "grid_step" in cfg:
        need(cfg["grid_step"] > 0, "--grid-step must be positive")
    if "val_fraction" in cfg:
        need(0.0 <= cfg["val_fraction"] < 1.0, "--val-fraction must lie in [0, 1)")
    if "frame" in cfg:
        need(cfg["frame"] >= 8 and cfg["frame"] % 8 == 0, "--frame must be a positive multiple of 8")
    if cfg["command"] == "train":
        need(cfg["batch_size"] >= 1, "--batch-size must be >= 1")
        need(cfg["phase1_steps"] >= 0 and cfg["phase2_steps"] >= 0, "phase lengths must be >= 0")
        need(cfg["phase1_steps"] + cfg["phase2_steps"] >= 1, "at least one training iteration is required")
        need(cfg["lr1"] >= 0 and cfg["lr2"] >= 0, "learning rates must be >= 0")
        need(cfg["base_filters"] >= 1, "--base-filters must be >= 1")
    if cfg["command"] == "colorize":
        cfg["temperature"] = cfg["temperature"] or [DEFAULT_TEMPERATURE]
        need(all(t > 0 for t in cfg["temperature"]), "temperatures must be positive")
    elif "temperature" in cfg:
        need(cfg["temperature"] > 0, "--temperature must be positive")
    if cfg["command"] == "colorize-video":
        need(cfg["window"] >= 0, "--window must be >= 0")
        need(cfg["alpha"] >= 0, "--alpha must be >= 0")


def _versions() -> dict:
    import PIL

    try:
        import numba

        numba_version = numba.__version__
    except ImportError:  # pragma: no cover
        numba_version = None
    return {
        "colorunet": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba_version,
        "pillow": PIL.__version__,
        "kernel_backend": _kernels.get_backend(),
    }


def write_manifest(out_dir, cfg: dict, extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg["command"].replace("-", "_") + "_manifest.json"
    doc = {"command": cfg["command"], "seed": cfg["seed"],
           "config": {k: v for k, v in cfg.items() if k != "command"},
           "versions": _versions()}
    if extra:
        doc.update(extra)
    path = out_dir / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


@contextlib.contextmanager
def thread_limit(n: int):
    if n <= 0:
        yield
        return
    from threadpoolctl import threadpool_limits

    # the numba kernels are serial; BLAS is the only threaded code
    with threadpool_limits(limits=n):
        yield


# -- image helpers ------------------------------------------------------------------


def read_luminance(path) -> np.ndarray:
    """Grayscale files give their gray level; color files their luminance."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "I;16", "I", "F"):
                arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
                return arr
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from None
    return luminance(read_rgb(path) / 255.0)


def pad_to_multiple(y: np.ndarray, k: int) -> np.ndarray:
    h, w = y.shape
    return np.pad(y, ((0, -h % k), (0, -w % k)))


def write_png(path, rgb: np.ndarray) -> None:
    Image.fromarray(to_uint8(rgb)).save(path, format="PNG")


def _load_model_and_codebook(cfg):
    d = dz.load(cfg["discretizer"])
    model = ColorUNet.load(cfg["checkpoint"])
    if model.config.num_classes != d.n:
        raise ConfigError(f"checkpoint predicts {model.config.num_classes} classes, discretizer has {d.n}")
    return model, d


def _predict(model: ColorUNet, y: np.ndarray) -> np.ndarray:
    """Probabilities (H, W, n) for a luminance plane of any size."""
    h, w = y.shape
    probs = model.predict_proba(pad_to_multiple(y, model.config.divisor)[None])[0]
    return probs[:h, :w]


def _bins_csv(path, d, columns: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_index", "mean_u", "mean_v", *columns])
        for i in range(d.n):
            writer.writerow([i, repr(float(d.bin_mean[i, 0])), repr(float(d.bin_mean[i, 1])),
                             *(repr(float(col[i])) for col in columns.values())])


# -- subcommands ----------------------------------------------------------------------


def _split_paths(cfg):
    paths = scan_images(cfg["input"])
    if not paths:
        raise DataError(f"no PNG/JPEG images under {cfg['input']}")
    if cfg["val_fraction"] == 0:
        return paths, []
    return split(paths, cfg["val_fraction"], cfg["seed"])


def cmd_fit_discretizer(cfg) -> int:
    out = Path(cfg["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    train_paths, val_paths = _split_paths(cfg)
    fitter = dz.DiscretizerFitter(dz.BinGrid(step=cfg["grid_step"]))
    for path in train_paths:
        img, mask = load_and_fit(path, cfg["frame"])
        fitter.update(rgb_to_yuv(img), mask)
    d = fitter.finalize(cfg["n"], cfg["lam"])
    dz.save(d, out)
    report = out.with_name(out.stem + "_bins.csv")
    with open(report, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_index", "cell_id", "mean_u", "mean_v", "frequency", "weight"])
        for i in range(d.n):
            writer.writerow([i, int(d.cell_ids[i]), repr(float(d.bin_mean[i, 0])), repr(float(d.bin_mean[i, 1])),
                             repr(float(d.freq[i])), repr(float(d.weight[i]))])
    write_split(train_paths, val_paths, out.parent)
    write_manifest(out.parent, cfg, {"train_images": len(train_paths), "val_images": len(val_paths),
                                     "occupied_cells": int(np.count_nonzero(fitter.counts))})
    log.info("fitted %d bins on %d images -> %s", d.n, len(train_paths), out)
    return EXIT_OK


def cmd_train(cfg) -> int:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    d = dz.load(cfg["discretizer"])
    train_paths, val_paths = _split_paths(cfg)
    write_split(train_paths, val_paths, out)
    aug = AugmentationSpec(noise_low=cfg["noise_low"], noise_high=cfg["noise_high"]) if cfg["augment"] else None
    samples = build_samples(train_paths, d, cfg["frame"], aug, cfg["seed"])
    val_samples = build_samples(val_paths, d, cfg["frame"])
    schedule = Schedule(cfg["lr1"], cfg["lr2"], cfg["phase1_steps"], cfg["phase2_steps"])
    model = ColorUNet(ColorUNetConfig(base_filters=cfg["base_filters"], num_classes=d.n), seed=cfg["seed"])
    preamble = {"train_images": len(train_paths), "train_samples": len(samples),
                "val_samples": len(val_samples), "augment": int(bool(cfg["augment"]))}
    rows = []
    log_path = out / "train_log.csv"

    def on_step(row):
        rows.append(row)
        if cfg["checkpoint_every"] and row["iter"] % cfg["checkpoint_every"] == 0:
            write_log(log_path, rows, preamble)

    try:
        train(model, samples, d.weight, schedule, cfg["batch_size"], cfg["seed"], val_samples,
              cfg["val_every"], out, cfg["checkpoint_every"], on_step)
    finally:
        write_log(log_path, rows, preamble)
    write_manifest(out, cfg, {"dataset": preamble, "parameters": model.num_parameters()})
    return EXIT_OK


def cmd_colorize(cfg) -> int:
    model, d = _load_model_and_codebook(cfg)
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    paths = scan_images(cfg["input"])
    if not paths:
        raise DataError(f"no PNG/JPEG images under {cfg['input']}")
    written = []
    for path in paths:
        y = read_luminance(path)
        probs = _predict(model, y)
        for t in cfg["temperature"]:
            dest = out / f"{path.stem}_T{t:g}.png"
            write_png(dest, colorize(y, probs, t, d))
            written.append(dest.name)
        if cfg["confidence"]:
            top1, ratio = render_confidence(confidence(probs), d.n)
            Image.fromarray(top1).save(out / f"{path.stem}_top1.png")
            Image.fromarray(ratio).save(out / f"{path.stem}_ratio.png")
            written += [f"{path.stem}_top1.png", f"{path.stem}_ratio.png"]
        if cfg["histogram"]:
            _bins_csv(out / f"{path.stem}_histogram.csv", d, {"frequency": color_histogram(probs, d.n)})
            written.append(f"{path.stem}_histogram.csv")
    write_manifest(out, cfg, {"outputs": written})
    return EXIT_OK


def read_frame_dir(path) -> list[Path]:
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"no such frame directory: {root}")
    frames = {}
    for p in root.iterdir():
        m = FRAME_RE.match(p.name)
        if m:
            frames[int(m.group(1))] = p
    if not frames:
        raise DataError(f"no frame_%06d.png files in {root}")
    missing = sorted(set(range(max(frames) + 1)) - set(frames))
    if missing:
        raise DataError("frame numbering has gaps; missing indices: " + ", ".join(map(str, missing)))
    return [frames[i] for i in range(len(frames))]


def cmd_colorize_video(cfg) -> int:
    model, d = _load_model_and_codebook(cfg)
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    paths = read_frame_dir(cfg["input"])
    ys = [read_luminance(p) for p in paths]
    h, w = ys[0].shape
    padded = [pad_to_multiple(y, model.config.divisor) for y in ys]
    spec = SmoothingSpec(window=cfg["window"], alpha=cfg["alpha"])
    try:
        result = colorize_sequence_detailed(padded, model, d, cfg["temperature"], spec)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    for i, rgb in enumerate(result.frames):
        write_png(out / f"frame_{i:06d}.png", rgb[:h, :w])
    rows = stability_report([u[:h, :w] for u in result.raw_uv], [u[:h, :w] for u in result.uv])
    with open(out / "stability.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["transition", "raw_tv", "smoothed_tv"])
        for r in rows:
            writer.writerow([r["transition"], repr(r["raw_tv"]), repr(r["smoothed_tv"])])
    write_manifest(out, cfg, {"frames": len(paths), "smoothing": {"window": spec.window, "alpha": spec.alpha}})
    return EXIT_OK


def read_log(path) -> list[dict]:
    """Parse a training log; malformed rows raise DataError naming the line."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read log {path}: {exc}") from None
    rows, header_seen = [], False
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if not header_seen:
            if tuple(fields) != LOG_COLUMNS:
                raise DataError(f"{path}:{lineno}: expected header {','.join(LOG_COLUMNS)}")
            header_seen = True
            continue
        if len(fields) != len(LOG_COLUMNS):
            raise DataError(f"{path}:{lineno}: expected {len(LOG_COLUMNS)} fields, got {len(fields)}")
        try:
            rows.append({
                "iter": int(fields[0]), "phase": int(fields[1]), "lr": float(fields[2]),
                "train_loss": float(fields[3]),
                "val_loss": float(fields[4]) if fields[4] else None,
            })
        except ValueError:
            raise DataError(f"{path}:{lineno}: malformed row {line!r}") from None
    if not rows:
        raise DataError(f"{path}: training log has no rows")
    return rows


def cmd_analyze(cfg) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    rows = read_log(cfg["log"])
    with open(out / "loss_curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "train_loss", "val_loss"])
        for r in rows:
            writer.writerow([r["iter"], repr(r["train_loss"]), "" if r["val_loss"] is None else repr(r["val_loss"])])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r["iter"] for r in rows], [r["train_loss"] for r in rows], color="tab:blue", label="train")
    val = [(r["iter"], r["val_loss"]) for r in rows if r["val_loss"] is not None]
    if val:
        ax.plot(*zip(*val), color="tab:red", marker="o", ms=3, label="validation")
    ax.set_xlabel("iteration")
    ax.set_ylabel("weighted cross-entropy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "loss_curve.png", dpi=100)
    plt.close(fig)

    extra = {"log_rows": len(rows)}
    if cfg["discretizer"]:
        d = dz.load(cfg["discretizer"])
        columns = {"codebook": d.freq / d.freq.sum()}
        if cfg["checkpoint"] and cfg["input"]:
            model, _ = _load_model_and_codebook(cfg)
            truth = np.zeros(d.n)
            pred = np.zeros(d.n)
            for path in scan_images(cfg["input"]):
                img, mask = load_and_fit(path, cfg["frame"])
                truth += color_histogram(dz.encode(rgb_to_yuv(img), d), d.n, mask) * mask.sum()
                probs = _predict(model, luminance(img))
                pred += color_histogram(np.argmax(probs, axis=-1), d.n, mask) * mask.sum()
            columns = {"ground_truth": truth / truth.sum(), "predicted": pred / pred.sum(), **columns}
        _bins_csv(out / "color_histograms.csv", d, columns)
        fig, axes = plt.subplots(len(columns), 1, figsize=(7, 2.2 * len(columns)), sharex=True)
        for ax, (name, col) in zip(np.atleast_1d(axes), columns.items()):
            ax.bar(np.arange(d.n), col)
            ax.set_ylabel(name.replace("_", " "))
        np.atleast_1d(axes)[-1].set_xlabel("bin")
        fig.tight_layout()
        fig.savefig(out / "color_histograms.png", dpi=100)
        plt.close(fig)
        extra["histogram_columns"] = list(columns)
    write_manifest(out, cfg, extra)
    return EXIT_OK


COMMANDS = {
    "fit-discretizer": cmd_fit_discretizer,
    "train": cmd_train,
    "colorize": cmd_colorize,
    "colorize-video": cmd_colorize_video,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args, parser)
    except ConfigError as exc:
        print(f"colorunet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if cfg["verbose"] else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with thread_limit(cfg["threads"]):
            return COMMANDS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"colorunet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"colorunet: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"colorunet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
