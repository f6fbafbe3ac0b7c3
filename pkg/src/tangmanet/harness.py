"""Training loop, evaluation, and metric/parameter-trace export.

A run is fully determined by its :class:`RunConfig` seed: model init,
the optional subset draw, per-epoch shuffles, and dropout masks all
derive from it, so two identical configs produce bit-identical metrics
(wall-clock timings aside).

During Tangma runs the scalars (alpha, gamma) are sampled at configured
batch indices within each epoch; by default at batches 130 and 260, or
at the epoch midpoint and final batch when an epoch is shorter than
that.
"""

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .activations import ActivationKind
from .data import SplitSpec, batches, load_cifar10_binary, load_mnist_csv, split, synthetic_dataset
from .losses import cross_entropy, predict
from .models import ModelSpec, build_model
from .optim import Adam
from .tensor import zero_grads

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "TANGMANET_DATA_DIR"
DEFAULT_TRACE_BATCHES = (130, 260)


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss and was aborted."""


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float  # percent
    epoch_time_s: float


@dataclass
class ParamTraceRecord:
    epoch: int
    batch: int
    alpha: float
    gamma: float


@dataclass
class RunConfig:
    dataset: str = "mnist"
    activation: str = "tangma"
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 0.001
    seed: int = 0
    train_fraction: float = 0.8
    subset: int | None = None
    mnist_csv: str | None = None
    cifar_dir: str | None = None
    data_dir: str | None = None
    output_dir: str | None = None
    trace_batches: tuple | None = None
    synthetic_size: int = 10000
    synthetic_shape: str = "mnist"
    eval_batch_size: int = 512

    def __post_init__(self):
        if self.dataset not in ("mnist", "cifar10", "synthetic"):
            raise ValueError(f"dataset must be mnist, cifar10 or synthetic, got {self.dataset!r}")
        self.activation = ActivationKind.from_name(self.activation).value
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if self.subset is not None and self.subset < 2:
            raise ValueError(f"subset must allow a train/val split, got {self.subset}")
        if self.synthetic_shape not in ("mnist", "cifar"):
            raise ValueError(f"synthetic shape must be 'mnist' or 'cifar', got {self.synthetic_shape!r}")
        if self.trace_batches is not None:
            self.trace_batches = tuple(int(b) for b in self.trace_batches)
            if any(b < 1 for b in self.trace_batches) or list(self.trace_batches) != sorted(self.trace_batches):
                raise ValueError("trace batch indices must be positive and ascending")

    def resolve_data_dir(self):
        return Path(self.data_dir or os.environ.get(DATA_DIR_ENV, "data"))

    @property
    def architecture(self):
        if self.dataset == "synthetic":
            return "mnist" if self.synthetic_shape == "mnist" else "cifar10"
        return self.dataset


@dataclass
class TrainResult:
    records: list
    traces: list
    model: object
    batch_losses: list = field(default_factory=list)  # one list per epoch

    def final(self):
        return self.records[-1]


def load_dataset(cfg):
    """Load the configured dataset (pooled, before any split)."""
    if cfg.dataset == "mnist":
        path = Path(cfg.mnist_csv) if cfg.mnist_csv else cfg.resolve_data_dir() / "mnist_train.csv"
        return load_mnist_csv(path)
    if cfg.dataset == "cifar10":
        path = Path(cfg.cifar_dir) if cfg.cifar_dir else cfg.resolve_data_dir() / "cifar-10-batches-bin"
        return load_cifar10_binary(path)
    return synthetic_dataset(cfg.synthetic_size, seed=cfg.seed, shape=cfg.synthetic_shape)


def _resolve_traces(cfg, n_batches):
    """Trace indices for an epoch of ``n_batches``; oversized user
    indices are skipped with a notice, defaults shrink to fit."""
    if cfg.trace_batches is not None:
        keep = [b for b in cfg.trace_batches if b <= n_batches]
        dropped = [b for b in cfg.trace_batches if b > n_batches]
        if dropped:
            logger.warning(
                "trace batches %s exceed the %d batches per epoch; skipping them",
                dropped, n_batches,
            )
        return keep
    if n_batches >= DEFAULT_TRACE_BATCHES[-1]:
        return list(DEFAULT_TRACE_BATCHES)
    return sorted({max(1, n_batches // 2), n_batches})


def train_run(cfg, dataset=None):
    """Train one model per ``cfg`` and return records, traces and model.

    ``dataset`` may be passed to reuse an already-loaded pool (the
    comparison runner shares one pool across all four activations).
    """
    data = dataset if dataset is not None else load_dataset(cfg)

    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    if cfg.subset is not None and cfg.subset < len(data):
        pick = np.random.default_rng(seeds[0]).choice(len(data), size=cfg.subset, replace=False)
        data = data.take(np.sort(pick))
    dropout_rng = np.random.default_rng(seeds[1])

    train_set, val_set = split(data, SplitSpec(cfg.train_fraction, cfg.seed))
    n_batches = math.ceil(len(train_set) / cfg.batch_size)
    trace_at = set(_resolve_traces(cfg, n_batches))

    model = build_model(ModelSpec(cfg.architecture, cfg.activation, seed=cfg.seed))
    params = model.parameters()
    optimizer = Adam(params, lr=cfg.learning_rate)
    is_tangma = model.tangma_params is not None

    records, traces, all_losses = [], [], []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        losses = []
        for bi, (xb, yb) in enumerate(batches(train_set, cfg.batch_size, shuffle=True,
                                              seed=cfg.seed, epoch=epoch), start=1):
            zero_grads(params.values())
            logits = model.forward(xb, mode="train", rng=dropout_rng)
            loss = cross_entropy(logits, yb)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss {value} at epoch {epoch}, batch {bi} "
                    f"({cfg.dataset}/{cfg.activation}, lr={cfg.learning_rate}, seed={cfg.seed})"
                )
            loss.backward()
            optimizer.step()
            losses.append(value)
            if is_tangma and bi in trace_at:
                alpha, gamma = model.tangma_params.values()
                traces.append(ParamTraceRecord(epoch, bi, alpha, gamma))

        val_loss, val_acc = evaluate(model, val_set, cfg.eval_batch_size)
        elapsed = time.perf_counter() - t0
        records.append(EpochRecord(epoch, float(np.mean(losses)), val_loss, val_acc, elapsed))
        all_losses.append(losses)
        logger.info(
            "epoch %d/%d  train_loss=%.4f  val_loss=%.4f  val_acc=%.2f%%  (%.1fs)",
            epoch, cfg.epochs, records[-1].train_loss, val_loss, val_acc, elapsed,
        )

    return TrainResult(records, traces, model, all_losses)


def evaluate(model, dataset, batch_size=512):
    """Eval-mode pass over the whole dataset.

    Returns (sample-weighted mean loss, accuracy in percent).
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    total_loss = 0.0
    correct = 0
    for xb, yb in batches(dataset, batch_size):
        logits = model.forward(xb, mode="eval")
        total_loss += float(cross_entropy(logits, yb).data) * len(yb)
        correct += int((predict(logits) == yb).sum())
    n = len(dataset)
    return total_loss / n, 100.0 * correct / n


def export_metrics(records, traces, out_dir):
    """Write metrics.csv (always) and params.csv (Tangma runs only).

    Values are fixed to 4 decimal places; files are UTF-8 with LF line
    endings.  Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    metrics_path = out_dir / "metrics.csv"
    with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss", "val_accuracy", "epoch_time_s"])
        for r in records:
            writer.writerow([r.epoch, f"{r.train_loss:.4f}", f"{r.val_loss:.4f}",
                             f"{r.val_accuracy:.4f}", f"{r.epoch_time_s:.4f}"])
    written.append(metrics_path)

    if traces:
        params_path = out_dir / "params.csv"
        with open(params_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "batch", "alpha", "gamma"])
            for t in traces:
                writer.writerow([t.epoch, t.batch, f"{t.alpha:.4f}", f"{t.gamma:.4f}"])
        written.append(params_path)

    return written
