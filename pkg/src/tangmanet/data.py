"""Dataset loading, normalization, splitting, and batching.

Two on-disk formats are supported:

* MNIST as CSV: one sample per line, ``label,p0,...,p783`` with integer
  pixels 0-255 and an optional single header line.  Pixels are scaled
  to [0, 1].
* CIFAR-10 binary batches: 3073-byte records (label byte, then 1024 R +
  1024 G + 1024 B bytes, row-major).  Pixels are scaled to [0, 1] and
  then per-channel normalized to [-1, 1] via (x - 0.5) / 0.5.  All
  ``*.bin`` files in the directory are pooled into one dataset so the
  train/validation split is drawn from the full image pool.

A seeded synthetic dataset (class-separable Gaussian blobs rendered as
images) backs fast tests and desk-scale runs without the real files.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import Tensor


class DataFormatError(ValueError):
    """An input file does not match the documented layout."""


@dataclass
class Dataset:
    images: np.ndarray  # (N, C, H, W) float32
    labels: np.ndarray  # (N,) int64
    name: str

    def __len__(self):
        return self.images.shape[0]

    def take(self, indices):
        """New dataset holding the given sample indices (copying)."""
        idx = np.asarray(indices)
        return Dataset(self.images[idx], self.labels[idx], self.name)


@dataclass
class SplitSpec:
    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train fraction must lie in (0, 1), got {self.train_fraction}")


def load_mnist_csv(path):
    """Parse a label+784-pixel CSV into a normalized (N, 1, 28, 28) dataset."""
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    start = 0
    if lines and not _is_numeric_row(lines[0]):
        start = 1  # tolerate a single header line
    for lineno, line in enumerate(lines[start:], start + 1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 785:
            raise DataFormatError(
                f"{path}:{lineno}: expected 785 comma-separated values, got {len(fields)}"
            )
        try:
            row = np.array(fields, dtype=np.int64)
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-integer field in row") from None
        if row[1:].min() < 0 or row[1:].max() > 255:
            raise DataFormatError(f"{path}:{lineno}: pixel value outside [0, 255]")
        if not 0 <= row[0] <= 9:
            raise DataFormatError(f"{path}:{lineno}: label {row[0]} outside [0, 9]")
        rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    table = np.stack(rows)
    labels = table[:, 0].astype(np.int64)
    images = (table[:, 1:].astype(np.float32) / 255.0).reshape(-1, 1, 28, 28)
    return Dataset(images, labels, "mnist")


def _is_numeric_row(line):
    fields = line.split(",")
    try:
        [int(f) for f in fields[:4]]
    except ValueError:
        return False
    return True


def load_cifar10_binary(directory):
    """Pool every ``*.bin`` batch file in ``directory`` into one dataset."""
    directory = Path(directory)
    files = sorted(directory.glob("*.bin"))
    if not files:
        raise DataFormatError(f"{directory}: no CIFAR-10 .bin batch files found")
    images, labels = [], []
    for f in files:
        raw = np.frombuffer(f.read_bytes(), dtype=np.uint8)
        if raw.size == 0 or raw.size % 3073 != 0:
            raise DataFormatError(
                f"{f}: size {raw.size} is not a multiple of 3073-byte records"
            )
        records = raw.reshape(-1, 3073)
        labels.append(records[:, 0].astype(np.int64))
        images.append(records[:, 1:].reshape(-1, 3, 32, 32))
    labels = np.concatenate(labels)
    if labels.max() > 9:
        raise DataFormatError(f"{directory}: label byte {labels.max()} outside [0, 9]")
    pixels = np.concatenate(images).astype(np.float32) / 255.0
    pixels = (pixels - 0.5) / 0.5
    return Dataset(pixels, labels, "cifar10")


def split(dataset, spec):
    """Seeded permutation split: first floor(N*f) samples train, rest val."""
    n = len(dataset)
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = int(math.floor(n * spec.train_fraction))
    return dataset.take(perm[:n_train]), dataset.take(perm[n_train:])


def batches(dataset, batch_size, shuffle=False, seed=0, epoch=1):
    """Yield (Tensor image batch, label array) covering every sample once.

    Shuffle order derives from ``seed ^ epoch`` so each epoch reshuffles
    deterministically.  The final batch may be smaller.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = len(dataset)
    order = np.random.default_rng(seed ^ epoch).permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield Tensor(dataset.images[idx]), dataset.labels[idx]


def synthetic_dataset(n, classes=10, seed=0, shape="mnist"):
    """Class-separable Gaussian blobs rendered as image tensors.

    Each class gets a fixed random prototype pattern; samples are the
    prototype plus pixel noise, clipped into the dataset's value range.
    Separability is high enough that a linear classifier exceeds 90%
    train accuracy within a couple of epochs.
    """
    if shape == "mnist":
        dims, low = (1, 28, 28), 0.0
    elif shape == "cifar":
        dims, low = (3, 32, 32), -1.0
    else:
        raise ValueError(f"synthetic shape must be 'mnist' or 'cifar', got {shape!r}")

    rng = np.random.default_rng(seed)
    protos = rng.normal(size=(classes,) + dims)
    lo = protos.min(axis=(1, 2, 3), keepdims=True)
    hi = protos.max(axis=(1, 2, 3), keepdims=True)
    protos = (protos - lo) / (hi - lo)  # per-class pattern in [0, 1]

    labels = rng.permutation(np.arange(n, dtype=np.int64) % classes) if n else np.zeros(0, np.int64)
    base = 0.2 + 0.6 * protos[labels]
    noise = rng.normal(scale=0.12, size=(n,) + dims)
    images = np.clip(base + noise, 0.0, 1.0)
    if low < 0.0:
        images = (images - 0.5) / 0.5
    return Dataset(images.astype(np.float32), labels, "synthetic")
