"""Datasets and per-node shards.

Two sources: a synthetic Gaussian-cluster classification task sized for
fast desk-scale runs, and an IDX-format image/label pair (the de-facto
MNIST layout). Shards are equal-sized and pairwise disjoint; class
composition per shard follows a Dirichlet mixture, which is where the
IID / non-IID knob lives.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Raised when an IDX file is malformed; the message names the file."""


@dataclass
class Dataset:
    features: np.ndarray   # (num_samples, feature_dim) float64
    labels: np.ndarray     # (num_samples,) int64 in 0..num_classes-1
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if len(self.features) != len(self.labels):
            raise ValueError(
                f"features/labels row mismatch: {len(self.features)} vs {len(self.labels)}"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels must lie in 0..num_classes-1")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.num_classes)


@dataclass(frozen=True)
class Shard:
    """One node's slice of the global dataset (indices into it)."""

    owner: int
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class DirichletSpec:
    alpha: float
    num_nodes: int
    num_classes: int

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.num_nodes < 1 or self.num_classes < 1:
            raise ValueError("num_nodes and num_classes must be >= 1")


def make_synthetic(
    num_samples: int,
    feature_dim: int,
    num_classes: int,
    rng: np.random.Generator,
    separation: float = 3.0,
) -> Dataset:
    """Gaussian class clusters with unit within-class variance.

    Class centers sit pairwise `separation` apart (exactly so when
    feature_dim >= num_classes, via an orthonormal frame), which makes the
    task difficulty a single dial: separation 0 collapses all classes,
    large separation makes them linearly separable. Labels are balanced:
    each class gets num_samples // num_classes samples, remainder spread
    over the first classes; rows are shuffled.
    """
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if num_samples < 0 or feature_dim < 1:
        raise ValueError("num_samples must be >= 0 and feature_dim >= 1")

    if feature_dim >= num_classes:
        basis, _ = np.linalg.qr(rng.standard_normal((feature_dim, num_classes)))
        centers = (separation / np.sqrt(2.0)) * basis.T
    else:
        # cannot embed num_classes orthonormal directions; settle for random ones
        dirs = rng.standard_normal((num_classes, feature_dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        centers = (separation / np.sqrt(2.0)) * dirs

    base, rem = divmod(num_samples, num_classes)
    counts = [base + (1 if c < rem else 0) for c in range(num_classes)]
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), counts)
    features = centers[labels] + rng.standard_normal((num_samples, feature_dim))
    order = rng.permutation(num_samples)
    return Dataset(features[order], labels[order], num_classes)


def _target_counts(proportions: np.ndarray, size: int) -> np.ndarray:
    """Integer class counts summing to `size`, largest-remainder rounding."""
    raw = proportions * size
    counts = np.floor(raw).astype(np.int64)
    leftover = size - int(counts.sum())
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:leftover]] += 1
    return counts


def partition_dirichlet(
    data: Dataset,
    spec: DirichletSpec,
    rng: np.random.Generator,
    max_retries: int = 10,
) -> list[Shard]:
    """Split `data` into num_nodes disjoint shards of exactly len(data)//N.

    Each node's class mixture is a fresh Dir(alpha) draw. Draws that ask
    for more samples of some class than the dataset holds are redrawn up
    to `max_retries` times; after that the requested counts are scaled
    down to what is available (logged) and the shortfall is padded from
    the most plentiful remaining classes, keeping sizes exact and shards
    disjoint either way.
    """
    n, c = spec.num_nodes, spec.num_classes
    total = len(data)
    if total < n * c:
        raise ValueError(f"need at least num_nodes*num_classes={n * c} samples, got {total}")
    shard_size = total // n

    pools = [rng.permutation(np.flatnonzero(data.labels == cls)) for cls in range(c)]
    class_sizes = np.array([len(p) for p in pools], dtype=np.int64)

    counts = None
    for attempt in range(max(1, max_retries)):
        proportions = rng.dirichlet(np.full(c, spec.alpha), size=n)
        counts = np.stack([_target_counts(p, shard_size) for p in proportions])
        if np.all(counts.sum(axis=0) <= class_sizes):
            break
    else:
        demanded = counts.sum(axis=0)
        over = demanded > class_sizes
        excess = int((demanded[over] - class_sizes[over]).sum())
        # rounding alone routinely overshoots a pool by a sample or two;
        # only a material shortfall deserves a warning
        severity = log.warning if excess > 0.02 * total else log.debug
        severity(
            "dirichlet draws exhausted %d classes after %d retries "
            "(%d samples over); scaling requested counts to availability",
            int(np.sum(over)), max_retries, excess,
        )
        scale = np.ones(c)
        scale[over] = class_sizes[over] / demanded[over]
        counts = np.floor(counts * scale).astype(np.int64)

    cursors = np.zeros(c, dtype=np.int64)
    shards = []
    for node in range(n):
        picked = []
        for cls in range(c):
            want = int(min(counts[node, cls], class_sizes[cls] - cursors[cls]))
            if want > 0:
                picked.append(pools[cls][cursors[cls]:cursors[cls] + want])
                cursors[cls] += want
        taken = np.concatenate(picked) if picked else np.empty(0, dtype=np.int64)
        # remainder redistribution: top up from the most plentiful classes
        while len(taken) < shard_size:
            remaining = class_sizes - cursors
            cls = int(np.argmax(remaining))
            if remaining[cls] <= 0:
                raise RuntimeError("ran out of samples while padding a shard")
            grab = int(min(shard_size - len(taken), remaining[cls]))
            taken = np.concatenate([taken, pools[cls][cursors[cls]:cursors[cls] + grab]])
            cursors[cls] += grab
        shards.append(Shard(owner=node, indices=taken[:shard_size]))
    return shards


def class_proportions(data: Dataset, shard: Shard) -> np.ndarray:
    """Fraction of the shard belonging to each class."""
    counts = np.bincount(data.labels[shard.indices], minlength=data.num_classes)
    return counts / max(len(shard), 1)


def _read_exact(f, nbytes: int, path: str) -> bytes:
    buf = f.read(nbytes)
    if len(buf) != nbytes:
        raise IdxFormatError(f"{path}: truncated, expected {nbytes} more bytes, got {len(buf)}")
    return buf


def load_idx(images_path: str, labels_path: str, max_samples: int, num_classes: int = 10) -> Dataset:
    """Load an IDX image/label pair, pixels scaled to [0, 1].

    Keeps at most `max_samples` samples (taken from the front). Raises
    IdxFormatError naming the offending file on a bad magic number, a
    truncated payload, or an image/label count mismatch.
    """
    if max_samples < 0:
        raise ValueError(f"max_samples must be >= 0, got {max_samples}")

    with open(images_path, "rb") as f:
        magic, n_img, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path))
        if magic != IDX_IMAGE_MAGIC:
            raise IdxFormatError(
                f"{images_path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        pixels = np.frombuffer(_read_exact(f, n_img * rows * cols, images_path), dtype=np.uint8)

    with open(labels_path, "rb") as f:
        magic, n_lab = struct.unpack(">II", _read_exact(f, 8, labels_path))
        if magic != IDX_LABEL_MAGIC:
            raise IdxFormatError(
                f"{labels_path}: bad magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"
            )
        labels = np.frombuffer(_read_exact(f, n_lab, labels_path), dtype=np.uint8)

    if n_img != n_lab:
        raise IdxFormatError(
            f"sample count mismatch: {images_path} has {n_img}, {labels_path} has {n_lab}"
        )

    keep = min(n_img, max_samples)
    features = pixels.reshape(n_img, rows * cols)[:keep].astype(np.float64) / 255.0
    return Dataset(features, labels[:keep].astype(np.int64), num_classes)
