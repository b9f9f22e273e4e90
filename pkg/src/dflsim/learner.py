"""The shared classifier every node trains: a ReLU MLP over a flat
parameter vector, with softmax cross-entropy loss, plain mini-batch SGD,
and elementwise federated averaging of whole parameter vectors.

Keeping parameters flat makes averaging, checkpointing, and norm-based
analysis trivial; the layout object knows how to slice the vector back
into weight matrices and bias vectors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CHECKPOINT_MAGIC = b"DFLM"


@dataclass(frozen=True)
class Layout:
    """Layer widths, input first: (in, hidden..., out)."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.sizes) < 2 or any(s < 1 for s in self.sizes):
            raise ValueError(f"layout needs >= 2 positive layer sizes, got {self.sizes}")

    @property
    def num_params(self) -> int:
        return sum(a * b + b for a, b in zip(self.sizes, self.sizes[1:]))

    @property
    def serialized_bits(self) -> int:
        # checkpoint width: one little-endian float64 per parameter
        return 64 * self.num_params

    @property
    def num_classes(self) -> int:
        return self.sizes[-1]

    @property
    def feature_dim(self) -> int:
        return self.sizes[0]


@dataclass
class ModelParams:
    values: np.ndarray
    layout: Layout

    def __post_init__(self):
        if len(self.values) != self.layout.num_params:
            raise ValueError(
                f"parameter vector has {len(self.values)} entries, "
                f"layout expects {self.layout.num_params}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("parameter vector contains non-finite entries")

    def copy(self) -> "ModelParams":
        return ModelParams(self.values.copy(), self.layout)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    local_epochs: int
    batch_size: int
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.local_epochs < 0:
            raise ValueError(f"local_epochs must be >= 0, got {self.local_epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer != "sgd":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class EvalResult:
    loss: float
    accuracy: float


def init_model(layout: Layout, rng: np.random.Generator) -> ModelParams:
    """Scaled-uniform weights (Glorot fan-based limit), zero biases."""
    chunks = []
    for fan_in, fan_out in zip(layout.sizes, layout.sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return ModelParams(np.concatenate(chunks), layout)


def _split(values: np.ndarray, layout: Layout) -> list[tuple[np.ndarray, np.ndarray]]:
    """View the flat vector as [(W, b), ...] with W of shape (out, in)."""
    layers = []
    offset = 0
    for fan_in, fan_out in zip(layout.sizes, layout.sizes[1:]):
        w = values[offset:offset + fan_in * fan_out].reshape(fan_out, fan_in)
        offset += fan_in * fan_out
        b = values[offset:offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def _forward(layers, features: np.ndarray):
    """Returns (logits, per-layer inputs, pre-activations)."""
    inputs, preacts = [], []
    h = features
    for i, (w, b) in enumerate(layers):
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = z if i == len(layers) - 1 else np.maximum(z, 0.0)
    return preacts[-1], inputs, preacts


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def evaluate(model: ModelParams, features: np.ndarray, labels: np.ndarray) -> EvalResult:
    """Mean cross-entropy and top-1 accuracy over the given samples."""
    if len(features) == 0:
        raise ValueError("cannot evaluate on an empty sample set")
    if features.shape[1] != model.layout.feature_dim:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match layout input "
            f"{model.layout.feature_dim}"
        )
    logits, _, _ = _forward(_split(model.values, model.layout), features)
    logp = _log_softmax(logits)
    loss = float(-logp[np.arange(len(labels)), labels].mean())
    accuracy = float((logits.argmax(axis=1) == labels).mean())
    return EvalResult(loss=loss, accuracy=accuracy)


def loss_and_grad(
    model: ModelParams, features: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the flat vector."""
    return _loss_and_grad(model.values, model.layout, features, labels)


def _loss_and_grad(
    values: np.ndarray, layout: Layout, features: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    if len(features) == 0:
        raise ValueError("cannot take a gradient over an empty batch")
    layers = _split(values, layout)
    logits, inputs, preacts = _forward(layers, features)
    logp = _log_softmax(logits)
    n = len(labels)
    loss = float(-logp[np.arange(n), labels].mean())

    delta = np.exp(logp)
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[i] = (delta.T @ inputs[i], delta.sum(axis=0))
        if i > 0:
            delta = (delta @ w) * (preacts[i - 1] > 0.0)

    flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return loss, flat


def local_update(
    model: ModelParams,
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> ModelParams:
    """Mini-batch SGD for cfg.local_epochs passes over the shard.

    Aborts with a diagnostic if the weights go non-finite, which at these
    scales only happens when the learning rate diverges.
    """
    if len(features) == 0:
        raise ValueError("cannot train on an empty shard")
    out = model.values.copy()
    n = len(features)
    for epoch in range(cfg.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, grad = _loss_and_grad(out, model.layout, features[batch], labels[batch])
            out -= cfg.learning_rate * grad
        if not np.all(np.isfinite(out)):
            raise FloatingPointError(
                f"non-finite weights after epoch {epoch + 1}; "
                f"learning rate {cfg.learning_rate} is diverging"
            )
    return ModelParams(out, model.layout)


def fed_average(own: ModelParams, received: list[ModelParams]) -> ModelParams:
    """Elementwise mean of the node's model with every received model.

    Computed as own + mean(received - own), which is exactly idempotent
    when everything already agrees; the differences are summed in
    per-coordinate sorted order, so the result is also bitwise independent
    of the order models arrived in.
    """
    for other in received:
        if other.layout != own.layout:
            raise ValueError(
                f"layout mismatch: {other.layout.sizes} vs {own.layout.sizes}"
            )
    if not received:
        return own.copy()
    deltas = np.vstack([m.values - own.values for m in received])
    deltas.sort(axis=0)
    shift = np.add.reduce(deltas, axis=0) / (len(received) + 1)
    return ModelParams(own.values + shift, own.layout)


def save_model(model: ModelParams, path: str) -> None:
    """Checkpoint: magic, layer count, layer sizes (u32 LE), f64 LE values."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(model.layout.sizes)))
        f.write(struct.pack(f"<{len(model.layout.sizes)}I", *model.layout.sizes))
        f.write(model.values.astype("<f8").tobytes())


def load_model(path: str) -> ModelParams:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint (magic {magic!r})")
        (depth,) = struct.unpack("<I", f.read(4))
        sizes = struct.unpack(f"<{depth}I", f.read(4 * depth))
        layout = Layout(sizes)
        values = np.frombuffer(f.read(8 * layout.num_params), dtype="<f8").copy()
    return ModelParams(values, layout)
