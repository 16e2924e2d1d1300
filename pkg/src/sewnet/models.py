"""The four classifier variants and their persistence.

Two classifier cores, each usable with either front end:

- FCN: three length-preserving convolution blocks (conv + batch norm +
  ReLU) with 128x8, 256x5 and 128x3 filters, global average pooling, and a
  linear map to class logits.  The parameter count is independent of the
  window size, so one architecture serves every window length.
- LSTM: 64 hidden units, many-to-one, followed by the same linear head.

Front ends: a trainable 64-dimensional embedding of the token indexes, or a
parameter-free one-hot encoding of width vocab_size + 1 for the raw-token
variants.  Softmax is applied on top of the logits by ``predict`` and by
the training loss.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ArchitectureMismatch, InvalidConfig, ShapeMismatch
from .nn.layers import (
    BatchNorm,
    Conv1D,
    Dense,
    Embedding,
    GlobalAveragePooling,
    LSTM,
    Layer,
    OneHot,
    ReLU,
    softmax,
    softmax_cross_entropy,
)

CHECKPOINT_FORMAT = "sewnet-checkpoint"
CHECKPOINT_VERSION = 1

FCN_FILTERS = ((128, 8), (256, 5), (128, 3))
LSTM_HIDDEN = 64

CLASSIFIERS = ("fcn", "lstm")
FRONT_ENDS = ("embedding", "onehot")
MODEL_NAMES = tuple(f"{c}_{f}" for c in CLASSIFIERS for f in FRONT_ENDS)


@dataclass(frozen=True)
class ModelConfig:
    classifier: str            # "fcn" | "lstm"
    front_end: str             # "embedding" | "onehot"
    vocab_size: int
    window_size: int
    num_classes: int
    embedding_dim: int = 64

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise InvalidConfig(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.front_end not in FRONT_ENDS:
            raise InvalidConfig(f"front_end must be one of {FRONT_ENDS}, got {self.front_end!r}")
        for name in ("vocab_size", "window_size", "num_classes", "embedding_dim"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def name(self) -> str:
        return f"{self.classifier}_{self.front_end}"

    def descriptor(self) -> str:
        front = f"emb={self.embedding_dim}" if self.front_end == "embedding" else "onehot"
        tail = f"classes={self.num_classes},window={self.window_size},vocab={self.vocab_size}"
        if self.classifier == "fcn":
            convs = ",".join(f"{c}x{k}" for c, k in FCN_FILTERS)
            return f"fcn({front},conv={convs},{tail})"
        return f"lstm({front},hidden={LSTM_HIDDEN},{tail})"


def config_for(name: str, vocab_size: int, window_size: int, num_classes: int,
               embedding_dim: int = 64) -> ModelConfig:
    """ModelConfig from a variant name like "fcn_embedding"."""
    if name not in MODEL_NAMES:
        raise InvalidConfig(f"unknown model {name!r}; choose from {sorted(MODEL_NAMES)}")
    classifier, front_end = name.split("_")
    return ModelConfig(classifier=classifier, front_end=front_end, vocab_size=vocab_size,
                       window_size=window_size, num_classes=num_classes, embedding_dim=embedding_dim)


class Model:
    """An ordered stack of layers ending in class logits."""

    def __init__(self, layers: list[Layer], config: ModelConfig, dtype=np.float32):
        self.layers = layers
        self.config = config
        self.dtype = np.dtype(dtype)

    # -- forward / backward ------------------------------------------------

    def forward(self, tokens: np.ndarray, train: bool = False) -> np.ndarray:
        x = tokens
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dlogits: np.ndarray) -> None:
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
            if d is None:
                break

    def loss_and_grads(self, tokens: np.ndarray, targets: np.ndarray, train: bool = True):
        """One forward/backward pass; returns (loss, probs), grads populated."""
        self.zero_grads()
        logits = self.forward(tokens, train=train)
        loss, probs, dlogits = softmax_cross_entropy(logits, targets)
        self.backward(dlogits)
        return loss, probs

    def predict_proba(self, tokens: np.ndarray, batch_size: int = 4096) -> np.ndarray:
        """Class probabilities in inference mode, computed in chunks."""
        chunks = []
        for start in range(0, len(tokens), batch_size):
            logits = self.forward(tokens[start:start + batch_size], train=False)
            chunks.append(softmax(logits))
        return np.concatenate(chunks, axis=0)

    # -- parameter access ----------------------------------------------------

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{layer.kind}.{name}": value
            for i, layer in enumerate(self.layers)
            for name, value in layer.params.items()
        }

    def gradients(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{layer.kind}.{name}": value
            for i, layer in enumerate(self.layers)
            for name, value in layer.grads.items()
        }

    def layer_state(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{layer.kind}.{name}": value
            for i, layer in enumerate(self.layers)
            for name, value in layer.state.items()
        }

    def num_parameters(self) -> int:
        return sum(v.size for v in self.parameters().values())

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of all parameters and layer state (for best-model restore)."""
        merged = {**self.parameters(), **self.layer_state()}
        return {k: v.copy() for k, v in merged.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        merged = {**self.parameters(), **self.layer_state()}
        if set(snapshot) != set(merged):
            raise ShapeMismatch("snapshot keys do not match this model")
        for key, value in snapshot.items():
            merged[key][...] = value

    def batchnorm_layers(self) -> list[BatchNorm]:
        return [layer for layer in self.layers if isinstance(layer, BatchNorm)]


def _front_end(config: ModelConfig, rng: np.random.Generator, dtype) -> tuple[Layer, int]:
    if config.front_end == "embedding":
        return Embedding(config.vocab_size, config.embedding_dim, rng, dtype=dtype), config.embedding_dim
    return OneHot(config.vocab_size, dtype=dtype), config.vocab_size + 1


def build_fcn(config: ModelConfig, rng: np.random.Generator | None = None, dtype=np.float32) -> Model:
    """front end -> 3 x (conv + BN + ReLU) -> GAP -> dense logits."""
    if config.classifier != "fcn":
        raise InvalidConfig(f"build_fcn got classifier {config.classifier!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    front, channels = _front_end(config, rng, dtype)
    layers: list[Layer] = [front]
    for filters, kernel in FCN_FILTERS:
        layers.append(Conv1D(channels, filters, kernel, rng, dtype=dtype))
        layers.append(BatchNorm(filters, dtype=dtype))
        layers.append(ReLU())
        channels = filters
    layers.append(GlobalAveragePooling())
    layers.append(Dense(channels, config.num_classes, rng, dtype=dtype))
    return Model(layers, config, dtype=dtype)


def build_lstm(config: ModelConfig, rng: np.random.Generator | None = None, dtype=np.float32) -> Model:
    """front end -> LSTM(64), last hidden state -> dense logits."""
    if config.classifier != "lstm":
        raise InvalidConfig(f"build_lstm got classifier {config.classifier!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    front, channels = _front_end(config, rng, dtype)
    layers = [
        front,
        LSTM(channels, LSTM_HIDDEN, rng, dtype=dtype),
        Dense(LSTM_HIDDEN, config.num_classes, rng, dtype=dtype),
    ]
    return Model(layers, config, dtype=dtype)


def build_model(config: ModelConfig, rng: np.random.Generator | None = None, dtype=np.float32) -> Model:
    if config.classifier == "fcn":
        return build_fcn(config, rng, dtype=dtype)
    return build_lstm(config, rng, dtype=dtype)


def predict(model: Model, tokens: np.ndarray, batch_size: int = 4096) -> np.ndarray:
    """Probability matrix [B, C] for a batch of windows (inference mode)."""
    return model.predict_proba(tokens, batch_size=batch_size)


# -- checkpoints ---------------------------------------------------------------
#
# A checkpoint is an .npz archive: a JSON header under "__header__" (format
# name, version, architecture descriptor, model config, label names, split
# provenance) plus one array per parameter ("param/<name>"), per layer state
# ("state/<name>") and per optimizer slot ("optim/<name>").

def save_checkpoint(
    model: Model,
    path: str,
    class_names: list[str] | None = None,
    optimizer_state: dict[str, np.ndarray] | None = None,
    extra: dict | None = None,
) -> None:
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "descriptor": model.config.descriptor(),
        "config": asdict(model.config),
        "dtype": model.dtype.name,
        "class_names": class_names or [],
        "extra": extra or {},
    }
    arrays = {f"param/{k}": v for k, v in model.parameters().items()}
    arrays.update({f"state/{k}": v for k, v in model.layer_state().items()})
    if optimizer_state:
        arrays.update({f"optim/{k}": v for k, v in optimizer_state.items()})
    arrays["__header__"] = np.frombuffer(
        json.dumps(header, ensure_ascii=False).encode("utf-8"), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: str):
    """Load a checkpoint; returns (model, header dict, optimizer arrays)."""
    with np.load(path) as archive:
        raw = archive["__header__"].tobytes().decode("utf-8")
        header = json.loads(raw)
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ArchitectureMismatch(f"{path} is not a {CHECKPOINT_FORMAT} file")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ArchitectureMismatch(
                f"unsupported checkpoint version {header.get('version')}"
            )
        config = ModelConfig(**header["config"])
        model = build_model(config, rng=np.random.default_rng(0), dtype=np.dtype(header["dtype"]))
        snapshot = {}
        optimizer_state = {}
        for key in archive.files:
            if key.startswith("param/") or key.startswith("state/"):
                snapshot[key.split("/", 1)[1]] = archive[key]
            elif key.startswith("optim/"):
                optimizer_state[key.split("/", 1)[1]] = archive[key]
        model.restore(snapshot)
    return model, header, optimizer_state
