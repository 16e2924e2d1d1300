"""Layers with explicit forward/backward passes.

Conventions:
- activations are [batch, time, channels] (or [batch, features] after
  pooling); parameters and their gradients live in ``layer.params`` /
  ``layer.grads`` under the same names;
- ``forward(x, train=...)`` caches whatever backward needs;
- ``backward(dout)`` accumulates parameter gradients (+=) and returns the
  gradient w.r.t. the layer input (None for the token front ends, whose
  inputs are integers).

Initialization: conv/dense/recurrent weights are uniform in
±sqrt(6 / (fan_in + fan_out)), biases zero except the LSTM forget gate
(one), embedding tables uniform in ±0.05.
"""

from __future__ import annotations

import numpy as np

from ..errors import (
    DegenerateBatch,
    ShapeMismatch,
    TargetOutOfRange,
    TokenOutOfRange,
)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base layer: a named kind plus parameter/gradient/state dicts."""

    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.state: dict[str, np.ndarray] = {}

    def forward(self, x, train: bool = False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0

    def _init_grads(self) -> None:
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}


class Embedding(Layer):
    """Trainable lookup table [vocab_size + 1, dim]; row 0 is the padding row.

    The padding row is trainable like any other row.
    """

    kind = "embedding"

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.vocab_size = vocab_size
        self.dim = dim
        self.params = {"table": rng.uniform(-0.05, 0.05, size=(vocab_size + 1, dim)).astype(dtype)}
        self._init_grads()
        self._tokens = None

    def forward(self, tokens, train: bool = False):
        tokens = np.asarray(tokens)
        if tokens.min(initial=0) < 0 or tokens.max(initial=0) > self.vocab_size:
            raise TokenOutOfRange(
                f"tokens must lie in [0, {self.vocab_size}], "
                f"got range [{tokens.min()}, {tokens.max()}]"
            )
        self._tokens = tokens
        return self.params["table"][tokens]

    def backward(self, dout):
        table_grad = self.grads["table"]
        flat_tokens = self._tokens.ravel()
        flat_dout = dout.reshape(-1, self.dim)
        # group rows by token and reduce each group once; orders of magnitude
        # faster than np.add.at and just as deterministic
        order = np.argsort(flat_tokens, kind="stable")
        sorted_tokens = flat_tokens[order]
        starts = np.concatenate([[0], np.flatnonzero(np.diff(sorted_tokens)) + 1])
        sums = np.add.reduceat(flat_dout[order], starts, axis=0)
        table_grad[sorted_tokens[starts]] += sums.astype(table_grad.dtype)
        return None


class OneHot(Layer):
    """Parameter-free one-hot front end of width vocab_size + 1."""

    kind = "onehot"

    def __init__(self, vocab_size: int, dtype=np.float32):
        super().__init__()
        self.vocab_size = vocab_size
        self._eye = np.eye(vocab_size + 1, dtype=dtype)

    def forward(self, tokens, train: bool = False):
        tokens = np.asarray(tokens)
        if tokens.min(initial=0) < 0 or tokens.max(initial=0) > self.vocab_size:
            raise TokenOutOfRange(
                f"tokens must lie in [0, {self.vocab_size}], "
                f"got range [{tokens.min()}, {tokens.max()}]"
            )
        return self._eye[tokens]

    def backward(self, dout):
        return None


class Conv1D(Layer):
    """Length-preserving 1D convolution, stride one.

    Input [B, T, Cin], kernel [K, Cin, Cout], output [B, T, Cout].  Zero
    padding of K-1 in total, split ceil((K-1)/2) left / floor((K-1)/2)
    right, keeps the output exactly T long for odd and even K alike.
    """

    kind = "conv1d"

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        fan_in = kernel_size * in_channels
        fan_out = kernel_size * out_channels
        self.params = {
            "w": glorot_uniform(rng, (kernel_size, in_channels, out_channels), fan_in, fan_out, dtype),
            "b": np.zeros(out_channels, dtype=dtype),
        }
        self._init_grads()
        self._xpad = None

    @property
    def _pad(self) -> tuple[int, int]:
        k = self.kernel_size
        return (k // 2, (k - 1) // 2)  # (left, right), left gets the extra cell

    def forward(self, x, train: bool = False):
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ShapeMismatch(
                f"conv1d expects [B, T, {self.in_channels}], got {x.shape}"
            )
        B, T, _ = x.shape
        left, right = self._pad
        xpad = np.zeros((B, T + self.kernel_size - 1, self.in_channels), dtype=x.dtype)
        xpad[:, left:left + T, :] = x
        self._xpad = xpad
        # windows[b, t, c, k] = xpad[b, t + k, c]
        windows = np.lib.stride_tricks.sliding_window_view(xpad, self.kernel_size, axis=1)
        out = np.tensordot(windows, self.params["w"], axes=([3, 2], [0, 1]))
        out += self.params["b"]
        return out

    def backward(self, dout):
        w = self.params["w"]
        k, cin = self.kernel_size, self.in_channels
        B = dout.shape[0]
        T = self._xpad.shape[1] - k + 1
        left, _ = self._pad

        windows = np.lib.stride_tricks.sliding_window_view(self._xpad, k, axis=1)
        dw = np.tensordot(windows, dout, axes=([0, 1], [0, 1]))  # [Cin, K, Cout]
        self.grads["w"] += dw.transpose(1, 0, 2)
        self.grads["b"] += dout.sum(axis=(0, 1))

        dcols = np.tensordot(dout, w, axes=([2], [2]))  # [B, T, K, Cin]
        dxpad = np.zeros_like(self._xpad)
        for j in range(k):
            dxpad[:, j:j + T, :] += dcols[:, :, j, :]
        return dxpad[:, left:left + T, :]


class BatchNorm(Layer):
    """Per-channel batch normalization over all non-channel axes.

    Train mode standardizes with batch statistics (biased variance) and
    updates the running estimates as running <- m*running + (1-m)*batch;
    inference mode uses the running estimates.  Setting ``update_running``
    to False freezes the estimates (used by the gradient checker).
    """

    kind = "batchnorm"

    def __init__(self, channels: int, eps: float = 1e-3, momentum: float = 0.99, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.update_running = True
        self.params = {
            "gamma": np.ones(channels, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self._init_grads()
        self.state = {
            "running_mean": np.zeros(channels, dtype=dtype),
            "running_var": np.ones(channels, dtype=dtype),
        }
        self._cache = None

    def forward(self, x, train: bool = False):
        if x.shape[-1] != self.channels:
            raise ShapeMismatch(f"batchnorm expects {self.channels} channels, got {x.shape}")
        axes = tuple(range(x.ndim - 1))
        if train:
            n = int(np.prod([x.shape[a] for a in axes]))
            if n < 2:
                raise DegenerateBatch(f"batch statistics need >= 2 positions, got {n}")
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv_std
            if self.update_running:
                m = self.momentum
                self.state["running_mean"][...] = m * self.state["running_mean"] + (1 - m) * mean
                self.state["running_var"][...] = m * self.state["running_var"] + (1 - m) * var
        else:
            inv_std = 1.0 / np.sqrt(self.state["running_var"] + self.eps)
            xhat = (x - self.state["running_mean"]) * inv_std
            n = 0
        self._cache = (xhat, inv_std, axes, n, train)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, dout):
        xhat, inv_std, axes, n, train = self._cache
        dgamma = (dout * xhat).sum(axis=axes)
        dbeta = dout.sum(axis=axes)
        self.grads["gamma"] += dgamma
        self.grads["beta"] += dbeta
        gamma = self.params["gamma"]
        if not train:
            return dout * gamma * inv_std
        return (gamma * inv_std / n) * (n * dout - dbeta - xhat * dgamma)


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train: bool = False):
        self._mask = x > 0
        return np.maximum(x, 0)

    def backward(self, dout):
        return dout * self._mask


class GlobalAveragePooling(Layer):
    """Mean over the time axis: [B, T, C] -> [B, C]."""

    kind = "gap"

    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, train: bool = False):
        if x.ndim != 3:
            raise ShapeMismatch(f"gap expects [B, T, C], got {x.shape}")
        self._shape = x.shape
        return x.mean(axis=1)

    def backward(self, dout):
        B, T, C = self._shape
        return np.broadcast_to(dout[:, None, :] / T, (B, T, C))


class Dense(Layer):
    """Affine map [B, F] -> [B, C]."""

    kind = "dense"

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "w": glorot_uniform(rng, (in_features, out_features), in_features, out_features, dtype),
            "b": np.zeros(out_features, dtype=dtype),
        }
        self._init_grads()
        self._x = None

    def forward(self, x, train: bool = False):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeMismatch(f"dense expects [B, {self.in_features}], got {x.shape}")
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, dout):
        self.grads["w"] += self._x.T @ dout
        self.grads["b"] += dout.sum(axis=0)
        return dout @ self.params["w"].T


class LSTM(Layer):
    """Single-layer LSTM returning only the final hidden state (many-to-one).

    Gates are ordered (input, forget, candidate, output) inside the fused
    [*, 4H] weight matrices.  Initial hidden and cell states are zero; the
    forget-gate bias starts at one.
    """

    kind = "lstm"

    def __init__(self, in_features: int, hidden: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.hidden = hidden
        b = np.zeros(4 * hidden, dtype=dtype)
        b[hidden:2 * hidden] = 1.0
        self.params = {
            "wx": glorot_uniform(rng, (in_features, 4 * hidden), in_features, 4 * hidden, dtype),
            "wh": glorot_uniform(rng, (hidden, 4 * hidden), hidden, 4 * hidden, dtype),
            "b": b,
        }
        self._init_grads()
        self._x = None
        self._steps = None

    def forward(self, x, train: bool = False):
        if x.ndim != 3 or x.shape[2] != self.in_features:
            raise ShapeMismatch(f"lstm expects [B, T, {self.in_features}], got {x.shape}")
        B, T, _ = x.shape
        H = self.hidden
        wx, wh, b = self.params["wx"], self.params["wh"], self.params["b"]
        h = np.zeros((B, H), dtype=x.dtype)
        c = np.zeros((B, H), dtype=x.dtype)
        self._x = x
        self._steps = []
        for t in range(T):
            a = x[:, t] @ wx + h @ wh + b
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = _sigmoid(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            self._steps.append((h_prev, c_prev, i, f, g, o, tc))
        return h

    def backward(self, dout):
        x = self._x
        B, T, _ = x.shape
        H = self.hidden
        wx, wh = self.params["wx"], self.params["wh"]
        dwx, dwh, db = self.grads["wx"], self.grads["wh"], self.grads["b"]
        dx = np.zeros_like(x)
        dh = dout
        dc = np.zeros_like(dout)
        for t in range(T - 1, -1, -1):
            h_prev, c_prev, i, f, g, o, tc = self._steps[t]
            do = dh * tc
            dc = dc + dh * o * (1 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc = dc * f
            da = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)],
                axis=1,
            )
            dwx += x[:, t].T @ da
            dwh += h_prev.T @ da
            db += da.sum(axis=0)
            dx[:, t] = da @ wx.T
            dh = da @ wh.T
        return dx


def _sigmoid(x):
    # evaluate on the negative half-line only, to avoid overflow warnings
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row softmax with max subtraction."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy of softmax(logits) against integer targets.

    Returns (loss, probs, dlogits); the loss term is computed in log space
    so it stays finite even for saturated rows.
    """
    B, C = logits.shape
    targets = np.asarray(targets)
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= C:
        raise TargetOutOfRange(f"targets must lie in [0, {C}), got range "
                               f"[{targets.min()}, {targets.max()}]")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_probs = z[np.arange(B), targets] - log_norm
    loss = float(-log_probs.mean())
    probs = np.exp(z - log_norm[:, None])
    dlogits = probs.copy()
    dlogits[np.arange(B), targets] -= 1.0
    dlogits /= B
    return loss, probs, dlogits


def dense_softmax_ce(x: np.ndarray, w: np.ndarray, b: np.ndarray, targets: np.ndarray):
    """Affine map into class logits, then softmax + mean cross-entropy.

    Returns (probs, loss).
    """
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"incompatible shapes x{x.shape} w{w.shape} b{b.shape}")
    loss, probs, _ = softmax_cross_entropy(x @ w + b, targets)
    return probs, loss
