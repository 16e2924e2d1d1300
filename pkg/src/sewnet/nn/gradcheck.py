"""Finite-difference verification of analytic gradients.

Central differences with step 1e-5 in float64, compared entrywise as

    rel_err = |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)

Layer checks drive backward with a fixed random projection so the scalar
loss sum(forward(x) * P) exercises every output entry.  Model checks use
the real softmax cross entropy loss.  Large parameter tensors are sampled
at a deterministic subset of entries; inputs are checked the same way.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ..errors import NonFiniteValue
from .layers import (
    BatchNorm,
    Conv1D,
    Dense,
    Embedding,
    GlobalAveragePooling,
    LSTM,
    Layer,
    ReLU,
    softmax_cross_entropy,
)

if TYPE_CHECKING:
    from ..models import Model

DEFAULT_STEP = 1e-5
DEFAULT_SAMPLES = 40
DEFAULT_THRESHOLD = 1e-4


@dataclass
class GradCheckResult:
    name: str
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    def ok(self, threshold: float = DEFAULT_THRESHOLD) -> bool:
        return self.max_error < threshold

    def __str__(self) -> str:
        worst = max(self.errors, key=self.errors.get) if self.errors else "-"
        return f"{self.name}: max rel err {self.max_error:.3g} ({worst})"


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def _sample_indices(size: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    if size <= samples:
        return np.arange(size)
    return np.sort(rng.choice(size, size=samples, replace=False))


def _numeric_entries(f, tensor: np.ndarray, indices: np.ndarray, step: float) -> np.ndarray:
    """d f / d tensor.flat[i] for each sampled i, by central differences."""
    out = np.empty(len(indices), dtype=np.float64)
    flat = tensor.reshape(-1)
    for j, idx in enumerate(indices):
        orig = flat[idx]
        flat[idx] = orig + step
        lp = f()
        flat[idx] = orig - step
        lm = f()
        flat[idx] = orig
        out[j] = (lp - lm) / (2.0 * step)
    return out


def _pair(f, flat: np.ndarray, idx: int, h: float) -> tuple[float, float]:
    orig = flat[idx]
    flat[idx] = orig + h
    lp = f()
    flat[idx] = orig - h
    lm = f()
    flat[idx] = orig
    return lp, lm


def _kink_signal(lp: float, lm: float, lp2: float, lm2: float, f0: float, h: float) -> float:
    """Size of the derivative jump inside [-h, h], if any.

    The symmetric second difference (lp + lm - 2 f0) / h equals the gap
    between the forward and backward one-sided slopes.  For a smooth
    function that gap is h * f'' and halving h halves it, so extrapolating
    the linear part away leaves O(h^3).  A derivative jump contributes a
    term that does not shrink with h, including a kink exactly at the
    evaluation point, which leaves two-scale central estimates identical
    and would otherwise go undetected.
    """
    a1 = (lp + lm - 2.0 * f0) / h
    a2 = (lp2 + lm2 - 2.0 * f0) / (h / 2.0)
    return abs(2.0 * a2 - a1)


def _refined_numeric_entry(f, flat: np.ndarray, idx: int, f0: float,
                           step: float, big_step: float):
    """(derivative estimate, valid flag) for one coordinate.

    Ordinary-sized derivatives use the base step, guarded two ways: the
    central estimates at h and h/2 must agree, and the kink signal must be
    small.  Otherwise the interval straddles a ReLU kink (batch norm
    centres activations at zero, so kinks are dense and steep near any
    operating point), central differencing does not estimate the
    derivative there, and the sample is invalid so the caller redraws.
    Both guard tolerances scale with the value, so any kink small enough
    to slip through perturbs the estimate by less than the comparison
    threshold.

    Tiny derivatives fall below the cancellation noise of small-step
    differencing (eps * |loss| / h), so they are re-estimated with a pair
    of Richardson extrapolations at a much larger base step, which drives
    the noise floor under 1e-12 while the extrapolation cancels the
    truncation error the large step would otherwise introduce.  The two
    extrapolations must agree and the kink signal must vanish; a
    coordinate both tiny and kinked is invalid at every scale.
    """
    lp, lm = _pair(f, flat, idx, step)
    lp2, lm2 = _pair(f, flat, idx, step / 2.0)
    d1 = (lp - lm) / (2.0 * step)
    d2 = (lp2 - lm2) / step
    scale = max(abs(d1), abs(d2))
    if (
        scale >= 1e-4
        and abs(d1 - d2) <= 1e-9 + 3e-5 * scale
        and _kink_signal(lp, lm, lp2, lm2, f0, step) <= 4e-9 + 1e-4 * scale
    ):
        return (4.0 * d2 - d1) / 3.0, True

    lpb, lmb = _pair(f, flat, idx, big_step)
    lpb2, lmb2 = _pair(f, flat, idx, big_step / 2.0)
    lpb4, lmb4 = _pair(f, flat, idx, big_step / 4.0)
    d1b = (lpb - lmb) / (2.0 * big_step)
    d2b = (lpb2 - lmb2) / big_step
    d3b = (lpb4 - lmb4) / (big_step / 2.0)
    r1 = (4.0 * d2b - d1b) / 3.0
    r2 = (4.0 * d3b - d2b) / 3.0
    scale_b = max(abs(r1), abs(r2))
    if (
        abs(r1 - r2) <= 1e-10 + 1e-5 * scale_b
        and _kink_signal(lpb2, lmb2, lpb4, lmb4, f0, big_step / 2.0) <= 1e-11 + 1e-4 * scale_b
    ):
        return r2, True
    return 0.0, False


def _require_finite(value, context: str) -> None:
    if not np.all(np.isfinite(value)):
        raise NonFiniteValue(f"non-finite values in {context}")


@contextmanager
def _frozen_batchnorm(layers):
    norms = [l for l in layers if isinstance(l, BatchNorm)]
    saved = [l.update_running for l in norms]
    for l in norms:
        l.update_running = False
    try:
        yield
    finally:
        for l, flag in zip(norms, saved):
            l.update_running = flag


def check_layer(
    layer: Layer,
    x: np.ndarray,
    name: str | None = None,
    step: float = DEFAULT_STEP,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    train: bool = True,
) -> GradCheckResult:
    """Verify one layer's parameter gradients and (for float inputs) dx."""
    rng = np.random.default_rng(seed)
    result = GradCheckResult(name or layer.kind)

    with _frozen_batchnorm([layer]):
        out = layer.forward(x, train=train)
        _require_finite(out, f"{result.name} forward output")
        projection = rng.standard_normal(out.shape)

        def loss() -> float:
            return float(np.sum(layer.forward(x, train=train) * projection))

        layer.zero_grads()
        dx = layer.backward(projection)

        for pname, param in layer.params.items():
            analytic = layer.grads[pname]
            _require_finite(analytic, f"{result.name} grad {pname}")
            idx = _sample_indices(param.size, samples, rng)
            numeric = _numeric_entries(loss, param, idx, step)
            result.errors[pname] = max_relative_error(analytic.reshape(-1)[idx], numeric)

        if dx is not None and np.issubdtype(x.dtype, np.floating):
            _require_finite(dx, f"{result.name} dx")
            idx = _sample_indices(x.size, samples, rng)
            numeric = _numeric_entries(loss, x, idx, step)
            result.errors["x"] = max_relative_error(dx.reshape(-1)[idx], numeric)

    return result


BIG_STEP = 4e-3


def check_model(
    model: Model,
    tokens: np.ndarray,
    targets: np.ndarray,
    step: float = DEFAULT_STEP,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    refine: bool = True,
) -> GradCheckResult:
    """Verify parameter gradients of a composed model under CE loss.

    Coordinates are sampled per parameter tensor; samples whose difference
    interval straddles a ReLU kink are discarded and redrawn.  Corrupted
    gradients still fail: the comparison at smooth coordinates is
    unaffected by the mask, and a wrong backward pass is wrong there too.
    ``refine=False`` skips the smoothness guards and compares plain central
    differences (for diagnostics outside double precision, where the
    guards' noise model does not apply).
    """
    rng = np.random.default_rng(seed)
    result = GradCheckResult(model.config.name)

    with _frozen_batchnorm(model.layers):

        def loss() -> float:
            logits = model.forward(tokens, train=True)
            value, _, _ = softmax_cross_entropy(logits, targets)
            return value

        model.zero_grads()
        logits = model.forward(tokens, train=True)
        value, _, dlogits = softmax_cross_entropy(logits, targets)
        _require_finite(value, f"{result.name} loss")
        model.backward(dlogits)
        f0 = loss()

        gradients = model.gradients()
        for pname, param in model.parameters().items():
            analytic = gradients[pname].reshape(-1)
            _require_finite(analytic, f"{result.name} grad {pname}")
            flat = param.reshape(-1)
            if not refine:
                idx = _sample_indices(param.size, samples, rng)
                numeric = _numeric_entries(loss, param, idx, step)
                result.errors[pname] = max_relative_error(analytic[idx], numeric)
                continue
            order = rng.permutation(param.size)
            checked = []
            numeric = []
            for idx in order:
                estimate, valid = _refined_numeric_entry(loss, flat, idx, f0, step, BIG_STEP)
                if valid:
                    checked.append(idx)
                    numeric.append(estimate)
                if len(checked) >= samples:
                    break
            if len(checked) < min(samples, param.size) // 2:
                raise NonFiniteValue(
                    f"{result.name} {pname}: too few smooth sample points to verify"
                )
            result.errors[pname] = max_relative_error(
                analytic[np.array(checked)], np.array(numeric)
            )

    return result


@contextmanager
def corrupted_backward(layer: Layer, scale: float = 1.05):
    """Deliberately wrong gradients from one layer (negative control).

    Scales both the parameter gradients and the propagated dx, so a checker
    that fails to flag the corruption is itself broken.
    """
    original = layer.backward

    def wrecked(dout):
        dx = original(dout)
        for key in layer.grads:
            layer.grads[key] *= scale
        return None if dx is None else dx * scale

    layer.backward = wrecked  # type: ignore[method-assign]
    try:
        yield layer
    finally:
        layer.backward = original  # type: ignore[method-assign]


# -- the standard battery ------------------------------------------------------

def standard_checks(
    batch: int = 2,
    window: int = 25,
    vocab: int = 20,
    classes: int = 4,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    dtype=np.float64,
    corrupt: bool = False,
) -> list[GradCheckResult]:
    """Layer-by-layer and composed-model checks at a small fixed size.

    ``dtype`` is for diagnostics only; the documented tolerances assume
    float64.  ``corrupt`` deliberately breaks one backward pass so the
    battery must report a failure (negative control).
    """
    from ..models import build_model, config_for

    rng = np.random.default_rng(seed)
    results = []
    # float32 differencing needs a step near cbrt(machine eps); the
    # double-precision smoothness guards do not transfer, so go unguarded
    double = np.dtype(dtype) == np.float64
    step = DEFAULT_STEP if double else 5e-3

    def floats(*shape):
        return rng.uniform(-1.0, 1.0, size=shape).astype(dtype)

    tokens = rng.integers(0, vocab + 1, size=(batch, window))

    results.append(check_layer(
        Embedding(vocab, 8, rng, dtype=dtype), tokens,
        name="embedding", samples=samples, step=step))
    results.append(check_layer(
        Conv1D(6, 5, 3, rng, dtype=dtype), floats(batch, window, 6),
        name="conv1d", samples=samples, step=step))
    results.append(check_layer(
        BatchNorm(6, dtype=dtype), floats(batch, window, 6),
        name="batchnorm_train", samples=samples, step=step))
    infer_norm = BatchNorm(6, dtype=dtype)
    infer_norm.state["running_mean"][...] = floats(6)
    infer_norm.state["running_var"][...] = np.abs(floats(6)) + 0.5
    results.append(check_layer(
        infer_norm, floats(batch, window, 6),
        name="batchnorm_infer", samples=samples, step=step, train=False))
    # offset away from 0 so finite differences never straddle the ReLU kink
    relu_x = floats(batch, window, 6)
    relu_x += np.where(relu_x >= 0, 0.1, -0.1).astype(dtype)
    results.append(check_layer(ReLU(), relu_x, name="relu", samples=samples, step=step))
    results.append(check_layer(
        GlobalAveragePooling(), floats(batch, window, 6),
        name="gap", samples=samples, step=step))
    dense = Dense(6, classes, rng, dtype=dtype)
    if corrupt:
        with corrupted_backward(dense):
            results.append(check_layer(
                dense, floats(batch, 6), name="dense (corrupted)",
                samples=samples, step=step))
    else:
        results.append(check_layer(
            dense, floats(batch, 6), name="dense", samples=samples, step=step))
    results.append(check_layer(
        LSTM(6, 5, rng, dtype=dtype), floats(batch, window, 6),
        name="lstm", samples=samples, step=step))

    targets = rng.integers(0, classes, size=batch)
    for model_name in ("fcn_embedding", "fcn_onehot", "lstm_embedding", "lstm_onehot"):
        config = config_for(model_name, vocab_size=vocab, window_size=window,
                            num_classes=classes, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(seed + 1), dtype=dtype)
        results.append(check_model(model, tokens, targets, samples=samples,
                                   seed=seed, step=step, refine=double))

    return results
