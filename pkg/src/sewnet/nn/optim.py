"""Adam optimizer with bias-corrected moment estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7


class Adam:
    """Per-parameter first/second moment averages, updated in place.

    Parameters are a flat dict name -> array; each step consumes a matching
    dict of gradients.  Moment buffers are lazily keyed by the same names,
    so every parameter evolves independently of the others.
    """

    def __init__(self, params: dict[str, np.ndarray], config: AdamConfig | None = None):
        self.params = params
        self.config = config if config is not None else AdamConfig()
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        if set(grads) != set(self.params):
            missing = set(self.params) ^ set(grads)
            raise ShapeMismatch(f"gradient keys do not match parameters: {sorted(missing)}")
        c = self.config
        self.step_count += 1
        t = self.step_count
        # fold both bias corrections into one scalar multiplier on the step
        scale = c.learning_rate * np.sqrt(1.0 - c.beta2 ** t) / (1.0 - c.beta1 ** t)
        for key, param in self.params.items():
            g = grads[key]
            if g.shape != param.shape:
                raise ShapeMismatch(
                    f"gradient for {key} has shape {g.shape}, parameter has {param.shape}"
                )
            m, v = self.m[key], self.v[key]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * np.square(g)
            param -= scale * m / (np.sqrt(v) + c.eps)

    # -- checkpoint support -----------------------------------------------

    def state(self) -> dict[str, np.ndarray]:
        out = {"step_count": np.array(self.step_count, dtype=np.int64)}
        for key, value in self.m.items():
            out[f"m/{key}"] = value
        for key, value in self.v.items():
            out[f"v/{key}"] = value
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        self.step_count = int(state["step_count"])
        for key in self.m:
            self.m[key][...] = state[f"m/{key}"]
            self.v[key][...] = state[f"v/{key}"]
