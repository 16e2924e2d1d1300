"""Minimal differentiable-computation kernel.

Plain numpy arrays are the tensor type: shape plus row-major data, double
precision for verification and single precision for training runs.  Each
layer implements an explicit forward/backward pair; gradients are validated
against central finite differences (see gradcheck).
"""

from .layers import (
    BatchNorm,
    Conv1D,
    Dense,
    Embedding,
    GlobalAveragePooling,
    Layer,
    LSTM,
    OneHot,
    ReLU,
    dense_softmax_ce,
    softmax,
    softmax_cross_entropy,
)
from .optim import Adam, AdamConfig
from .gradcheck import check_layer, check_model, corrupted_backward, max_relative_error

__all__ = [
    "Adam",
    "AdamConfig",
    "BatchNorm",
    "Conv1D",
    "Dense",
    "Embedding",
    "GlobalAveragePooling",
    "LSTM",
    "Layer",
    "OneHot",
    "ReLU",
    "check_layer",
    "check_model",
    "corrupted_backward",
    "dense_softmax_ce",
    "max_relative_error",
    "softmax",
    "softmax_cross_entropy",
]
