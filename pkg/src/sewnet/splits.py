"""Stratified train/test splitting and stratified k-fold assignment.

Both operations shuffle within each class with an rng derived from
(seed, operation salt, class index), so partitions are deterministic for a
fixed seed, stable under changes to other classes, and the split and the
fold assignment never share a stream.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import ClassTooSmall
from .windows import WindowDataset

_SPLIT_SALT = 1
_FOLD_SALT = 2


def _class_rng(seed: int, salt: int, class_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, salt, class_index)))


def _round_half_up(value: Fraction) -> int:
    return math.floor(value + Fraction(1, 2))


def stratified_split_indices(
    label_ids: np.ndarray,
    num_classes: int,
    train_fraction: float = 0.7,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (train, test); every present class appears in both.

    Per class with n windows, round-half-up(train_fraction * n) go to the
    train side, at least 1 to each side; the fraction is taken in exact
    arithmetic so counts like 0.7 * 15 round as written, not as floats.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ClassTooSmall(f"train_fraction must be in (0, 1), got {train_fraction}")
    fraction = Fraction(str(train_fraction))
    label_ids = np.asarray(label_ids)
    train_parts = []
    test_parts = []
    for c in range(num_classes):
        indices = np.flatnonzero(label_ids == c)
        n = len(indices)
        if n == 0:
            continue
        if n < 2:
            raise ClassTooSmall(f"class {c} has {n} window(s); need at least 2 to split")
        n_train = _round_half_up(fraction * n)
        n_train = min(max(n_train, 1), n - 1)
        order = _class_rng(seed, _SPLIT_SALT, c).permutation(n)
        shuffled = indices[order]
        train_parts.append(shuffled[:n_train])
        test_parts.append(shuffled[n_train:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    return train, test


def stratified_fold_indices(
    label_ids: np.ndarray,
    num_classes: int,
    k: int = 3,
    seed: int = 0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """k (fit, validation) index pairs; validation folds partition the input.

    Per class, a seeded shuffle is dealt into k folds whose sizes differ by
    at most 1, larger folds first.
    """
    if k < 2:
        raise ClassTooSmall(f"k must be >= 2, got {k}")
    label_ids = np.asarray(label_ids)
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for c in range(num_classes):
        indices = np.flatnonzero(label_ids == c)
        n = len(indices)
        if n == 0:
            continue
        if n < k:
            raise ClassTooSmall(f"class {c} has {n} window(s); need at least k={k}")
        order = _class_rng(seed, _FOLD_SALT, c).permutation(n)
        shuffled = indices[order]
        base, extra = divmod(n, k)
        start = 0
        for i in range(k):
            size = base + (1 if i < extra else 0)
            folds[i].append(shuffled[start:start + size])
            start += size
    fold_arrays = [np.sort(np.concatenate(parts)) for parts in folds]
    pairs = []
    for i in range(k):
        val = fold_arrays[i]
        fit = np.sort(np.concatenate([fold_arrays[j] for j in range(k) if j != i]))
        pairs.append((fit, val))
    return pairs


def stratified_split(
    dataset: WindowDataset,
    train_fraction: float = 0.7,
    seed: int = 0,
) -> tuple[WindowDataset, WindowDataset]:
    train_idx, test_idx = stratified_split_indices(
        dataset.label_ids, len(dataset.class_names), train_fraction, seed
    )
    return dataset.subset(train_idx), dataset.subset(test_idx)


def stratified_kfold(
    dataset: WindowDataset,
    k: int = 3,
    seed: int = 0,
) -> list[tuple[WindowDataset, WindowDataset]]:
    pairs = stratified_fold_indices(dataset.label_ids, len(dataset.class_names), k, seed)
    return [(dataset.subset(fit), dataset.subset(val)) for fit, val in pairs]
