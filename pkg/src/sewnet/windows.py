"""Sensor event windows: fixed-length, stride-one slices of token sequences.

Every event in a sequence yields exactly one window: the window ending at
event t holds the last min(t+1, W) tokens, left-padded with zeros to length
W.  The newest event therefore always sits in the last position, windows
never cross episode boundaries, and a sequence of length L produces L
windows for any W — one classification opportunity per event.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterator, Sequence

import numpy as np

from .encoding import TokenSequence

TOKEN_DTYPE = np.int32


@dataclass
class Window:
    """One fixed-length window: padded tokens, label, and provenance.

    ``origin`` is (sequence index, end event index within the sequence).
    """

    tokens: np.ndarray
    label: str
    origin: tuple[int, int]


@dataclass
class WindowDataset:
    """All windows of one corpus at a fixed window size, stored columnar.

    ``tokens`` is an [N, W] integer array, ``label_ids`` an [N] array of
    indexes into ``class_names``, and ``origins`` an [N, 2] array of
    (sequence index, end event index) pairs.  ``vocab_size`` records the
    vocabulary the tokens were encoded with (0 = unknown).
    """

    tokens: np.ndarray
    label_ids: np.ndarray
    class_names: list[str]
    window_size: int
    origins: np.ndarray
    vocab_size: int = 0

    def __len__(self) -> int:
        return self.tokens.shape[0]

    def window(self, i: int) -> Window:
        return Window(
            tokens=self.tokens[i],
            label=self.class_names[self.label_ids[i]],
            origin=(int(self.origins[i, 0]), int(self.origins[i, 1])),
        )

    def __iter__(self) -> Iterator[Window]:
        return (self.window(i) for i in range(len(self)))

    @property
    def windows(self) -> list[Window]:
        return list(self)

    def subset(self, indices: np.ndarray) -> "WindowDataset":
        """A new WindowDataset over the given rows (class_names shared)."""
        indices = np.asarray(indices)
        return WindowDataset(
            tokens=self.tokens[indices],
            label_ids=self.label_ids[indices],
            class_names=self.class_names,
            window_size=self.window_size,
            origins=self.origins[indices],
            vocab_size=self.vocab_size,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.label_ids, minlength=len(self.class_names))


def _window_matrix(tokens: Sequence[int], size: int) -> np.ndarray:
    """[L, size] matrix of causal, left-zero-padded windows."""
    arr = np.asarray(tokens, dtype=TOKEN_DTYPE)
    padded = np.concatenate([np.zeros(size - 1, dtype=TOKEN_DTYPE), arr])
    return np.lib.stride_tricks.sliding_window_view(padded, size).copy()


def windows_for_sequence(seq: TokenSequence, size: int, seq_index: int = 0) -> list[Window]:
    """All windows of one sequence, oldest end-event first."""
    if size < 1:
        raise ValueError(f"window size must be >= 1, got {size}")
    matrix = _window_matrix(seq.tokens, size)
    return [Window(tokens=matrix[t], label=seq.label, origin=(seq_index, t)) for t in range(len(seq))]


def build_window_dataset(
    sequences: list[TokenSequence],
    size: int,
    class_names: list[str] | None = None,
    vocab_size: int = 0,
) -> WindowDataset:
    """Window every sequence and stack the results in input order.

    ``class_names`` fixes the label ordering (defaults to first appearance
    over the sequences); every sequence label must be covered.
    """
    if size < 1:
        raise ValueError(f"window size must be >= 1, got {size}")
    if class_names is None:
        class_names = []
        seen = set()
        for seq in sequences:
            if seq.label not in seen:
                seen.add(seq.label)
                class_names.append(seq.label)
    name_to_id = {name: i for i, name in enumerate(class_names)}

    blocks: list[np.ndarray] = []
    label_ids: list[np.ndarray] = []
    origins: list[np.ndarray] = []
    for si, seq in enumerate(sequences):
        matrix = _window_matrix(seq.tokens, size)
        blocks.append(matrix)
        label_ids.append(np.full(len(seq), name_to_id[seq.label], dtype=TOKEN_DTYPE))
        origin = np.empty((len(seq), 2), dtype=np.int64)
        origin[:, 0] = si
        origin[:, 1] = np.arange(len(seq))
        origins.append(origin)

    if blocks:
        tokens = np.concatenate(blocks, axis=0)
        ids = np.concatenate(label_ids)
        orig = np.concatenate(origins, axis=0)
    else:
        tokens = np.zeros((0, size), dtype=TOKEN_DTYPE)
        ids = np.zeros(0, dtype=TOKEN_DTYPE)
        orig = np.zeros((0, 2), dtype=np.int64)
    return WindowDataset(
        tokens=tokens,
        label_ids=ids,
        class_names=class_names,
        window_size=size,
        origins=orig,
        vocab_size=vocab_size,
    )


# -- window artifact -------------------------------------------------------
#
# Header record {"window_size":..., "class_names":[...], "vocab_size":...},
# then one record {"label":..., "tokens":[...]} per window.

def save_windows(dataset: WindowDataset, path_or_file: str | IO[str]) -> None:
    if isinstance(path_or_file, str):
        with open(path_or_file, "w", encoding="utf-8") as fh:
            save_windows(dataset, fh)
        return
    fh = path_or_file
    header = {
        "window_size": dataset.window_size,
        "class_names": dataset.class_names,
        "vocab_size": dataset.vocab_size,
    }
    fh.write(json.dumps(header, ensure_ascii=False, separators=(",", ":")) + "\n")
    for i in range(len(dataset)):
        record = {
            "label": dataset.class_names[dataset.label_ids[i]],
            "tokens": [int(t) for t in dataset.tokens[i]],
        }
        fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")


def load_windows(path_or_file: str | IO[str]) -> WindowDataset:
    if isinstance(path_or_file, str):
        with open(path_or_file, "r", encoding="utf-8") as fh:
            return load_windows(fh)
    fh = path_or_file
    header = json.loads(fh.readline())
    class_names = list(header["class_names"])
    name_to_id = {name: i for i, name in enumerate(class_names)}
    size = int(header["window_size"])
    tokens: list[list[int]] = []
    ids: list[int] = []
    for line in fh:
        if not line.strip():
            continue
        record = json.loads(line)
        tokens.append(record["tokens"])
        ids.append(name_to_id[record["label"]])
    n = len(tokens)
    origins = np.full((n, 2), -1, dtype=np.int64)  # provenance is not stored
    return WindowDataset(
        tokens=np.asarray(tokens, dtype=TOKEN_DTYPE).reshape(n, size),
        label_ids=np.asarray(ids, dtype=TOKEN_DTYPE),
        class_names=class_names,
        window_size=size,
        origins=origins,
        vocab_size=int(header["vocab_size"]),
    )
