"""Sensor words, frequency-ranked vocabulary, and integer token sequences.

A sensor word is the concatenation of a sensor id and its (normalized)
value: sensor M001 reporting ON becomes the word "M001ON".  Words are then
indexed by corpus frequency — the most frequent word gets index 1, ties are
broken lexicographically — and index 0 is reserved for sequence padding.

Numeric sensor values (temperature readings) would produce an unbounded
vocabulary if used verbatim, so they are rounded before concatenation.
The normalization policy is recorded in the vocabulary so that encoding and
decoding always agree.

Note: the vocabulary is built over the entire dataset before any train/test
split.  This mirrors the pipeline order the classifiers are trained under,
and means no unknown words can occur at encode time for in-corpus data; it
is also a mild form of leakage, which users comparing against held-out
protocols should keep in mind.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP
from enum import Enum
from typing import IO, Iterable

from .errors import EmptyCorpus, UnknownWord
from .events import Episode


class NormalizationPolicy(Enum):
    IDENTITY = "identity"
    NEAREST_INTEGER = "nearest-integer"
    NEAREST_HALF = "nearest-half"


def _as_policy(policy: "NormalizationPolicy | str") -> NormalizationPolicy:
    if isinstance(policy, NormalizationPolicy):
        return policy
    return NormalizationPolicy(policy)


def _as_number(value: str) -> Decimal | None:
    try:
        number = Decimal(value)
    except InvalidOperation:
        return None
    if not number.is_finite():
        return None
    return number


def normalize_value(value: str, policy: "NormalizationPolicy | str") -> str:
    """Round a numeric value per policy; symbolic values pass through."""
    policy = _as_policy(policy)
    if policy is NormalizationPolicy.IDENTITY:
        return value
    number = _as_number(value)
    if number is None:
        return value
    if policy is NormalizationPolicy.NEAREST_INTEGER:
        return str(number.quantize(Decimal(1), rounding=ROUND_HALF_UP))
    # nearest-half: round 2x to an integer, halve exactly
    doubled = (number * 2).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    half = doubled / 2
    return str(half.quantize(Decimal(1)) if half == half.to_integral_value() else half)


def make_word(sensor_id: str, value: str, policy: "NormalizationPolicy | str" = NormalizationPolicy.IDENTITY) -> str:
    """Concatenate a sensor id and its normalized value into one word."""
    return sensor_id + normalize_value(value, policy)


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between sensor words and frequency-ranked indexes.

    Indexes run 1..len(vocab); more frequent words get lower indexes and
    count ties are broken by lexicographic word order.  Index 0 is never
    assigned: it is reserved for window padding.
    """

    word_to_index: dict[str, int]
    counts: dict[str, int]
    policy: NormalizationPolicy = NormalizationPolicy.IDENTITY
    index_to_word: list[str | None] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inverse: list[str | None] = [None] * (len(self.word_to_index) + 1)
        for word, index in self.word_to_index.items():
            inverse[index] = word
        object.__setattr__(self, "index_to_word", inverse)

    def __len__(self) -> int:
        return len(self.word_to_index)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_index

    @property
    def unknown_index(self) -> int:
        """Index for out-of-vocabulary words when that policy is enabled."""
        return len(self.word_to_index) + 1

    def index(self, word: str) -> int:
        try:
            return self.word_to_index[word]
        except KeyError:
            raise UnknownWord(f"word {word!r} not in vocabulary") from None

    def word(self, index: int) -> str:
        word = self.index_to_word[index] if 0 < index < len(self.index_to_word) else None
        if word is None:
            raise UnknownWord(f"index {index} not in vocabulary")
        return word

    def decode(self, tokens: Iterable[int]) -> list[str]:
        return [self.word(t) for t in tokens]


@dataclass
class TokenSequence:
    """One episode as vocabulary indexes, plus its activity label."""

    tokens: list[int]
    label: str

    def __len__(self) -> int:
        return len(self.tokens)


def build_vocabulary(
    episodes: Iterable[Episode],
    policy: "NormalizationPolicy | str" = NormalizationPolicy.IDENTITY,
) -> Vocabulary:
    """Count sensor words over all episodes and rank them by frequency."""
    policy = _as_policy(policy)
    counts: Counter[str] = Counter()
    for ep in episodes:
        counts.update(make_word(ev.sensor_id, ev.value, policy) for ev in ep.events)
    if not counts:
        raise EmptyCorpus("no events to build a vocabulary from")
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    word_to_index = {word: i for i, (word, _) in enumerate(ranked, start=1)}
    return Vocabulary(word_to_index=word_to_index, counts=dict(counts), policy=policy)


def encode_episode(episode: Episode, vocab: Vocabulary, unknown: str = "error") -> TokenSequence:
    """Encode one episode's events as vocabulary indexes.

    ``unknown`` selects what happens to out-of-vocabulary words: "error"
    raises UnknownWord (the default; cannot happen when the vocabulary was
    built over the same corpus), "index" maps them to vocab.unknown_index.
    """
    if unknown not in ("error", "index"):
        raise ValueError(f"unknown= must be 'error' or 'index', got {unknown!r}")
    tokens: list[int] = []
    for ev in episode.events:
        word = make_word(ev.sensor_id, ev.value, vocab.policy)
        idx = vocab.word_to_index.get(word)
        if idx is None:
            if unknown == "error":
                raise UnknownWord(f"word {word!r} not in vocabulary")
            idx = vocab.unknown_index
        tokens.append(idx)
    return TokenSequence(tokens=tokens, label=episode.label)


def encode_dataset(episodes: Iterable[Episode], vocab: Vocabulary, unknown: str = "error") -> list[TokenSequence]:
    return [encode_episode(ep, vocab, unknown=unknown) for ep in episodes]


# -- vocabulary file -------------------------------------------------------
#
#   #normalization=<policy>
#   1<TAB>M001ON<TAB>5012
#   2<TAB>M002OFF<TAB>4711
#   ...

def save_vocabulary(vocab: Vocabulary, path_or_file: str | IO[str]) -> None:
    if isinstance(path_or_file, str):
        with open(path_or_file, "w", encoding="utf-8") as fh:
            save_vocabulary(vocab, fh)
        return
    fh = path_or_file
    fh.write(f"#normalization={vocab.policy.value}\n")
    for index in range(1, len(vocab) + 1):
        word = vocab.index_to_word[index]
        fh.write(f"{index}\t{word}\t{vocab.counts[word]}\n")


def load_vocabulary(path_or_file: str | IO[str]) -> Vocabulary:
    if isinstance(path_or_file, str):
        with open(path_or_file, "r", encoding="utf-8") as fh:
            return load_vocabulary(fh)
    fh = path_or_file
    header = fh.readline().strip()
    prefix = "#normalization="
    if not header.startswith(prefix):
        raise ValueError(f"vocabulary file missing {prefix!r} header")
    policy = NormalizationPolicy(header[len(prefix):])
    word_to_index: dict[str, int] = {}
    counts: dict[str, int] = {}
    for line in fh:
        if not line.strip():
            continue
        index_s, word, count_s = line.rstrip("\n").split("\t")
        word_to_index[word] = int(index_s)
        counts[word] = int(count_s)
    return Vocabulary(word_to_index=word_to_index, counts=counts, policy=policy)
