"""Synthetic labeled sensor-event traces.

Each labeled class prefers a subset of sensors; its episodes draw events
uniformly from that subset, then each event is independently replaced by
a uniformly random sensor event with probability noise_rate (a stand-in
for pet-induced noise).  An extra "Other" class draws entirely uniform
events.  Class sizes follow a geometric ladder so the largest class has
``imbalance`` times the episodes of the smallest.  Generation is
deterministic: every episode has its own rng derived from (seed, class,
episode index), so results do not depend on generation order.

Timestamps are a monotonic one-second counter rendered as date-times;
the classification pipeline ignores them, but the log format needs them.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .errors import InvalidConfig
from .events import Dataset, Episode, SensorEvent

OTHER_LABEL = "Other"

_EPISODE_SALT = 5
_START_TIME = datetime(2010, 1, 1, 0, 0, 0)

VALUES = ("ON", "OFF")


@dataclass(frozen=True)
class SynthConfig:
    num_sensors: int = 40
    num_classes: int = 6
    episodes_per_class: int = 200
    min_length: int = 5
    max_length: int = 150
    sensors_per_class: int = 6
    noise_rate: float = 0.1
    imbalance: float = 1.0
    other_episodes: int | None = None    # None: same as episodes_per_class
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise InvalidConfig(f"num_classes must be >= 2, got {self.num_classes}")
        if self.num_sensors < 1:
            raise InvalidConfig(f"num_sensors must be >= 1, got {self.num_sensors}")
        if not 2 <= self.min_length <= self.max_length:
            raise InvalidConfig(
                "need 2 <= min_length <= max_length, got "
                f"{self.min_length}..{self.max_length}"
            )
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InvalidConfig(f"noise_rate must be in [0, 1], got {self.noise_rate}")
        if self.imbalance < 1.0:
            raise InvalidConfig(f"imbalance must be >= 1, got {self.imbalance}")
        if not 1 <= self.sensors_per_class <= self.num_sensors:
            raise InvalidConfig(
                f"sensors_per_class must be in [1, {self.num_sensors}], "
                f"got {self.sensors_per_class}"
            )
        if self.episodes_per_class < 1:
            raise InvalidConfig(
                f"episodes_per_class must be >= 1, got {self.episodes_per_class}"
            )
        if round(self.episodes_per_class / self.imbalance) < 1:
            raise InvalidConfig(
                f"imbalance {self.imbalance} would empty the smallest class"
            )

    @property
    def num_other(self) -> int:
        return self.episodes_per_class if self.other_episodes is None else self.other_episodes


def class_sizes(config: SynthConfig) -> list[int]:
    """Episode count per labeled class: geometric ladder, largest first."""
    c = config.num_classes
    top = config.episodes_per_class
    if config.imbalance == 1.0 or c == 1:
        return [top] * c
    ratio = config.imbalance ** (-1.0 / (c - 1))
    return [max(1, round(top * ratio ** i)) for i in range(c)]


def class_sensor_sets(config: SynthConfig) -> list[list[int]]:
    """Preferred sensor subset per class, spread over the sensor range.

    Classes start sensors_apart = num_sensors // num_classes indices apart;
    subsets are disjoint when sensors_per_class fits in that stride and
    overlap progressively (harder task) when it does not.
    """
    stride = max(1, config.num_sensors // config.num_classes)
    return [
        [(c * stride + j) % config.num_sensors for j in range(config.sensors_per_class)]
        for c in range(config.num_classes)
    ]


def _sensor_name(index: int) -> str:
    return f"S{index + 1:03d}"


def _episode_events(rng: np.random.Generator, preferred: list[int] | None,
                    config: SynthConfig) -> list[tuple[int, str]]:
    length = int(rng.integers(config.min_length, config.max_length + 1))
    if preferred is None:
        sensors = rng.integers(0, config.num_sensors, size=length)
    else:
        sensors = rng.choice(np.asarray(preferred), size=length)
        noisy = rng.random(length) < config.noise_rate
        sensors = np.where(noisy, rng.integers(0, config.num_sensors, size=length), sensors)
    values = rng.integers(0, 2, size=length)
    return [(int(s), VALUES[v]) for s, v in zip(sensors, values)]


def generate(config: SynthConfig) -> Dataset:
    """Labeled episodes for every class plus "Other", deterministic by seed."""
    sizes = class_sizes(config)
    sensor_sets = class_sensor_sets(config)
    drafts: list[tuple[str, list[tuple[int, str]]]] = []
    for c in range(config.num_classes):
        label = f"Activity{c + 1:02d}"
        for e in range(sizes[c]):
            rng = np.random.default_rng(np.random.SeedSequence(
                (config.seed, _EPISODE_SALT, c, e)))
            drafts.append((label, _episode_events(rng, sensor_sets[c], config)))
    for e in range(config.num_other):
        rng = np.random.default_rng(np.random.SeedSequence(
            (config.seed, _EPISODE_SALT, config.num_classes, e)))
        drafts.append((OTHER_LABEL, _episode_events(rng, None, config)))

    episodes = []
    clock = 0
    for label, events in drafts:
        materialized = []
        for sensor_index, value in events:
            materialized.append(SensorEvent(
                timestamp=_START_TIME + timedelta(seconds=clock),
                sensor_id=_sensor_name(sensor_index),
                value=value,
            ))
            clock += 1
        episodes.append(Episode(label=label, events=materialized))
    return Dataset.from_episodes(episodes, source="synth")


def weave_for_log(episodes: list[Episode]) -> list[Episode]:
    """Order episodes so no two unannotated ("Other") episodes are adjacent.

    The raw log marks labeled episodes with begin/end lines and leaves
    "Other" events bare; adjacent bare runs would merge when parsed back,
    so they must be separated by labeled episodes.
    """
    labeled = [ep for ep in episodes if ep.label != OTHER_LABEL]
    others = [ep for ep in episodes if ep.label == OTHER_LABEL]
    if len(others) > len(labeled):
        raise InvalidConfig(
            f"cannot write {len(others)} 'Other' episodes between "
            f"{len(labeled)} labeled ones without merging them"
        )
    woven = []
    emitted = 0
    for i, ep in enumerate(labeled):
        woven.append(ep)
        want = (i + 1) * len(others) // len(labeled) if labeled else 0
        if emitted < want:
            woven.append(others[emitted])
            emitted += 1
    woven.extend(others[emitted:])
    return woven


def format_log(dataset: Dataset) -> str:
    """Raw log text: one event per line, begin/end markers around episodes."""
    lines = []
    for ep in weave_for_log(dataset.episodes):
        annotated = ep.label != OTHER_LABEL
        if annotated and len(ep.events) < 2:
            raise InvalidConfig(
                f"episode of {ep.label!r} has {len(ep.events)} event(s); "
                "the log format needs separate begin and end lines"
            )
        for i, ev in enumerate(ep.events):
            stamp = ev.timestamp.isoformat(sep=" ")
            fields = [stamp, ev.sensor_id, ev.value]
            if annotated and i == 0:
                fields += [ep.label, "begin"]
            elif annotated and i == len(ep.events) - 1:
                fields += [ep.label, "end"]
            lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def write_log(dataset: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_log(dataset))
