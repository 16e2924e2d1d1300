"""Raw sensor log parsing and activity episode segmentation.

Input files are CASAS-style plain-text logs, one sensor event per line,
whitespace separated::

    2009-10-16 06:25:30.000088 M020 ON Bed_to_Toilet begin
    2009-10-16 06:25:32.000120 M021 ON
    ...

Fields are: date, time, sensor id, value, then an optional activity
annotation (activity name plus a "begin"/"end" marker).  Timestamps are
parsed and kept for ordering and debugging, but the classifiers never look
at them: an event contributes only its sensor id and value.

Segmentation turns the flat event stream into labeled episodes.  Events
between a begin marker and the matching end marker (both inclusive) form one
episode with that activity label; maximal runs of events outside any open
activity form episodes labeled "Other".  When annotated intervals overlap,
each event is assigned to the most recently begun still-open activity.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import IO, Iterable, Iterator

from .errors import DanglingEnd, EmptyInput, MalformedLine, UnclosedBegin

log = logging.getLogger(__name__)

OTHER_LABEL = "Other"


class Marker(Enum):
    BEGIN = "begin"
    END = "end"


@dataclass(frozen=True)
class SensorEvent:
    """One parsed log line.

    Equality is over (timestamp, sensor_id, value) only: the annotation is
    segmentation metadata, not part of the event identity.
    """

    timestamp: datetime
    sensor_id: str
    value: str
    annotation: tuple[str, Marker] | None = field(default=None, compare=False)

    @property
    def marker(self) -> Marker | None:
        return self.annotation[1] if self.annotation else None

    @property
    def activity(self) -> str | None:
        return self.annotation[0] if self.annotation else None


@dataclass
class Episode:
    """A contiguous run of events sharing one activity label."""

    label: str
    events: list[SensorEvent]

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class Dataset:
    """An ordered collection of episodes plus the label set they use.

    ``class_names`` lists the distinct labels in first-appearance order.
    ``source`` is provenance only and is ignored by equality.
    """

    episodes: list[Episode]
    class_names: list[str]
    source: str = field(default="", compare=False)

    @classmethod
    def from_episodes(cls, episodes: list[Episode], source: str = "") -> "Dataset":
        names: list[str] = []
        seen = set()
        for ep in episodes:
            if ep.label not in seen:
                seen.add(ep.label)
                names.append(ep.label)
        return cls(episodes=episodes, class_names=names, source=source)

    @property
    def num_events(self) -> int:
        return sum(len(ep) for ep in self.episodes)

    def __len__(self) -> int:
        return len(self.episodes)


@dataclass
class ParseOptions:
    lenient: bool = True


@dataclass
class ParsedLog:
    """All events parsed from one log, in file order."""

    events: list[SensorEvent]
    skipped: int = 0


_TIME_FORMATS = ("%Y-%m-%d %H:%M:%S.%f", "%Y-%m-%d %H:%M:%S")


def _parse_timestamp(date_s: str, time_s: str) -> datetime:
    text = f"{date_s} {time_s}"
    for fmt in _TIME_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    raise ValueError(f"unparseable timestamp {text!r}")


def parse_line(line: str, lineno: int | None = None) -> SensorEvent:
    """Parse one raw log line into a SensorEvent.

    Raises MalformedLine on fewer than four fields, an unparseable
    date/time, or an unknown marker word.  Lines with exactly four fields
    yield an unannotated event.
    """
    fields = line.split()
    if len(fields) < 4:
        raise MalformedLine(f"expected at least 4 fields, got {len(fields)}", lineno)
    if len(fields) == 5 or len(fields) > 6:
        raise MalformedLine(f"expected 4 or 6 fields, got {len(fields)}", lineno)
    try:
        ts = _parse_timestamp(fields[0], fields[1])
    except ValueError as exc:
        raise MalformedLine(str(exc), lineno) from exc
    annotation = None
    if len(fields) == 6:
        word = fields[5].lower()
        if word == "begin":
            annotation = (fields[4], Marker.BEGIN)
        elif word == "end":
            annotation = (fields[4], Marker.END)
        else:
            raise MalformedLine(f"unknown marker word {fields[5]!r}", lineno)
    return SensorEvent(timestamp=ts, sensor_id=fields[2], value=fields[3], annotation=annotation)


def parse_dataset(stream: Iterable[str] | IO[str], options: ParseOptions | None = None) -> ParsedLog:
    """Parse a log stream into events (file order preserved).

    In lenient mode malformed lines are skipped and counted; in strict mode
    the first malformed line aborts with its line number.  Raises EmptyInput
    when no line parses.
    """
    options = options or ParseOptions()
    events: list[SensorEvent] = []
    skipped = 0
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            events.append(parse_line(line, lineno))
        except MalformedLine as exc:
            if not options.lenient:
                raise
            skipped += 1
            log.warning("skipping malformed line %d: %s", lineno, exc)
    if not events:
        raise EmptyInput("no parseable events in input")
    return ParsedLog(events=events, skipped=skipped)


def segment_episodes(events: list[SensorEvent], strict: bool = False) -> list[Episode]:
    """Segment a time-ordered event stream into labeled episodes.

    Overlapping activities are resolved last-begin-wins: a stack of open
    activities is kept and every unannotated event joins the most recently
    begun one.  Events outside any open activity accumulate into "Other"
    episodes, one per maximal run.  An end marker with no matching begin is
    an error in strict mode and is otherwise ignored with a warning; an
    activity still open at end-of-stream is closed at the last event.
    """
    # (label, events, index of first event) for each open activity
    open_stack: list[tuple[str, list[SensorEvent], int]] = []
    other_run: list[SensorEvent] = []
    other_start = 0
    done: list[tuple[int, Episode]] = []

    def flush_other() -> None:
        nonlocal other_run
        if other_run:
            done.append((other_start, Episode(label=OTHER_LABEL, events=other_run)))
            other_run = []

    for idx, ev in enumerate(events):
        name, marker = ev.annotation if ev.annotation else (None, None)
        if marker is Marker.BEGIN:
            flush_other()
            open_stack.append((name, [ev], idx))
            continue
        if marker is Marker.END:
            pos = next(
                (i for i in range(len(open_stack) - 1, -1, -1) if open_stack[i][0] == name),
                None,
            )
            if pos is None:
                if strict:
                    raise DanglingEnd(f"end of {name!r} at event {idx} with no open begin")
                log.warning("ignoring end of %r at event %d with no open begin", name, idx)
            else:
                label, evs, first = open_stack.pop(pos)
                evs.append(ev)
                done.append((first, Episode(label=label, events=evs)))
                continue
        # unannotated (or orphaned-end) event
        if open_stack:
            open_stack[-1][1].append(ev)
        else:
            if not other_run:
                other_start = idx
            other_run.append(ev)

    if open_stack:
        names = ", ".join(name for name, _, _ in open_stack)
        if strict:
            raise UnclosedBegin(f"stream ended with open activities: {names}")
        log.warning("stream ended with open activities (%s); closing at last event", names)
        for label, evs, first in open_stack:
            done.append((first, Episode(label=label, events=evs)))
    flush_other()

    done.sort(key=lambda pair: pair[0])
    return [ep for _, ep in done]


def load_dataset(path: str, options: ParseOptions | None = None, strict_segmentation: bool = False) -> Dataset:
    """Parse a raw log file and segment it into a Dataset."""
    with open(path, "r", encoding="utf-8") as fh:
        parsed = parse_dataset(fh, options)
    episodes = segment_episodes(parsed.events, strict=strict_segmentation)
    return Dataset.from_episodes(episodes, source=str(path))


# -- dataset artifact ----------------------------------------------------------
#
# One episode per line, JSON records:
#   {"label": <activity>, "events": [{"t": <iso timestamp>, "s": <sensor>, "v": <value>}, ...]}
# Annotations are not stored: by this point the labels carry all of them.

def write_dataset(dataset: Dataset, path_or_file: str | IO[str]) -> None:
    """Write a Dataset to the newline-delimited episode artifact format."""
    if isinstance(path_or_file, str):
        with open(path_or_file, "w", encoding="utf-8") as fh:
            write_dataset(dataset, fh)
        return
    fh = path_or_file
    for ep in dataset.episodes:
        record = {
            "label": ep.label,
            "events": [
                {"t": ev.timestamp.isoformat(sep=" "), "s": ev.sensor_id, "v": ev.value}
                for ev in ep.events
            ],
        }
        fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
        fh.write("\n")


def _iter_records(lines: Iterable[str]) -> Iterator[Episode]:
    for line in lines:
        if not line.strip():
            continue
        record = json.loads(line)
        events = [
            SensorEvent(
                timestamp=datetime.fromisoformat(e["t"]),
                sensor_id=e["s"],
                value=e["v"],
            )
            for e in record["events"]
        ]
        yield Episode(label=record["label"], events=events)


def read_dataset(path_or_file: str | IO[str], source: str | None = None) -> Dataset:
    """Read a Dataset back from the episode artifact format."""
    if isinstance(path_or_file, str):
        with open(path_or_file, "r", encoding="utf-8") as fh:
            return read_dataset(fh, source=source or str(path_or_file))
    episodes = list(_iter_records(path_or_file))
    return Dataset.from_episodes(episodes, source=source or "")
