"""Parse a raw smart-home sensor log and segment it into activity episodes.

A raw log is one sensor event per line: timestamp, sensor id, value, and
an optional "Label begin" / "Label end" annotation marking where a
resident's activity starts and stops.  Everything between a begin and its
end belongs to that activity; everything outside belongs to the catch-all
"Other" class.
"""

import io

from sewnet.events import Dataset, ParseOptions, parse_dataset, segment_episodes

RAW = """\
2009-06-10 03:20:59.08 M012 ON
2009-06-10 03:25:48.73 M014 ON Sleep begin
2009-06-10 03:25:51.19 M013 ON
2009-06-10 03:25:55.00 M014 OFF
2009-06-10 03:26:01.94 M013 OFF Sleep end
2009-06-10 03:28:11.00 M020 ON
this line is not a sensor event
2009-06-10 03:30:01.50 M019 ON Bed_to_Toilet begin
2009-06-10 03:30:28.01 M019 OFF Bed_to_Toilet end
"""

# lenient parsing counts malformed lines instead of failing on them
parsed = parse_dataset(io.StringIO(RAW), ParseOptions(lenient=True))
print(f"parsed {len(parsed.events)} events, skipped {parsed.skipped} malformed line(s)")

first = parsed.events[0]
print(f"first event: {first.timestamp} {first.sensor_id} {first.value}")

# segmentation walks the annotations and produces labeled episodes
episodes = segment_episodes(parsed.events)
dataset = Dataset.from_episodes(episodes, source="inline demo")
print(f"\n{len(dataset.episodes)} episodes, classes {dataset.class_names}:")
for episode in dataset.episodes:
    sensors = " ".join(f"{ev.sensor_id}{ev.value}" for ev in episode.events)
    print(f"  {episode.label:14s} {len(episode):2d} events  {sensors}")

# strict mode refuses the same input
try:
    parse_dataset(io.StringIO(RAW), ParseOptions(lenient=False))
except Exception as exc:
    print(f"\nstrict mode raises: {exc}")
