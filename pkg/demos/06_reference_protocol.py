"""Reproduce the reference results on real CASAS smart-home recordings.

The CASAS project (Washington State University) publishes annotated
smart-home datasets at https://casas.wsu.edu/datasets/ - this toolkit's
log parser reads their single-resident "milan" and "aruba" releases
directly.  The data is not bundled here; download and extract it, then
point SEWNET_CASAS at the directory holding milan/data and aruba/data.

Reference bands for the embedding FCN under the full protocol (70/30
stratified split, 3-fold cross-validation, early stopping, batch 1024):

    milan  W=25   weighted F1 94.33 +/- 3
    aruba  W=100  weighted F1 100.00 -3, balanced accuracy 95.37 +/- 3

Expect hours of CPU time per house; the same run is available through
the command line:

    sewnet prepare --input $SEWNET_CASAS/milan/data --output-dir milan_art
    sewnet train --artifact-dir milan_art --output-dir milan_run \\
        --models fcn_embedding --window-sizes 25
"""

import os
import sys
from pathlib import Path

from sewnet.encoding import build_vocabulary, encode_dataset
from sewnet.events import Dataset, ParseOptions, parse_dataset, segment_episodes
from sewnet.training import TrainConfig, render_table, run_experiment, timings_to_dict

RUNS = (("milan", 25), ("aruba", 100))

root = os.environ.get("SEWNET_CASAS")
if not root:
    print(__doc__)
    print("SEWNET_CASAS is not set; nothing to run.")
    sys.exit(0)

for house, window_size in RUNS:
    log = Path(root) / house / "data"
    if not log.is_file():
        print(f"{house}: {log} not found, skipping")
        continue
    with open(log, "r", encoding="utf-8") as fh:
        parsed = parse_dataset(fh, ParseOptions(lenient=True))
    dataset = Dataset.from_episodes(segment_episodes(parsed.events), source=str(log))
    vocab = build_vocabulary(dataset.episodes)
    sequences = encode_dataset(dataset.episodes, vocab)
    print(f"{house}: {dataset.num_events} events, {len(dataset.episodes)} episodes, "
          f"{len(dataset.class_names)} classes, vocabulary {len(vocab)}")

    report = run_experiment(
        sequences, dataset.class_names, len(vocab),
        models=["fcn_embedding"], window_sizes=[window_size],
        config=TrainConfig(batch_size=1024, patience=20, max_epochs=500, seed=0),
        progress=print,
    )
    print(render_table(report, timings_to_dict(report)))
