"""Command line entry points.

Subcommands: prepare (raw log -> episode + vocabulary artifacts), synth
(generate a synthetic raw log), train (full experiment: windows, split,
cross-validation, checkpoints, report), evaluate (re-score a checkpoint
on an artifact's held-out test split), report (render a score table),
and gradcheck (verify analytic gradients).

Every command exits 0 on success and nonzero with a one-line diagnostic
on stderr otherwise.  All flags use long names.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .encoding import (
    NormalizationPolicy,
    build_vocabulary,
    encode_dataset,
    load_vocabulary,
    save_vocabulary,
)
from .errors import ArchitectureMismatch, SewnetError
from .events import Dataset, ParseOptions, parse_dataset, segment_episodes
from .events import read_dataset, write_dataset
from .models import MODEL_NAMES, load_checkpoint
from .splits import stratified_split
from .synth import SynthConfig, generate, write_log
from .training import (
    TrainConfig,
    evaluate,
    load_report,
    parse_experiment_spec,
    render_table,
    run_experiment,
    save_report,
    timings_to_dict,
)
from .windows import build_window_dataset

EPISODES_FILE = "episodes.jsonl"
VOCABULARY_FILE = "vocabulary.tsv"
PRECISION_ENV = "SEWNET_PRECISION"

# flag defaults for train; kept separate so a --config file can fill in
# anything the command line leaves unset
TRAIN_DEFAULTS = {
    "models": list(MODEL_NAMES),
    "window_sizes": [100, 75, 50, 25],
    "seed": 0,
    "batch_size": 1024,
    "patience": 20,
    "max_epochs": 500,
    "learning_rate": 1e-3,
    "embedding_dim": 64,
}


def _positive_int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _model_list(text: str) -> list[str]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    for name in names:
        if name not in MODEL_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown model {name!r}; choose from {sorted(MODEL_NAMES)}")
    if not names:
        raise argparse.ArgumentTypeError("expected at least one model name")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sewnet",
        description="Activity classification from smart-home sensor event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse a raw log into episode and vocabulary artifacts")
    p.add_argument("--input", required=True, help="raw sensor log file")
    p.add_argument("--output-dir", required=True, help="directory for the artifacts")
    p.add_argument("--normalization", default="identity",
                   choices=[policy.value for policy in NormalizationPolicy],
                   help="sensor value normalization policy")
    p.add_argument("--strict", action="store_true",
                   help="fail on malformed lines and unbalanced annotations")

    p = sub.add_parser("synth", help="generate a synthetic raw sensor log")
    p.add_argument("--output", required=True, help="raw log file to write")
    p.add_argument("--num-sensors", type=int, default=40)
    p.add_argument("--num-classes", type=int, default=6)
    p.add_argument("--episodes-per-class", type=int, default=200)
    p.add_argument("--min-length", type=int, default=5)
    p.add_argument("--max-length", type=int, default=150)
    p.add_argument("--sensors-per-class", type=int, default=6)
    p.add_argument("--noise-rate", type=float, default=0.1)
    p.add_argument("--imbalance", type=float, default=1.0)
    p.add_argument("--other-episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="run the full training and evaluation protocol")
    p.add_argument("--artifact-dir", required=True,
                   help="directory holding the prepare artifacts")
    p.add_argument("--output-dir", required=True,
                   help="directory for checkpoints and reports")
    p.add_argument("--config", default=None,
                   help="experiment config file (key = value lines); "
                        "explicit flags override it")
    p.add_argument("--models", type=_model_list, default=None,
                   help="comma-separated variants (default: all four)")
    p.add_argument("--window-sizes", type=_positive_int_list, default=None,
                   help="comma-separated window sizes (default: 100,75,50,25)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--embedding-dim", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for fold-level parallelism")
    p.add_argument("--no-checkpoints", action="store_true",
                   help="skip writing model checkpoints")

    p = sub.add_parser("evaluate", help="re-score a checkpoint on an artifact's test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--artifact-dir", required=True)
    p.add_argument("--window-size", type=int, default=None,
                   help="must match the checkpoint's window size (default: use it)")
    p.add_argument("--output", default=None, help="write the report as JSON here")

    p = sub.add_parser("report", help="render an experiment report as a table")
    p.add_argument("--report", required=True, help="report JSON from train")
    p.add_argument("--timings", default=None, help="optional timings JSON from train")

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--corrupt", action="store_true",
                   help="negative control: corrupt one backward pass, expect failure")
    p.add_argument("--samples", type=int, default=40,
                   help="sampled coordinates per parameter tensor")

    return parser


def _load_artifacts(artifact_dir: str):
    directory = Path(artifact_dir)
    dataset = read_dataset(str(directory / EPISODES_FILE))
    vocab = load_vocabulary(str(directory / VOCABULARY_FILE))
    sequences = encode_dataset(dataset.episodes, vocab)
    return dataset, vocab, sequences


def _artifact_class_names(sequences) -> list[str]:
    names: list[str] = []
    for seq in sequences:
        if seq.label not in names:
            names.append(seq.label)
    return names


def cmd_prepare(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        parsed = parse_dataset(fh, ParseOptions(lenient=not args.strict))
    episodes = segment_episodes(parsed.events, strict=args.strict)
    dataset = Dataset.from_episodes(episodes, source=args.input)
    vocab = build_vocabulary(dataset.episodes, policy=args.normalization)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, str(outdir / EPISODES_FILE))
    save_vocabulary(vocab, str(outdir / VOCABULARY_FILE))
    print(
        f"events={dataset.num_events} episodes={len(dataset.episodes)} "
        f"classes={len(dataset.class_names)} vocabulary={len(vocab)} "
        f"skipped_lines={parsed.skipped}"
    )
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(
        num_sensors=args.num_sensors,
        num_classes=args.num_classes,
        episodes_per_class=args.episodes_per_class,
        min_length=args.min_length,
        max_length=args.max_length,
        sensors_per_class=args.sensors_per_class,
        noise_rate=args.noise_rate,
        imbalance=args.imbalance,
        other_episodes=args.other_episodes,
        seed=args.seed,
    )
    dataset = generate(config)
    write_log(dataset, args.output)
    print(
        f"episodes={len(dataset.episodes)} events={dataset.num_events} "
        f"classes={len(dataset.class_names)} -> {args.output}"
    )
    return 0


def _resolve_train_settings(args) -> dict:
    """Explicit flag > config file > built-in default, per setting."""
    settings = dict(TRAIN_DEFAULTS)
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            spec = parse_experiment_spec(fh.read())
        settings.update(
            models=spec.models, window_sizes=spec.window_sizes, seed=spec.seed,
            batch_size=spec.batch_size, patience=spec.patience,
            max_epochs=spec.max_epochs, learning_rate=spec.learning_rate,
            embedding_dim=spec.embedding_dim,
        )
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    return settings


def cmd_train(args) -> int:
    opts = _resolve_train_settings(args)
    _, vocab, sequences = _load_artifacts(args.artifact_dir)
    class_names = _artifact_class_names(sequences)

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    config = TrainConfig(batch_size=opts["batch_size"], patience=opts["patience"],
                         max_epochs=opts["max_epochs"], seed=opts["seed"],
                         learning_rate=opts["learning_rate"])
    report = run_experiment(
        sequences, class_names, len(vocab),
        models=opts["models"], window_sizes=opts["window_sizes"], config=config,
        embedding_dim=opts["embedding_dim"], jobs=args.jobs,
        checkpoint_dir=None if args.no_checkpoints else str(outdir),
        progress=lambda line: print(line, flush=True),
    )
    save_report(report, str(outdir / "report.json"))
    timings = timings_to_dict(report)
    with open(outdir / "timings.json", "w", encoding="utf-8") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print()
    print(render_table(report, timings))
    return 0


def cmd_evaluate(args) -> int:
    model, header, _ = load_checkpoint(args.checkpoint)
    extra = header.get("extra", {})
    window_size = header["config"]["window_size"]
    if args.window_size is not None and args.window_size != window_size:
        raise ArchitectureMismatch(
            f"checkpoint was trained at window size {window_size}, "
            f"asked to evaluate at {args.window_size}"
        )
    _, vocab, sequences = _load_artifacts(args.artifact_dir)
    if len(vocab) != header["config"]["vocab_size"]:
        raise ArchitectureMismatch(
            f"artifact vocabulary has {len(vocab)} words, checkpoint expects "
            f"{header['config']['vocab_size']}"
        )
    class_names = header["class_names"]
    windows = build_window_dataset(sequences, window_size,
                                   class_names=class_names, vocab_size=len(vocab))
    _, test_set = stratified_split(windows, extra.get("train_fraction", 0.7),
                                   seed=extra.get("seed", 0))
    report = evaluate(model, test_set)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"balanced_accuracy={report.balanced_accuracy:.6f} "
        f"weighted_f1={report.weighted_f1:.6f} samples={report.num_samples}"
    )
    return 0


def cmd_report(args) -> int:
    report = load_report(args.report)
    timings = None
    if args.timings:
        with open(args.timings, "r", encoding="utf-8") as fh:
            timings = json.load(fh)
    print(render_table(report, timings))
    return 0


def cmd_gradcheck(args) -> int:
    from .nn.gradcheck import standard_checks

    precision = os.environ.get(PRECISION_ENV, "double").lower()
    if precision in ("double", "float64", ""):
        dtype = np.float64
    elif precision in ("single", "float32"):
        dtype = np.float32
    else:
        raise SewnetError(f"{PRECISION_ENV} must be single or double, got {precision!r}")

    results = standard_checks(samples=args.samples, dtype=dtype, corrupt=args.corrupt)
    failed = False
    for result in results:
        status = "ok  " if result.ok() else "FAIL"
        print(f"{status} {result}")
        failed = failed or not result.ok()
    print(f"{'FAIL' if failed else 'pass'}: {len(results)} checks")
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "prepare": cmd_prepare,
        "synth": cmd_synth,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "report": cmd_report,
        "gradcheck": cmd_gradcheck,
    }
    try:
        return handlers[args.command](args)
    except SewnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
