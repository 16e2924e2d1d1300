"""Training loop, early stopping, and the full evaluation protocol.

The protocol for one experiment: build windows at each requested size,
hold out a stratified 30% test set, train one model per cross-validation
fold (stratified, k=3) with early stopping on validation loss, restore
each fold's best weights, and evaluate all folds on the same held-out
test set.  Every random choice (splits, folds, parameter init, per-epoch
batch order) is derived from the experiment seed, so a single-threaded
rerun reproduces the report bit for bit; wall-clock timings are kept out
of the deterministic report structure.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, NonFiniteLoss
from .metrics import EvalReport, evaluate_predictions
from .models import MODEL_NAMES, Model, build_model, config_for
from .nn.layers import softmax_cross_entropy
from .nn.optim import Adam, AdamConfig
from .splits import stratified_kfold, stratified_split
from .windows import WindowDataset, build_window_dataset

_INIT_SALT = 3
_EPOCH_SALT = 4

EVAL_BATCH = 4096


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 1024
    patience: int = 20
    max_epochs: int = 500
    seed: int = 0
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidConfig(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise InvalidConfig(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs < 1:
            raise InvalidConfig(f"max_epochs must be >= 1, got {self.max_epochs}")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = 0          # 1-based epoch whose weights were restored

    @property
    def epochs_trained(self) -> int:
        return len(self.train_loss)


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence((seed, _EPOCH_SALT, epoch)))
    return rng.permutation(n)


def validation_loss(model: Model, dataset: WindowDataset) -> tuple[float, float]:
    """(mean cross entropy, plain accuracy) in inference mode."""
    total_loss = 0.0
    correct = 0
    n = len(dataset.tokens)
    for start in range(0, n, EVAL_BATCH):
        tokens = dataset.tokens[start:start + EVAL_BATCH]
        targets = dataset.label_ids[start:start + EVAL_BATCH]
        logits = model.forward(tokens, train=False)
        loss, probs, _ = softmax_cross_entropy(logits, targets)
        total_loss += loss * len(tokens)
        correct += int(np.sum(np.argmax(probs, axis=1) == targets))
    return total_loss / n, correct / n


def train_model(
    model: Model,
    fit: WindowDataset,
    val: WindowDataset,
    config: TrainConfig,
) -> tuple[Model, TrainHistory]:
    """Early-stopped training; the model ends at its best-validation epoch.

    Mini-batches follow a fresh seeded shuffle each epoch.  Validation
    loss is measured in inference mode after every epoch; only a strictly
    lower loss counts as improvement, and config.patience consecutive
    non-improvements stop the run.
    """
    optimizer = Adam(model.parameters(), AdamConfig(learning_rate=config.learning_rate))
    history = TrainHistory()
    best_loss = np.inf
    best_snapshot = model.snapshot()
    bad_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        order = _epoch_order(config.seed, epoch, len(fit.tokens))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, _ = model.loss_and_grads(fit.tokens[batch], fit.label_ids[batch], train=True)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"training loss became {loss} at epoch {epoch}")
            optimizer.step(model.gradients())
            epoch_loss += loss * len(batch)
        history.train_loss.append(epoch_loss / len(order))

        val_loss, val_acc = validation_loss(model, val)
        if not np.isfinite(val_loss):
            raise NonFiniteLoss(f"validation loss became {val_loss} at epoch {epoch}")
        history.val_loss.append(val_loss)
        history.val_accuracy.append(val_acc)

        if val_loss < best_loss:
            best_loss = val_loss
            best_snapshot = model.snapshot()
            history.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break

    model.restore(best_snapshot)
    return model, history


def evaluate(model: Model, test: WindowDataset) -> EvalReport:
    probs = model.predict_proba(test.tokens, batch_size=EVAL_BATCH)
    predictions = np.argmax(probs, axis=1)
    return evaluate_predictions(test.label_ids, predictions, test.class_names)


# -- experiments ---------------------------------------------------------------

@dataclass
class FoldResult:
    report: EvalReport
    epochs_trained: int
    best_epoch: int
    best_val_loss: float
    train_seconds: float         # wall clock; excluded from deterministic output


@dataclass
class ExperimentResult:
    model: str
    window_size: int
    folds: list[FoldResult]

    @property
    def mean_balanced_accuracy(self) -> float:
        return sum(f.report.balanced_accuracy for f in self.folds) / len(self.folds)

    @property
    def mean_weighted_f1(self) -> float:
        return sum(f.report.weighted_f1 for f in self.folds) / len(self.folds)

    @property
    def mean_train_seconds(self) -> float:
        return sum(f.train_seconds for f in self.folds) / len(self.folds)


@dataclass
class ExperimentReport:
    results: list[ExperimentResult]
    class_names: list[str]
    seed: int
    vocab_size: int

    def result_for(self, model: str, window_size: int) -> ExperimentResult:
        for r in self.results:
            if r.model == model and r.window_size == window_size:
                return r
        raise KeyError(f"no result for ({model}, {window_size})")


def _init_seed(seed: int, model_index: int, window_size: int, fold: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((seed, _INIT_SALT, model_index, window_size, fold))


@dataclass
class FoldTask:
    """One (model, window size, fold) training job; self-contained and
    order-independent, so tasks can run in worker processes."""
    model_name: str
    window_size: int
    fold_index: int
    fit: WindowDataset
    val: WindowDataset
    test: WindowDataset
    config: TrainConfig
    embedding_dim: int
    checkpoint_path: str | None = None


def execute_fold(task: FoldTask) -> FoldResult:
    model_config = config_for(task.model_name, vocab_size=task.fit.vocab_size,
                              window_size=task.window_size,
                              num_classes=len(task.fit.class_names),
                              embedding_dim=task.embedding_dim)
    rng = np.random.default_rng(_init_seed(
        task.config.seed, MODEL_NAMES.index(task.model_name),
        task.window_size, task.fold_index))
    model = build_model(model_config, rng=rng)
    started = time.perf_counter()
    model, history = train_model(model, task.fit, task.val, task.config)
    elapsed = time.perf_counter() - started
    report = evaluate(model, task.test)
    if task.checkpoint_path is not None:
        from .models import save_checkpoint

        save_checkpoint(
            model, task.checkpoint_path,
            class_names=task.fit.class_names,
            extra={
                "seed": task.config.seed,
                "window_size": task.window_size,
                "train_fraction": 0.7,
                "fold_index": task.fold_index,
                "protocol": "stratified-split+kfold",
            },
        )
    return FoldResult(
        report=report,
        epochs_trained=history.epochs_trained,
        best_epoch=history.best_epoch,
        best_val_loss=min(history.val_loss),
        train_seconds=elapsed,
    )


def run_experiment(
    sequences,
    class_names: list[str],
    vocab_size: int,
    models: list[str],
    window_sizes: list[int],
    config: TrainConfig,
    embedding_dim: int = 64,
    k: int = 3,
    jobs: int = 1,
    checkpoint_dir: str | None = None,
    progress=None,
) -> ExperimentReport:
    """Train and evaluate every (model, window size) pair with k-fold CV.

    ``sequences`` are encoded token sequences; windows are rebuilt per
    size.  ``jobs`` > 1 trains folds in that many worker processes; the
    report is identical either way because every fold is seeded on its
    own.  ``progress`` is an optional callable receiving one status line
    per trained fold.
    """
    for name in models:
        if name not in MODEL_NAMES:
            raise InvalidConfig(f"unknown model {name!r}; choose from {sorted(MODEL_NAMES)}")

    tasks = []
    for window_size in window_sizes:
        windows = build_window_dataset(sequences, window_size,
                                       class_names=class_names, vocab_size=vocab_size)
        train_set, test_set = stratified_split(windows, 0.7, seed=config.seed)
        folds = stratified_kfold(train_set, k=k, seed=config.seed)
        for name in models:
            for fold_idx, (fit, val) in enumerate(folds):
                path = None
                if checkpoint_dir is not None:
                    path = f"{checkpoint_dir}/{name}_w{window_size}_fold{fold_idx}.npz"
                tasks.append(FoldTask(
                    model_name=name, window_size=window_size, fold_index=fold_idx,
                    fit=fit, val=val, test=test_set, config=config,
                    embedding_dim=embedding_dim, checkpoint_path=path,
                ))

    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            fold_results = []
            for task, result in zip(tasks, pool.imap(execute_fold, tasks)):
                fold_results.append(result)
                _report_progress(progress, task, result, k)
    else:
        fold_results = []
        for task in tasks:
            result = execute_fold(task)
            fold_results.append(result)
            _report_progress(progress, task, result, k)

    results = []
    by_key: dict[tuple[str, int], list[FoldResult]] = {}
    for task, result in zip(tasks, fold_results):
        by_key.setdefault((task.model_name, task.window_size), []).append(result)
    for window_size in window_sizes:
        for name in models:
            results.append(ExperimentResult(name, window_size, by_key[(name, window_size)]))
    return ExperimentReport(results=results, class_names=list(class_names),
                           seed=config.seed, vocab_size=vocab_size)


def _report_progress(progress, task: FoldTask, result: FoldResult, k: int) -> None:
    if progress is None:
        return
    progress(
        f"{task.model_name} W={task.window_size} fold {task.fold_index + 1}/{k}: "
        f"bacc {result.report.balanced_accuracy:.4f} "
        f"wf1 {result.report.weighted_f1:.4f} "
        f"({result.epochs_trained} epochs, {result.train_seconds:.1f}s)"
    )


# -- report serialization --------------------------------------------------------

def report_to_dict(report: ExperimentReport, include_timings: bool = False) -> dict:
    """JSON-ready structure; timings are opt-in so reports stay reproducible."""
    out = {
        "class_names": report.class_names,
        "seed": report.seed,
        "vocab_size": report.vocab_size,
        "results": [],
    }
    for r in report.results:
        entry = {
            "model": r.model,
            "window_size": r.window_size,
            "mean_balanced_accuracy": r.mean_balanced_accuracy,
            "mean_weighted_f1": r.mean_weighted_f1,
            "folds": [
                {
                    "report": f.report.to_dict(),
                    "epochs_trained": f.epochs_trained,
                    "best_epoch": f.best_epoch,
                    "best_val_loss": f.best_val_loss,
                }
                for f in r.folds
            ],
        }
        if include_timings:
            entry["mean_train_seconds"] = r.mean_train_seconds
            for fold_entry, f in zip(entry["folds"], r.folds):
                fold_entry["train_seconds"] = f.train_seconds
        out["results"].append(entry)
    return out


def report_from_dict(data: dict) -> ExperimentReport:
    results = []
    for entry in data["results"]:
        folds = [
            FoldResult(
                report=EvalReport.from_dict(f["report"]),
                epochs_trained=f["epochs_trained"],
                best_epoch=f["best_epoch"],
                best_val_loss=f["best_val_loss"],
                train_seconds=f.get("train_seconds", 0.0),
            )
            for f in entry["folds"]
        ]
        results.append(ExperimentResult(entry["model"], entry["window_size"], folds))
    return ExperimentReport(results=results, class_names=data["class_names"],
                           seed=data["seed"], vocab_size=data["vocab_size"])


def timings_to_dict(report: ExperimentReport) -> dict:
    return {
        "results": [
            {
                "model": r.model,
                "window_size": r.window_size,
                "mean_train_seconds": r.mean_train_seconds,
                "fold_train_seconds": [f.train_seconds for f in r.folds],
            }
            for r in report.results
        ]
    }


def save_report(report: ExperimentReport, path: str, include_timings: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report, include_timings), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path: str) -> ExperimentReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def render_table(report: ExperimentReport, timings: dict | None = None) -> str:
    """Score grid: one row per model variant, one column per window size.

    Cells show mean weighted F1 / mean balanced accuracy as percentages;
    with timings, a per-model average training time column is appended.
    """
    window_sizes = sorted({r.window_size for r in report.results}, reverse=True)
    models = []
    for r in report.results:
        if r.model not in models:
            models.append(r.model)
    time_by_model: dict[str, list[float]] = {}
    if timings:
        for entry in timings["results"]:
            time_by_model.setdefault(entry["model"], []).append(entry["mean_train_seconds"])

    header = ["model"] + [f"W={w}" for w in window_sizes]
    if time_by_model:
        header.append("avg train s")
    rows = [header]
    for name in models:
        row = [name]
        for w in window_sizes:
            try:
                r = report.result_for(name, w)
            except KeyError:
                row.append("-")
                continue
            row.append(f"{100 * r.mean_weighted_f1:.2f}/{100 * r.mean_balanced_accuracy:.2f}")
        if time_by_model:
            values = time_by_model.get(name)
            row.append(f"{sum(values) / len(values):.1f}" if values else "-")
        rows.append(row)

    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(len(header))))
    lines.append("")
    lines.append("cells: weighted F1 / balanced accuracy, % (mean over folds)")
    return "\n".join(lines)


# -- experiment config files -----------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    models: list[str]
    window_sizes: list[int]
    seed: int = 0
    batch_size: int = 1024
    patience: int = 20
    max_epochs: int = 500
    learning_rate: float = 1e-3
    embedding_dim: int = 64

    def train_config(self) -> TrainConfig:
        return TrainConfig(batch_size=self.batch_size, patience=self.patience,
                           max_epochs=self.max_epochs, seed=self.seed,
                           learning_rate=self.learning_rate)


def parse_experiment_spec(text: str) -> ExperimentSpec:
    """Parse a flat "key = value" config; '#' starts a comment.

    Keys: models and window_sizes (comma-separated), seed, batch_size,
    patience, max_epochs, learning_rate, embedding_dim.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()

    known = {"models", "window_sizes", "seed", "batch_size", "patience",
             "max_epochs", "learning_rate", "embedding_dim"}
    unknown = set(values) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    if "models" not in values or "window_sizes" not in values:
        raise InvalidConfig("config must set both 'models' and 'window_sizes'")

    models = [m.strip() for m in values["models"].split(",") if m.strip()]
    for m in models:
        if m not in MODEL_NAMES:
            raise InvalidConfig(f"unknown model {m!r}; choose from {sorted(MODEL_NAMES)}")
    try:
        window_sizes = [int(w) for w in values["window_sizes"].split(",") if w.strip()]
        spec = ExperimentSpec(
            models=models,
            window_sizes=window_sizes,
            seed=int(values.get("seed", "0")),
            batch_size=int(values.get("batch_size", "1024")),
            patience=int(values.get("patience", "20")),
            max_epochs=int(values.get("max_epochs", "500")),
            learning_rate=float(values.get("learning_rate", "1e-3")),
            embedding_dim=int(values.get("embedding_dim", "64")),
        )
    except ValueError as exc:
        raise InvalidConfig(f"bad numeric value in config: {exc}") from exc
    if not window_sizes or any(w < 1 for w in window_sizes):
        raise InvalidConfig(f"window_sizes must be positive, got {window_sizes}")
    return spec
