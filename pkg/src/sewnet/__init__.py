"""Activity recognition from smart-home sensor event logs.

The pipeline: parse raw annotated logs into labeled episodes (events),
encode sensor events as frequency-ranked words (encoding), cut the
streams into fixed-length event windows (windows), classify windows with
from-scratch FCN or LSTM models (models, nn), and score them under a
stratified split / cross-validation protocol (splits, training,
metrics).  synth generates labeled logs for testing and the cli module
exposes the whole pipeline as subcommands.
"""

from .encoding import (
    NormalizationPolicy,
    TokenSequence,
    Vocabulary,
    build_vocabulary,
    encode_dataset,
    encode_episode,
    load_vocabulary,
    make_word,
    normalize_value,
    save_vocabulary,
)
from .errors import (
    ArchitectureMismatch,
    ClassTooSmall,
    DanglingEnd,
    DegenerateBatch,
    EmptyCorpus,
    EmptyInput,
    EmptyMatrix,
    InvalidConfig,
    MalformedLine,
    NonFiniteLoss,
    NonFiniteValue,
    SewnetError,
    ShapeMismatch,
    TargetOutOfRange,
    TokenOutOfRange,
    UnclosedBegin,
    UnknownWord,
)
from .events import (
    Dataset,
    Episode,
    Marker,
    ParseOptions,
    SensorEvent,
    load_dataset,
    parse_dataset,
    parse_line,
    read_dataset,
    segment_episodes,
    write_dataset,
)
from .metrics import (
    ClassReport,
    EvalReport,
    accuracy,
    balanced_accuracy,
    confusion_matrix,
    evaluate_predictions,
    weighted_f1,
)
from .models import (
    MODEL_NAMES,
    Model,
    ModelConfig,
    build_fcn,
    build_lstm,
    build_model,
    config_for,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from .splits import (
    stratified_fold_indices,
    stratified_kfold,
    stratified_split,
    stratified_split_indices,
)
from .synth import SynthConfig, format_log, generate, write_log
from .training import (
    ExperimentReport,
    ExperimentResult,
    ExperimentSpec,
    FoldResult,
    TrainConfig,
    TrainHistory,
    evaluate,
    load_report,
    parse_experiment_spec,
    render_table,
    run_experiment,
    save_report,
    train_model,
    validation_loss,
)
from .windows import (
    Window,
    WindowDataset,
    build_window_dataset,
    load_windows,
    save_windows,
    windows_for_sequence,
)

__version__ = "0.1.0"
