"""Train one classifier end to end on a synthetic corpus.

The pipeline: generate labeled episodes, build the vocabulary, encode,
cut windows, hold out a stratified 30% test set, carve fold 0 of a
stratified 3-fold split from the rest, and train with early stopping
(the weights that scored the best validation loss are restored before
evaluation).
"""

import numpy as np

from sewnet.encoding import build_vocabulary, encode_dataset
from sewnet.models import build_model, config_for
from sewnet.splits import stratified_kfold, stratified_split
from sewnet.synth import SynthConfig, generate
from sewnet.training import TrainConfig, evaluate, train_model
from sewnet.windows import build_window_dataset

corpus = generate(SynthConfig(num_sensors=12, num_classes=3, episodes_per_class=25,
                              min_length=4, max_length=16, sensors_per_class=4,
                              noise_rate=0.1, seed=11))
vocab = build_vocabulary(corpus.episodes)
sequences = encode_dataset(corpus.episodes, vocab)
windows = build_window_dataset(sequences, 8, vocab_size=len(vocab))
train_set, test_set = stratified_split(windows, 0.7, seed=0)
fit, val = stratified_kfold(train_set, k=3, seed=0)[0]
print(f"{len(windows)} windows at W=8, vocabulary {len(vocab)}, "
      f"fit/val/test = {len(fit)}/{len(val)}/{len(test_set)}")

config = config_for("lstm_embedding", vocab_size=len(vocab), window_size=8,
                    num_classes=len(windows.class_names))
model = build_model(config, rng=np.random.default_rng(1))
print(f"model: {config.descriptor()} ({model.num_parameters():,} parameters)")

trained, history = train_model(model, fit, val, TrainConfig(
    batch_size=64, patience=10, max_epochs=60, seed=0))
print(f"trained {history.epochs_trained} epochs, "
      f"kept weights from epoch {history.best_epoch} "
      f"(val loss {min(history.val_loss):.4f})")

report = evaluate(trained, test_set)
print(f"\ntest balanced accuracy {report.balanced_accuracy:.4f}, "
      f"weighted F1 {report.weighted_f1:.4f} over {report.num_samples} windows")
for cls in report.per_class:
    print(f"  {cls.label:12s} precision {cls.precision:.3f} recall {cls.recall:.3f} "
          f"f1 {cls.f1:.3f} support {cls.support}")
