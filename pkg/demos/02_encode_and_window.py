"""Turn episodes into sensor words, frequency-ranked tokens, and windows.

Each event becomes one "sensor word" (sensor id + normalized value, e.g.
M014ON).  Words are indexed by corpus frequency: the most common word is
1, the next 2, and so on; 0 is reserved to pad windows.  A window of
size W ending at event t holds the W most recent tokens, left-padded
with zeros while the episode is still shorter than W, so every event
yields exactly one window.
"""

from sewnet.encoding import build_vocabulary, encode_dataset
from sewnet.synth import SynthConfig, generate
from sewnet.windows import build_window_dataset, windows_for_sequence

corpus = generate(SynthConfig(num_sensors=8, num_classes=2, episodes_per_class=4,
                              min_length=3, max_length=7, sensors_per_class=3,
                              noise_rate=0.0, seed=5))
print(f"corpus: {len(corpus.episodes)} episodes, classes {corpus.class_names}")

vocab = build_vocabulary(corpus.episodes)
print(f"\nvocabulary ({len(vocab)} words, most frequent first):")
for index in range(1, min(len(vocab), 6) + 1):
    word = vocab.word(index)
    print(f"  {index:2d} {word:8s} seen {vocab.counts[word]} times")

sequences = encode_dataset(corpus.episodes, vocab)
seq = sequences[0]
print(f"\nfirst episode ({seq.label}) as tokens: {seq.tokens}")

print("\nwindows of size 4, one per event (zeros are padding):")
for window in windows_for_sequence(seq, size=4):
    print(f"  end event {window.origin[1]}: {window.tokens.tolist()}")

windows = build_window_dataset(sequences, 4, vocab_size=len(vocab))
counts = {name: int(count)
          for name, count in zip(windows.class_names, windows.class_counts())}
print(f"\nwhole corpus at W=4: {windows.tokens.shape[0]} windows "
      f"(= total events), class counts {counts}")
