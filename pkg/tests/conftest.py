import numpy as np
import pytest

from sewnet.encoding import build_vocabulary, encode_dataset
from sewnet.synth import SynthConfig, generate
from sewnet.windows import build_window_dataset

RAW_LOG = """\
2009-10-16 00:01:04.000059 M028 ON
2009-10-16 06:25:30.000088 M020 ON Bed_to_Toilet begin
2009-10-16 06:25:32.000011 M021 ON
2009-10-16 06:25:34.000000 M020 OFF Bed_to_Toilet end
2009-10-16 06:26:01.000000 M028 OFF
2009-10-16 06:27:00.000000 M019 ON Sleep begin
2009-10-16 06:27:05.000000 M019 OFF Sleep end
"""


@pytest.fixture(scope="session")
def tiny_synth():
    """Small labeled dataset: 3 easy classes plus Other, no noise."""
    config = SynthConfig(num_sensors=12, num_classes=3, episodes_per_class=25,
                         min_length=4, max_length=16, sensors_per_class=4,
                         noise_rate=0.0, seed=11)
    return generate(config)


@pytest.fixture(scope="session")
def tiny_windows(tiny_synth):
    """The tiny synth corpus tokenized and windowed at W=8."""
    vocab = build_vocabulary(tiny_synth.episodes)
    sequences = encode_dataset(tiny_synth.episodes, vocab)
    return build_window_dataset(sequences, 8, vocab_size=len(vocab))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
