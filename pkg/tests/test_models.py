import numpy as np
import pytest

from sewnet.errors import InvalidConfig
from sewnet.models import (
    MODEL_NAMES,
    ModelConfig,
    build_fcn,
    build_lstm,
    build_model,
    config_for,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from sewnet.nn.optim import Adam


def fcn_config(**overrides):
    base = dict(classifier="fcn", front_end="embedding", vocab_size=300,
                window_size=25, num_classes=12, embedding_dim=64)
    base.update(overrides)
    return ModelConfig(**base)


class TestModelConfig:
    def test_names(self):
        assert set(MODEL_NAMES) == {
            "fcn_embedding", "fcn_onehot", "lstm_embedding", "lstm_onehot"
        }

    def test_config_for(self):
        config = config_for("lstm_onehot", vocab_size=10, window_size=25,
                            num_classes=3)
        assert config.classifier == "lstm"
        assert config.front_end == "onehot"
        assert config.name == "lstm_onehot"

    def test_unknown_name_raises(self):
        with pytest.raises(InvalidConfig):
            config_for("cnn_embedding", vocab_size=10, window_size=25,
                       num_classes=3)

    def test_invalid_sizes_raise(self):
        with pytest.raises(InvalidConfig):
            fcn_config(vocab_size=0)
        with pytest.raises(InvalidConfig):
            fcn_config(window_size=-1)

    def test_descriptor(self):
        config = fcn_config(vocab_size=309)
        assert config.descriptor() == (
            "fcn(emb=64,conv=128x8,256x5,128x3,classes=12,window=25,vocab=309)"
        )
        lstm = config_for("lstm_onehot", vocab_size=80, window_size=50,
                          num_classes=8)
        assert lstm.descriptor() == (
            "lstm(onehot,hidden=64,classes=8,window=50,vocab=80)"
        )


class TestFCNShapes:
    def test_stage_shapes(self, rng):
        model = build_fcn(fcn_config())
        tokens = rng.integers(0, 301, size=(4, 25))
        x = tokens
        shapes = []
        for layer in model.layers:
            x = layer.forward(x, train=True)
            shapes.append(x.shape)
        assert shapes[0] == (4, 25, 64)     # embedding
        assert shapes[1] == (4, 25, 128)    # conv 128x8
        assert shapes[4] == (4, 25, 256)    # conv 256x5
        assert shapes[7] == (4, 25, 128)    # conv 128x3
        assert shapes[-2] == (4, 128)       # gap
        assert shapes[-1] == (4, 12)        # logits

    def test_onehot_first_conv_width(self):
        model = build_fcn(fcn_config(front_end="onehot", vocab_size=300))
        conv = next(layer for layer in model.layers if layer.kind == "conv1d")
        assert conv.in_channels == 301

    def test_conv_stack_parameter_count(self):
        # per conv block: K * Cin * Cout weights + Cout biases
        model = build_fcn(fcn_config())
        convs = [layer for layer in model.layers if layer.kind == "conv1d"]
        total = sum(p.size for c in convs for p in c.params.values())
        expected = (8 * 64 * 128 + 128) + (5 * 128 * 256 + 256) + (3 * 256 * 128 + 128)
        assert expected == 328_192
        assert total == expected

    def test_parameter_count_independent_of_window(self):
        a = build_fcn(fcn_config(window_size=25)).num_parameters()
        b = build_fcn(fcn_config(window_size=100)).num_parameters()
        assert a == b

    def test_all_padding_logits_equal_bias_shift(self, rng):
        # zero the padding embedding row: every conv sees constant zero
        # input, BN in inference mode keeps it constant, GAP collapses it,
        # so the logits depend only on the final dense bias
        model = build_fcn(fcn_config(num_classes=3))
        model.layers[0].params["table"][0] = 0.0
        tokens = np.zeros((2, 25), dtype=np.int64)
        logits = model.forward(tokens, train=False)
        dense = model.layers[-1]
        assert np.allclose(logits[0], logits[1])
        # with zero bias the two logits rows are a pure function of weights
        dense.params["b"][:] = [1.0, 2.0, 3.0]
        shifted = model.forward(tokens, train=False)
        assert np.allclose(shifted - logits, [1.0, 2.0, 3.0], atol=1e-6)


class TestLSTMShapes:
    def test_output_shape(self, rng):
        config = config_for("lstm_embedding", vocab_size=50, window_size=25,
                            num_classes=16)
        model = build_lstm(config)
        tokens = rng.integers(0, 51, size=(3, 25))
        assert model.forward(tokens).shape == (3, 16)

    def test_hidden_64_regardless_of_window(self):
        for window in (25, 100):
            config = config_for("lstm_embedding", vocab_size=50,
                                window_size=window, num_classes=4)
            model = build_lstm(config)
            lstm = next(layer for layer in model.layers if layer.kind == "lstm")
            assert lstm.hidden == 64

    def test_classifier_mismatch_raises(self):
        with pytest.raises(InvalidConfig):
            build_lstm(fcn_config())
        with pytest.raises(InvalidConfig):
            build_fcn(config_for("lstm_embedding", vocab_size=5,
                                 window_size=5, num_classes=2))


class TestPredict:
    def test_rows_sum_to_one(self, rng):
        config = config_for("fcn_embedding", vocab_size=30, window_size=10,
                            num_classes=5, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(2))
        tokens = rng.integers(0, 31, size=(40, 10))
        probs = predict(model, tokens)
        assert probs.shape == (40, 5)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6

    def test_identical_windows_identical_rows(self, rng):
        config = config_for("lstm_embedding", vocab_size=30, window_size=10,
                            num_classes=5, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(2))
        window = rng.integers(0, 31, size=(1, 10))
        tokens = np.repeat(window, 6, axis=0)
        probs = predict(model, tokens)
        assert np.array_equal(probs, np.repeat(probs[:1], 6, axis=0))

    def test_batching_invariance(self, rng):
        config = config_for("fcn_embedding", vocab_size=30, window_size=10,
                            num_classes=5, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(2))
        tokens = rng.integers(0, 31, size=(30, 10))
        assert np.array_equal(predict(model, tokens, batch_size=7),
                              predict(model, tokens, batch_size=1000))


class TestTrainability:
    def test_single_batch_overfit(self, rng):
        # a tiny model must drive the loss near zero on one fixed batch
        config = config_for("fcn_embedding", vocab_size=12, window_size=8,
                            num_classes=3, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(3),
                            dtype=np.float64)
        tokens = rng.integers(1, 13, size=(12, 8))
        targets = rng.integers(0, 3, size=12)
        opt = Adam(model.parameters())
        loss = np.inf
        for _ in range(500):
            loss, _ = model.loss_and_grads(tokens, targets, train=True)
            if loss < 1e-2:
                break
            opt.step(model.gradients())
        assert loss < 1e-2


class TestSnapshotRestore:
    def test_round_trip_exact(self, rng):
        config = config_for("fcn_embedding", vocab_size=12, window_size=8,
                            num_classes=3, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(3))
        saved = model.snapshot()
        tokens = rng.integers(0, 13, size=(6, 8))
        before = model.forward(tokens, train=False)
        # perturb everything, then restore
        for v in model.parameters().values():
            v += 0.25
        model.restore(saved)
        after = model.forward(tokens, train=False)
        assert np.array_equal(before, after)


class TestCheckpointFile:
    def test_round_trip_bit_exact(self, rng, tmp_path):
        config = config_for("lstm_embedding", vocab_size=15, window_size=6,
                            num_classes=3, embedding_dim=8)
        model = build_model(config, rng=np.random.default_rng(4),
                            dtype=np.float64)
        tokens = rng.integers(0, 16, size=(5, 6))
        targets = rng.integers(0, 3, size=5)
        opt = Adam(model.parameters())
        for _ in range(3):
            model.loss_and_grads(tokens, targets, train=True)
            opt.step(model.gradients())

        path = str(tmp_path / "model.npz")
        save_checkpoint(model, path, class_names=["a", "b", "c"],
                        optimizer_state=opt.state(), extra={"seed": 9})
        loaded, header, optim_state = load_checkpoint(path)

        assert header["descriptor"] == config.descriptor()
        assert header["class_names"] == ["a", "b", "c"]
        assert header["extra"] == {"seed": 9}
        assert loaded.config == config
        for key, value in model.parameters().items():
            assert np.array_equal(loaded.parameters()[key], value)
        for key, value in model.layer_state().items():
            assert np.array_equal(loaded.layer_state()[key], value)
        assert int(optim_state["step_count"]) == 3
        probs_in = predict(model, tokens)
        probs_out = predict(loaded, tokens)
        assert np.array_equal(probs_in, probs_out)

    def test_rejects_foreign_npz(self, tmp_path):
        from sewnet.errors import ArchitectureMismatch
        path = str(tmp_path / "other.npz")
        np.savez(path, data=np.zeros(3))
        with pytest.raises((ArchitectureMismatch, KeyError)):
            load_checkpoint(path)
