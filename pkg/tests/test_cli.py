"""End-to-end tests of the command line interface.

Every test drives ``sewnet.cli.main`` in process with an argv list and
asserts on exit codes, printed output, and files written under tmp
directories.  A small synthetic corpus is generated once per module and
shared by the prepare/train/evaluate tests.
"""

import json
import os

import pytest

from sewnet.cli import main

# small but non-degenerate: 4 classes (3 labeled + Other), 24 episodes
SYNTH_ARGS = [
    "--num-sensors", "12", "--num-classes", "3", "--episodes-per-class", "6",
    "--min-length", "4", "--max-length", "10", "--sensors-per-class", "4",
    "--noise-rate", "0.0", "--seed", "11",
]

# a cheap LSTM run: two epochs at window 8 finish in well under a second
TRAIN_ARGS = [
    "--models", "lstm_embedding", "--window-sizes", "8",
    "--max-epochs", "2", "--batch-size", "64", "--embedding-dim", "8",
    "--seed", "3",
]

MISMATCH_LOG = """\
2010-01-01 00:00:00\tM001\tON\tSleep begin
2010-01-01 00:00:01\tM001\tOFF
2010-01-01 00:00:02\tM002\tON\tSleep end
"""


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def raw_log(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_synth") / "raw.log"
    assert main(["synth", "--output", str(path), *SYNTH_ARGS]) == 0
    return path


@pytest.fixture(scope="module")
def artifact_dir(raw_log, tmp_path_factory):
    directory = tmp_path_factory.mktemp("cli_artifacts")
    assert main(["prepare", "--input", str(raw_log), "--output-dir", str(directory)]) == 0
    return directory


@pytest.fixture(scope="module")
def train_dir(artifact_dir, tmp_path_factory):
    directory = tmp_path_factory.mktemp("cli_train")
    assert main(["train", "--artifact-dir", str(artifact_dir),
                 "--output-dir", str(directory), *TRAIN_ARGS]) == 0
    return directory


class TestSynth:
    def test_log_lines_match_reported_events(self, raw_log, capsys):
        assert main(["synth", "--output", str(raw_log), *SYNTH_ARGS]) == 0
        out = capsys.readouterr().out
        events = int(out.split("events=")[1].split()[0])
        with open(raw_log, encoding="utf-8") as fh:
            assert sum(1 for _ in fh) == events
        assert "episodes=" in out and "classes=4" in out

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        rc = main(["synth", "--output", str(tmp_path / "x.log"), "--min-length", "0"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")


class TestPrepare:
    def test_prints_summary_counts(self, raw_log, tmp_path, capsys):
        assert main(["prepare", "--input", str(raw_log), "--output-dir", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        for key in ("events=", "episodes=", "classes=", "vocabulary=", "skipped_lines=0"):
            assert key in out

    def test_idempotent_byte_for_byte(self, raw_log, artifact_dir, tmp_path):
        assert main(["prepare", "--input", str(raw_log), "--output-dir", str(tmp_path)]) == 0
        for name in ("episodes.jsonl", "vocabulary.tsv"):
            assert read_bytes(tmp_path / name) == read_bytes(artifact_dir / name)

    def test_lenient_skips_malformed_lines(self, raw_log, tmp_path, capsys):
        noisy = tmp_path / "noisy.log"
        noisy.write_text(raw_log.read_text() + "not a sensor line\n", encoding="utf-8")
        assert main(["prepare", "--input", str(noisy), "--output-dir", str(tmp_path / "a")]) == 0
        assert "skipped_lines=1" in capsys.readouterr().out

    def test_strict_rejects_malformed_lines(self, raw_log, tmp_path, capsys):
        noisy = tmp_path / "noisy.log"
        noisy.write_text(raw_log.read_text() + "not a sensor line\n", encoding="utf-8")
        rc = main(["prepare", "--input", str(noisy),
                   "--output-dir", str(tmp_path / "a"), "--strict"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_input_exits_2(self, tmp_path, capsys):
        rc = main(["prepare", "--input", str(tmp_path / "absent.log"),
                   "--output-dir", str(tmp_path / "a")])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")


class TestTrain:
    def test_writes_report_timings_and_checkpoints(self, train_dir):
        assert (train_dir / "report.json").exists()
        assert (train_dir / "timings.json").exists()
        for fold in range(3):
            assert (train_dir / f"lstm_embedding_w8_fold{fold}.npz").exists()

    def test_report_structure(self, train_dir):
        report = json.loads((train_dir / "report.json").read_text())
        (entry,) = report["results"]
        assert entry["model"] == "lstm_embedding"
        assert entry["window_size"] == 8
        assert len(entry["folds"]) == 3
        assert all(f["epochs_trained"] == 2 for f in entry["folds"])
        assert "train_seconds" not in entry["folds"][0]
        timings = json.loads((train_dir / "timings.json").read_text())
        assert len(timings["results"][0]["fold_train_seconds"]) == 3

    def test_prints_progress_and_table(self, artifact_dir, tmp_path, capsys):
        assert main(["train", "--artifact-dir", str(artifact_dir),
                     "--output-dir", str(tmp_path), *TRAIN_ARGS]) == 0
        out = capsys.readouterr().out
        for fold in (1, 2, 3):
            assert f"lstm_embedding W=8 fold {fold}/3:" in out
        assert "model" in out and "W=8" in out and "avg train s" in out

    def test_same_seed_reports_are_byte_identical(self, artifact_dir, train_dir, tmp_path):
        assert main(["train", "--artifact-dir", str(artifact_dir),
                     "--output-dir", str(tmp_path), *TRAIN_ARGS]) == 0
        assert read_bytes(tmp_path / "report.json") == read_bytes(train_dir / "report.json")

    def test_flag_overrides_config_file(self, artifact_dir, tmp_path):
        config = tmp_path / "experiment.conf"
        config.write_text(
            "models = lstm_embedding\nwindow_sizes = 8\nmax_epochs = 1\n"
            "batch_size = 64\nembedding_dim = 8\nseed = 3\n",
            encoding="utf-8",
        )
        assert main(["train", "--artifact-dir", str(artifact_dir),
                     "--output-dir", str(tmp_path / "a"), "--config", str(config),
                     "--no-checkpoints"]) == 0
        report = json.loads((tmp_path / "a" / "report.json").read_text())
        assert all(f["epochs_trained"] == 1 for f in report["results"][0]["folds"])

        assert main(["train", "--artifact-dir", str(artifact_dir),
                     "--output-dir", str(tmp_path / "b"), "--config", str(config),
                     "--max-epochs", "2", "--no-checkpoints"]) == 0
        report = json.loads((tmp_path / "b" / "report.json").read_text())
        assert all(f["epochs_trained"] == 2 for f in report["results"][0]["folds"])

    def test_no_checkpoints_writes_no_npz(self, artifact_dir, tmp_path):
        assert main(["train", "--artifact-dir", str(artifact_dir),
                     "--output-dir", str(tmp_path), *TRAIN_ARGS, "--no-checkpoints"]) == 0
        assert not [name for name in os.listdir(tmp_path) if name.endswith(".npz")]

    def test_bad_config_file_exits_2(self, artifact_dir, tmp_path, capsys):
        config = tmp_path / "experiment.conf"
        config.write_text("models = lstm_embedding\n", encoding="utf-8")
        rc = main(["train", "--artifact-dir", str(artifact_dir),
                   "--output-dir", str(tmp_path / "a"), "--config", str(config)])
        assert rc == 2
        assert "window_sizes" in capsys.readouterr().err

    def test_missing_artifacts_exit_2(self, tmp_path, capsys):
        rc = main(["train", "--artifact-dir", str(tmp_path / "absent"),
                   "--output-dir", str(tmp_path / "out"), *TRAIN_ARGS])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")


class TestEvaluate:
    def test_reproduces_fold_report_exactly(self, artifact_dir, train_dir, tmp_path, capsys):
        out_json = tmp_path / "eval.json"
        assert main(["evaluate", "--checkpoint", str(train_dir / "lstm_embedding_w8_fold0.npz"),
                     "--artifact-dir", str(artifact_dir), "--output", str(out_json)]) == 0
        saved = json.loads((train_dir / "report.json").read_text())
        fold0 = saved["results"][0]["folds"][0]["report"]
        assert json.loads(out_json.read_text()) == fold0
        out = capsys.readouterr().out
        assert f"balanced_accuracy={fold0['balanced_accuracy']:.6f}" in out
        assert f"samples={fold0['num_samples']}" in out

    def test_matching_window_size_accepted(self, artifact_dir, train_dir):
        assert main(["evaluate", "--checkpoint", str(train_dir / "lstm_embedding_w8_fold1.npz"),
                     "--artifact-dir", str(artifact_dir), "--window-size", "8"]) == 0

    def test_window_size_mismatch_exits_2(self, artifact_dir, train_dir, capsys):
        rc = main(["evaluate", "--checkpoint", str(train_dir / "lstm_embedding_w8_fold0.npz"),
                   "--artifact-dir", str(artifact_dir), "--window-size", "9"])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("error:") and "window size 8" in err

    def test_vocabulary_mismatch_exits_2(self, train_dir, tmp_path, capsys):
        log = tmp_path / "tiny.log"
        log.write_text(MISMATCH_LOG, encoding="utf-8")
        other = tmp_path / "art"
        assert main(["prepare", "--input", str(log), "--output-dir", str(other)]) == 0
        capsys.readouterr()
        rc = main(["evaluate", "--checkpoint", str(train_dir / "lstm_embedding_w8_fold0.npz"),
                   "--artifact-dir", str(other)])
        assert rc == 2
        assert "vocabulary" in capsys.readouterr().err

    def test_missing_checkpoint_exits_2(self, artifact_dir, tmp_path, capsys):
        rc = main(["evaluate", "--checkpoint", str(tmp_path / "absent.npz"),
                   "--artifact-dir", str(artifact_dir)])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")


class TestReport:
    def test_renders_table_from_saved_report(self, train_dir, capsys):
        assert main(["report", "--report", str(train_dir / "report.json")]) == 0
        out = capsys.readouterr().out
        assert "lstm_embedding" in out and "W=8" in out
        assert "avg train s" not in out

    def test_timings_add_time_column(self, train_dir, capsys):
        assert main(["report", "--report", str(train_dir / "report.json"),
                     "--timings", str(train_dir / "timings.json")]) == 0
        assert "avg train s" in capsys.readouterr().out

    def test_missing_report_exits_2(self, tmp_path, capsys):
        assert main(["report", "--report", str(tmp_path / "absent.json")]) == 2
        assert capsys.readouterr().err.startswith("error:")


class TestGradcheck:
    def test_passes_in_double_precision(self, monkeypatch, capsys):
        monkeypatch.delenv("SEWNET_PRECISION", raising=False)
        assert main(["gradcheck", "--samples", "4"]) == 0
        out = capsys.readouterr().out
        assert out.count("ok  ") == 12
        assert "pass: 12 checks" in out

    def test_corrupt_control_exits_1(self, monkeypatch, capsys):
        monkeypatch.delenv("SEWNET_PRECISION", raising=False)
        assert main(["gradcheck", "--samples", "4", "--corrupt"]) == 1
        out = capsys.readouterr().out
        assert "FAIL dense (corrupted)" in out
        assert "FAIL: 12 checks" in out

    def test_single_precision_diagnostic_exits_1(self, monkeypatch, capsys):
        monkeypatch.setenv("SEWNET_PRECISION", "single")
        assert main(["gradcheck", "--samples", "4"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_unknown_precision_exits_2(self, monkeypatch, capsys):
        monkeypatch.setenv("SEWNET_PRECISION", "half")
        assert main(["gradcheck", "--samples", "4"]) == 2
        assert "SEWNET_PRECISION" in capsys.readouterr().err


class TestArgumentErrors:
    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate"],
        ["prepare", "--input", "x.log"],
        ["train", "--artifact-dir", "a", "--output-dir", "b", "--models", "perceptron"],
        ["train", "--artifact-dir", "a", "--output-dir", "b", "--window-sizes", "0"],
        ["train", "--artifact-dir", "a", "--output-dir", "b", "--window-sizes", "ten"],
        ["prepare", "--input", "x.log", "--output-dir", "a", "--normalization", "sqrt"],
    ])
    def test_bad_arguments_exit_2(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
        capsys.readouterr()
