import numpy as np
import pytest

from sewnet.errors import EmptyMatrix
from sewnet.metrics import (
    EvalReport,
    accuracy,
    balanced_accuracy,
    confusion_matrix,
    evaluate_predictions,
    weighted_f1,
)


def pairs_from_confusion(confusion):
    """Expand a count matrix back into explicit (true, predicted) pairs."""
    pairs = []
    for t, row in enumerate(confusion):
        for p, count in enumerate(row):
            pairs.extend([(t, p)] * count)
    return pairs


def brute_balanced_accuracy(pairs):
    """Mean per-class recall, recomputed from raw pairs in pure Python."""
    classes = sorted({t for t, _ in pairs})
    recalls = []
    for c in classes:
        mine = [(t, p) for t, p in pairs if t == c]
        recalls.append(sum(1 for t, p in mine if p == t) / len(mine))
    return sum(recalls) / len(recalls)


def brute_weighted_f1(pairs, num_classes):
    """Support-weighted F1, recomputed from raw pairs in pure Python."""
    total = len(pairs)
    acc = 0.0
    for c in range(num_classes):
        tp = sum(1 for t, p in pairs if t == c and p == c)
        support = sum(1 for t, _ in pairs if t == c)
        predicted = sum(1 for _, p in pairs if p == c)
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
        acc += f1 * support
    return acc / total


class TestConfusionMatrix:
    def test_counts(self):
        matrix = confusion_matrix([0, 0, 1, 1, 1], [0, 1, 1, 1, 0], 2)
        assert matrix == [[1, 1], [1, 2]]

    def test_length_mismatch_raises(self):
        with pytest.raises(EmptyMatrix):
            confusion_matrix([0, 1], [0], 2)

    def test_out_of_range_raises(self):
        with pytest.raises(EmptyMatrix):
            confusion_matrix([0, 2], [0, 0], 2)

    def test_pairs_round_trip(self):
        rng = np.random.default_rng(3)
        y_true = rng.integers(0, 4, size=50)
        y_pred = rng.integers(0, 4, size=50)
        matrix = confusion_matrix(y_true, y_pred, 4)
        pairs = sorted(pairs_from_confusion(matrix))
        assert pairs == sorted(zip(y_true.tolist(), y_pred.tolist()))


class TestBalancedAccuracy:
    def test_perfect(self):
        assert balanced_accuracy([[5, 0], [0, 5]]) == 1.0

    def test_worked_example(self):
        assert balanced_accuracy([[3, 1], [2, 2]]) == 0.625

    def test_unsupported_class_ignored(self):
        assert balanced_accuracy([[3, 0, 1], [0, 0, 0], [0, 0, 4]]) == pytest.approx(
            (3 / 4 + 1.0) / 2
        )

    def test_imbalance_invariance(self):
        # balanced accuracy ignores class priors: scaling one class's row
        # leaves it unchanged
        base = balanced_accuracy([[8, 2], [3, 7]])
        scaled = balanced_accuracy([[80, 20], [3, 7]])
        assert scaled == pytest.approx(base)

    def test_empty_matrix_raises(self):
        with pytest.raises(EmptyMatrix):
            balanced_accuracy([[0, 0], [0, 0]])
        with pytest.raises(EmptyMatrix):
            balanced_accuracy([])
        with pytest.raises(EmptyMatrix):
            balanced_accuracy([[1, 2, 3], [4, 5, 6]])


class TestWeightedF1:
    def test_perfect(self):
        assert weighted_f1([[5, 0], [0, 5]]) == 1.0

    def test_worked_example(self):
        # class 0: precision 3/5, recall 3/4, f1 2/3, support 4
        # class 1: precision 2/3, recall 2/4, f1 4/7, support 4
        expected = (2 / 3) * (4 / 8) + (4 / 7) * (4 / 8)
        assert weighted_f1([[3, 1], [2, 2]]) == pytest.approx(expected, abs=1e-15)
        assert abs(weighted_f1([[3, 1], [2, 2]]) - 0.6190476190476191) < 1e-12

    def test_all_wrong_is_zero(self):
        assert weighted_f1([[0, 3], [4, 0]]) == 0.0


class TestAgainstBruteForce:
    def test_random_confusions_match_exactly(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            n = int(rng.integers(2, 7))
            matrix = rng.integers(0, 12, size=(n, n)).tolist()
            # keep every class supported so brute recall is defined
            for c in range(n):
                if sum(matrix[c]) == 0:
                    matrix[c][c] = 1
            pairs = pairs_from_confusion(matrix)
            assert balanced_accuracy(matrix) == brute_balanced_accuracy(pairs)
            assert weighted_f1(matrix) == brute_weighted_f1(pairs, n)

    def test_against_sklearn(self):
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 6))
            y_true = rng.integers(0, n, size=200)
            y_pred = rng.integers(0, n, size=200)
            matrix = confusion_matrix(y_true, y_pred, n)
            assert balanced_accuracy(matrix) == pytest.approx(
                sklearn_metrics.balanced_accuracy_score(y_true, y_pred), abs=1e-12
            )
            assert weighted_f1(matrix) == pytest.approx(
                sklearn_metrics.f1_score(y_true, y_pred, average="weighted"),
                abs=1e-12,
            )


class TestEvaluatePredictions:
    def test_report_fields(self):
        report = evaluate_predictions([0, 0, 1, 1], [0, 1, 1, 1], ["A", "B"])
        assert report.num_samples == 4
        assert report.accuracy == 0.75
        assert report.confusion == [[1, 1], [0, 2]]
        assert [c.label for c in report.per_class] == ["A", "B"]
        assert report.per_class[0].support == 2
        assert report.balanced_accuracy == balanced_accuracy(report.confusion)
        assert report.weighted_f1 == weighted_f1(report.confusion)

    def test_dict_round_trip(self):
        report = evaluate_predictions([0, 1, 1], [0, 1, 0], ["A", "B"])
        again = EvalReport.from_dict(report.to_dict())
        assert again == report

    def test_accuracy(self):
        assert accuracy([[3, 1], [2, 2]]) == 5 / 8
