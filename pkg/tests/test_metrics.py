import math

import numpy as np
import pytest

from pipeline.metrics import (
    ClassCounts, confusion, cross_entropy, evaluate, f1_from, one_hot, score_counts, scores_to_dict, softmax,
)


def test_f1_from_reported_scores():
    assert f1_from(0.61, 0.37) == pytest.approx(0.46, abs=0.005)
    assert f1_from(0.0, 0.0) == 0.0


def test_constructed_counts():
    score = score_counts(ClassCounts(tp=3, fp=1, fn=2, tn=10))
    assert score.precision == pytest.approx(0.75)
    assert score.recall == pytest.approx(0.6)
    assert score.f1 == pytest.approx(2 * 0.45 / 1.35)
    assert score.support == 5
    assert score.flags == []


def test_perfect_predictions():
    truth = np.array([0, 1, 2, 0, 1, 2, 0])
    scores = evaluate(truth, truth)
    for name in ('Comfort', 'Discomfort', 'Unknown'):
        assert scores[name].precision == scores[name].recall == scores[name].f1 == 1.0
    assert scores['Comfort'].support == 3


def test_zero_denominator_is_flagged():
    scores = evaluate(np.array([0, 0, 0]), np.array([0, 0, 1]))
    discomfort = scores['Discomfort']
    assert discomfort.precision == 0.0 and discomfort.recall == 0.0 and discomfort.f1 == 0.0
    assert 'zero_denominator:precision' in discomfort.flags
    unknown = scores['Unknown']
    assert set(unknown.flags) == {'zero_denominator:precision', 'zero_denominator:recall'}
    assert scores_to_dict(scores)['Unknown']['support'] == 0


def test_length_mismatch():
    with pytest.raises(ValueError):
        evaluate(np.array([0, 1]), np.array([0, 1, 2]))


def test_confusion_counts_are_consistent():
    rng = np.random.default_rng(0)
    truth, predictions = rng.integers(0, 3, 200), rng.integers(0, 3, 200)
    cm, counts = confusion(truth, predictions)
    assert cm.sum() == 200
    for cls, c in counts.items():
        assert min(c.tp, c.fp, c.fn, c.tn) >= 0
        assert c.tp + c.fp + c.fn + c.tn == 200
        assert c.support == int((truth == cls).sum())


def test_f1_lies_between_precision_and_recall():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        tp, fp, fn = rng.integers(0, 50, 3)
        score = score_counts(ClassCounts(int(tp), int(fp), int(fn), 0))
        if score.flags:
            continue
        low, high = sorted((score.precision, score.recall))
        assert low - 1e-12 <= score.f1 <= high + 1e-12


def test_softmax_sums_to_one():
    rng = np.random.default_rng(2)
    p = softmax(rng.normal(0.0, 50.0, (100, 3)))
    assert np.abs(p.sum(axis=1) - 1.0).max() < 1e-9
    assert (p >= 0).all()


def test_cross_entropy():
    y = np.array([0, 2, 1])
    assert cross_entropy(y, one_hot(y)) == 0.0
    assert cross_entropy(y, np.full((3, 3), 1.0 / 3.0)) == pytest.approx(math.log(3.0))
    assert cross_entropy(one_hot(y), np.full((3, 3), 1.0 / 3.0)) == pytest.approx(math.log(3.0))
    assert cross_entropy(y, np.array([[0.0, 0.5, 0.5]] * 3)) > 0.0
    with pytest.raises(ValueError):
        cross_entropy(np.eye(2), np.full((3, 3), 1.0 / 3.0))
