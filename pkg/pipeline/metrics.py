"""Per-class precision, recall and F1, plus the cross-entropy loss used by the MLP."""
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import confusion_matrix

from pipeline.labels import LABEL_NAMES

logger = logging.getLogger(__name__)

CLASSES = (0, 1, 2)


@dataclass
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def support(self):
        return self.tp + self.fn


@dataclass
class ClassScore:
    precision: float
    recall: float
    f1: float
    support: int
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {'precision': self.precision, 'recall': self.recall, 'f1': self.f1,
                'support': self.support, 'flags': list(self.flags)}


def confusion(truth, predictions, classes=CLASSES):
    """Full confusion matrix (rows = truth) and one-vs-rest counts per class."""
    truth = np.asarray(truth)
    predictions = np.asarray(predictions)
    if truth.shape != predictions.shape:
        raise ValueError(f"length mismatch: {truth.shape[0]} truths, {predictions.shape[0]} predictions")
    cm = confusion_matrix(truth, predictions, labels=list(classes))
    total = int(cm.sum())
    counts = {}
    for i, cls in enumerate(classes):
        tp = int(cm[i, i])
        fp = int(cm[:, i].sum()) - tp
        fn = int(cm[i, :].sum()) - tp
        counts[cls] = ClassCounts(tp, fp, fn, total - tp - fp - fn)
    return cm, counts


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(f"zero_denominator:{name}")
        return 0.0
    return num / den


def f1_from(precision, recall):
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_counts(counts):
    flags = []
    precision = _ratio(counts.tp, counts.tp + counts.fp, 'precision', flags)
    recall = _ratio(counts.tp, counts.tp + counts.fn, 'recall', flags)
    return ClassScore(precision, recall, f1_from(precision, recall), counts.support, flags)


def evaluate(predictions, truth, classes=CLASSES):
    """
    Per-class scores keyed by label name. A zero denominator yields 0 and a
    flag on that class instead of an error.
    """
    _, counts = confusion(truth, predictions, classes)
    scores = {}
    for cls in classes:
        score = score_counts(counts[cls])
        if score.flags:
            logger.warning("Class %s: %s", LABEL_NAMES[cls], ', '.join(score.flags))
        scores[LABEL_NAMES[cls]] = score
    return scores


def scores_to_dict(scores):
    return {name: score.to_dict() for name, score in scores.items()}


def softmax(logits):
    """Row-wise softmax, shifted by the row maximum."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def one_hot(y, n_classes=len(CLASSES)):
    y = np.asarray(y, dtype=int)
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def cross_entropy(y_true, probabilities, eps=1e-15):
    """
    Mean over samples of -sum_i y_i log p_i. `y_true` is one-hot or integer
    class codes; probabilities are clipped away from 0.
    """
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(y_true)
    if y.ndim == 1:
        y = one_hot(y, p.shape[-1])
    if y.shape != p.shape:
        raise ValueError(f"shape mismatch: truth {y.shape}, probabilities {p.shape}")
    loss = -(y * np.log(np.clip(p, eps, 1.0))).sum(axis=-1).mean()
    return max(float(loss), 0.0)
