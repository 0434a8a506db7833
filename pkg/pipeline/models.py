"""
Comfort classifiers: scikit-learn trees, forest and gradient boosting, a small
numpy MLP trained on cross-entropy, and the multi-horizon classifier that also
sees the previous W labels.
"""
import copy
import logging
import pickle
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from sklearn.ensemble import HistGradientBoostingClassifier, RandomForestClassifier
from sklearn.preprocessing import StandardScaler
from sklearn.tree import DecisionTreeClassifier

from pipeline.dataset import DatasetError
from pipeline.metrics import CLASSES, cross_entropy, one_hot, softmax

logger = logging.getLogger(__name__)

N_CLASSES = len(CLASSES)
MULTIHORIZON_MODES = ('teacher_forced', 'recursive')


class TrainingDivergenceError(ArithmeticError):
    pass


class ConstantClassifier:
    """Predicts the single class seen in training."""

    def __init__(self, label):
        self.label = int(label)
        self.classes_ = np.array([self.label])

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.full(len(X), self.label, dtype=int)

    def predict_proba(self, X):
        return np.ones((len(X), 1))


@dataclass(eq=False)
class TrainedModel:
    name: str
    estimator: object
    scaler: object = None
    flags: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def _prepare(self, X):
        X = np.asarray(X, dtype=float)
        return self.scaler.transform(X) if self.scaler is not None else X

    def predict(self, X):
        return np.asarray(self.estimator.predict(self._prepare(X)), dtype=int)

    def predict_proba(self, X):
        """Probabilities over all CLASSES, zero for classes absent from training."""
        raw = self.estimator.predict_proba(self._prepare(X))
        out = np.zeros((raw.shape[0], N_CLASSES))
        out[:, np.asarray(self.estimator.classes_, dtype=int)] = raw
        return out


def _single_class(name, y):
    classes = np.unique(y)
    if classes.size == 1:
        logger.warning("%s: training set holds the single class %d, using a constant predictor", name, classes[0])
        return TrainedModel(name, ConstantClassifier(classes[0]), flags=['single_class'])
    return None


def _fit_sklearn(name, estimator, train, val):
    X, y = train.X(), train.y()
    constant = _single_class(name, y)
    if constant is not None:
        return constant
    estimator.fit(X, y)
    model = TrainedModel(name, estimator)
    if val is not None and len(val):
        accuracy = float(np.mean(model.predict(val.X()) == val.y()))
        model.history.append({'val_accuracy': accuracy})
        logger.info("%s: validation accuracy %.4f", name, accuracy)
    return model


def train_decision_tree(train, val=None, max_depth=None, min_samples_leaf=1, seed=0):
    estimator = DecisionTreeClassifier(max_depth=max_depth, min_samples_leaf=min_samples_leaf, random_state=seed)
    return _fit_sklearn('decision_tree', estimator, train, val)


def train_random_forest(train, val=None, n_estimators=100, max_depth=None, max_features='sqrt', seed=0, n_jobs=1):
    estimator = RandomForestClassifier(n_estimators=n_estimators, max_depth=max_depth, max_features=max_features,
                                       bootstrap=True, random_state=seed, n_jobs=n_jobs)
    return _fit_sklearn('random_forest', estimator, train, val)


def train_gradient_boosting(train, val=None, max_iter=200, learning_rate=0.1, seed=0):
    estimator = HistGradientBoostingClassifier(max_iter=max_iter, learning_rate=learning_rate,
                                               early_stopping=False, random_state=seed)
    return _fit_sklearn('gradient_boosting', estimator, train, val)


# ---------------------------------------------------------------- MLP

class MLP:
    """Fully-connected tanh network with a softmax output."""

    def __init__(self, layer_sizes, seed=0):
        rng = np.random.default_rng(seed)
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.params = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.params.append([rng.uniform(-limit, limit, (fan_in, fan_out)), np.zeros(fan_out)])
        self.classes_ = np.arange(self.layer_sizes[-1])

    def _forward(self, X):
        activations = [np.asarray(X, dtype=float)]
        for W, b in self.params[:-1]:
            activations.append(np.tanh(activations[-1] @ W + b))
        W, b = self.params[-1]
        return activations, activations[-1] @ W + b

    def predict_proba(self, X):
        return softmax(self._forward(X)[1])

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def loss(self, X, Y):
        """Mean cross-entropy against one-hot targets Y."""
        _, logits = self._forward(X)
        log_p = logits - logsumexp(logits, axis=1, keepdims=True)
        return float(-(Y * log_p).sum(axis=1).mean())

    def loss_and_gradients(self, X, Y):
        activations, logits = self._forward(X)
        log_p = logits - logsumexp(logits, axis=1, keepdims=True)
        loss = float(-(Y * log_p).sum(axis=1).mean())
        delta = (np.exp(log_p) - Y) / len(X)
        grads = [None] * len(self.params)
        for j in range(len(self.params) - 1, -1, -1):
            W = self.params[j][0]
            grads[j] = [activations[j].T @ delta, delta.sum(axis=0)]
            if j > 0:
                delta = (delta @ W.T) * (1.0 - activations[j] ** 2)
        return loss, grads


def gradient_check(mlp, X, Y, eps=1e-5):
    """Largest relative error between analytic and central-difference gradients."""
    _, grads = mlp.loss_and_gradients(X, Y)
    worst = 0.0
    for param, grad in zip(mlp.params, grads):
        for array, analytic in zip(param, grad):
            for idx in np.ndindex(array.shape):
                saved = array[idx]
                array[idx] = saved + eps
                plus = mlp.loss(X, Y)
                array[idx] = saved - eps
                minus = mlp.loss(X, Y)
                array[idx] = saved
                numeric = (plus - minus) / (2.0 * eps)
                error = abs(numeric - analytic[idx]) / max(abs(numeric) + abs(analytic[idx]), 1e-6)
                worst = max(worst, error)
    return worst


class Adam:
    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = learning_rate, beta1, beta2, eps
        self.m = [[np.zeros_like(a) for a in p] for p in params]
        self.v = [[np.zeros_like(a) for a in p] for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            for k in range(len(p)):
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k]
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] ** 2
                m_hat = m[k] / (1.0 - self.beta1 ** self.t)
                v_hat = v[k] / (1.0 - self.beta2 ** self.t)
                p[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_mlp(train, val=None, hidden_layers=(32, 16), epochs=30, batch_size=512, learning_rate=1e-3,
              patience=3, seed=0):
    """
    Adam on mean cross-entropy over standardized features (scaler fit on the
    training rows only). Stops once the validation loss has not improved for
    `patience` epochs and keeps the best weights.
    """
    X, y = train.X(), train.y()
    constant = _single_class('mlp', y)
    if constant is not None:
        return constant
    scaler = StandardScaler().fit(X)
    Xs, Y = scaler.transform(X), one_hot(y, N_CLASSES)
    if val is not None and len(val):
        Xv, Yv = scaler.transform(val.X()), one_hot(val.y(), N_CLASSES)
    else:
        Xv, Yv = Xs, Y

    rng = np.random.default_rng(seed)
    mlp = MLP((Xs.shape[1], *hidden_layers, N_CLASSES), seed=seed)
    optimizer = Adam(mlp.params, learning_rate)
    best_loss, best_params, stale = np.inf, copy.deepcopy(mlp.params), 0
    history = []
    for epoch in range(epochs):
        order = rng.permutation(len(Xs))
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            loss, grads = mlp.loss_and_gradients(Xs[batch], Y[batch])
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"mlp loss became non-finite at epoch {epoch}")
            optimizer.step(mlp.params, grads)
        train_loss = cross_entropy(Y, mlp.predict_proba(Xs))
        val_loss = cross_entropy(Yv, mlp.predict_proba(Xv))
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergenceError(f"mlp loss became non-finite at epoch {epoch}")
        history.append({'epoch': epoch, 'train_loss': train_loss, 'val_loss': val_loss})
        logger.info("mlp epoch %d: train %.5f, validation %.5f", epoch, train_loss, val_loss)
        if val_loss < best_loss - 1e-12:
            best_loss, best_params, stale = val_loss, copy.deepcopy(mlp.params), 0
        else:
            stale += 1
            if stale >= patience:
                logger.info("mlp early stop after epoch %d", epoch)
                break
    mlp.params = best_params
    return TrainedModel('mlp', mlp, scaler=scaler, history=history)


def train_classifier(name, train, val=None, params=None, seed=0, n_jobs=1):
    params = dict(params or {})
    if name == 'decision_tree':
        return train_decision_tree(train, val, seed=seed, **params)
    if name == 'random_forest':
        return train_random_forest(train, val, seed=seed, n_jobs=n_jobs, **params)
    if name == 'gradient_boosting':
        return train_gradient_boosting(train, val, seed=seed, **params)
    if name == 'mlp':
        if 'hidden_layers' in params:
            params['hidden_layers'] = tuple(params['hidden_layers'])
        return train_mlp(train, val, seed=seed, **params)
    raise ValueError(f"unknown classifier '{name}'")


# ---------------------------------------------------------------- multi-horizon

def past_label_windows(labels, past_window):
    """Row k holds labels[k : k + W], the history of step k + W."""
    labels = np.asarray(labels, dtype=int)
    if len(labels) <= past_window:
        raise DatasetError(f"sequence of {len(labels)} steps is too short for a past window of {past_window}")
    return np.lib.stride_tricks.sliding_window_view(labels[:-1], past_window)


def window_rows(dataset, past_window):
    """Teacher-forced design matrix: features at t and true labels t-W .. t-1, for t >= W."""
    X_parts, y_parts, windows = [], [], []
    for _, frame in dataset.sequences():
        features = frame[dataset.features].to_numpy(dtype=float)
        labels = frame['target'].to_numpy(dtype=int)
        past = past_label_windows(labels, past_window)
        windows.append(past)
        X_parts.append(np.hstack([features[past_window:], past]))
        y_parts.append(labels[past_window:])
    return np.vstack(X_parts), np.concatenate(y_parts), np.vstack(windows)


@dataclass(eq=False)
class MultiHorizonModel:
    estimator: object
    past_window: int
    mode: str = 'teacher_forced'
    flags: list = field(default_factory=list)


@dataclass(eq=False)
class MultiHorizonPrediction:
    predictions: np.ndarray
    truth: np.ndarray
    windows: np.ndarray
    mode: str


def train_multihorizon(train, val=None, past_window=48, mode='teacher_forced', n_estimators=50, seed=0, n_jobs=1):
    """Random forest over [current features, W past labels]; always fit on true past labels."""
    if past_window < 1:
        raise ValueError("past_window must be >= 1")
    if mode not in MULTIHORIZON_MODES:
        raise ValueError(f"unknown multi-horizon mode '{mode}'")
    X, y, _ = window_rows(train, past_window)
    classes = np.unique(y)
    if classes.size == 1:
        logger.warning("multihorizon: single training class %d, using a constant predictor", classes[0])
        return MultiHorizonModel(ConstantClassifier(classes[0]), past_window, mode, ['single_class'])
    estimator = RandomForestClassifier(n_estimators=n_estimators, max_features='sqrt', random_state=seed,
                                       n_jobs=n_jobs)
    estimator.fit(X, y)
    logger.info("multihorizon: trained on %d windows (W=%d)", len(y), past_window)
    return MultiHorizonModel(estimator, past_window, mode)


def predict_multihorizon(model, dataset, mode=None):
    """
    teacher_forced: past labels are the truth. recursive: each dwelling starts
    from its first W true labels, then every prediction is fed back as
    history; dwellings advance in lock-step, one batched call per time step.
    """
    mode = mode or model.mode
    W = model.past_window
    if mode == 'teacher_forced':
        X, y, windows = window_rows(dataset, W)
        return MultiHorizonPrediction(np.asarray(model.estimator.predict(X), dtype=int), y, windows, mode)
    if mode != 'recursive':
        raise ValueError(f"unknown multi-horizon mode '{mode}'")

    if isinstance(model.estimator, RandomForestClassifier):
        model.estimator.set_params(n_jobs=1)
    sequences = []
    for _, frame in dataset.sequences():
        labels = frame['target'].to_numpy(dtype=int)
        if len(labels) <= W:
            raise DatasetError(f"sequence of {len(labels)} steps is too short for a past window of {W}")
        sequences.append((frame[dataset.features].to_numpy(dtype=float), labels, labels.copy()))

    windows = [np.empty((len(s[1]) - W, W), dtype=int) for s in sequences]
    longest = max(len(s[1]) for s in sequences)
    for t in range(W, longest):
        active = [i for i, s in enumerate(sequences) if len(s[1]) > t]
        history = np.vstack([sequences[i][2][t - W:t] for i in active])
        X = np.hstack([np.vstack([sequences[i][0][t] for i in active]), history])
        predicted = np.asarray(model.estimator.predict(X), dtype=int)
        for row, i in enumerate(active):
            windows[i][t - W] = history[row]
            sequences[i][2][t] = predicted[row]

    predictions = np.concatenate([s[2][W:] for s in sequences])
    truth = np.concatenate([s[1][W:] for s in sequences])
    return MultiHorizonPrediction(predictions, truth, np.vstack(windows), mode)


def save_model(model, path):
    with open(path, 'wb') as f:
        pickle.dump(model, f, protocol=pickle.HIGHEST_PROTOCOL)
    return path


def load_model(path):
    with open(path, 'rb') as f:
        return pickle.load(f)
