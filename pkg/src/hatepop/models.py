"""Binary linear classifiers trained from scratch.

Both estimators follow the scikit-learn estimator API, so they compose with
``Pipeline``, ``clone`` and friends. Training is deterministic: logistic
regression starts from zero weights and uses full-batch gradient descent;
the SVM visits examples in one seeded order that is fixed across epochs.
"""

from __future__ import annotations

import json
import math

import numba
import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "logistic_loss_grad",
    "lipschitz_step",
    "hinge_objective",
    "LogisticRegression",
    "LinearSVM",
    "ConstantClassifier",
    "train_logistic",
    "train_svm",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "hatepop.linear-model"
MODEL_VERSION = 1
_MAX_HALVINGS = 60


def _check_finite(*arrays):
    for a in arrays:
        data = a.data if sp.issparse(a) else np.asarray(a, dtype=float)
        if not np.all(np.isfinite(data)):
            raise ValueError("non-finite value in input")


def logistic_loss_grad(weights, bias, X, y, l2_lambda=0.0):
    """Mean cross-entropy plus ``l2_lambda / 2 * ||w||^2`` and its gradient.

    Returns ``(loss, grad)`` where ``grad`` has length ``d + 1``, the last
    entry being the (unpenalised) bias derivative.
    """
    w = np.asarray(weights, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_finite(w, X, y, np.array([bias], dtype=float))
    n = y.shape[0]
    z = X @ w + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_lambda * (w @ w))
    r = (expit(z) - y) / n
    grad = np.empty(w.shape[0] + 1)
    grad[:-1] = X.T @ r + l2_lambda * w
    grad[-1] = r.sum()
    return loss, grad


def hinge_objective(weights, bias, X, y_pm, l2_lambda):
    """``l2_lambda / 2 * ||w||^2 + mean(max(0, 1 - y (w.x + b)))`` with ``y`` in {-1, +1}."""
    margins = y_pm * (X @ weights + bias)
    return float(0.5 * l2_lambda * (weights @ weights) + np.mean(np.maximum(0.0, 1.0 - margins)))


class _LinearBinaryClassifier(ClassifierMixin, BaseEstimator):
    _kind = ""

    def _validate_training_data(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=float, y_numeric=False)
        classes = np.unique(y)
        if len(classes) != 2:
            raise ValueError(
                f"{type(self).__name__} needs both classes in y, got {classes.tolist()}; "
                "use ConstantClassifier for single-class data")
        if X.shape[0] < 2:
            raise ValueError("need at least two training rows")
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        return X, (y == classes[1]).astype(float)

    def _validate_input(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, accept_sparse="csr", dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"dimension mismatch: model has {self.n_features_in_} features, "
                             f"input has {X.shape[1]}")
        return X

    def decision_function(self, X):
        X = self._validate_input(X)
        return np.asarray(X @ self.coef_ + self.intercept_).reshape(-1)

    def _positive(self, X, threshold=None):
        return self.decision_function(X) >= 0.0

    def predict(self, X, threshold=None):
        """Class labels; exact ties on the decision boundary go to the positive class."""
        return self.classes_[self._positive(X, threshold).astype(int)]


def lipschitz_step(X, l2_lambda=0.0, n_iter=50) -> float:
    """``1 / L`` for the logistic loss, ``L = 0.25 * lambda_max(X^T X) / n + l2_lambda``.

    The top eigenvalue comes from power iteration started at the all-ones
    vector, so the result is deterministic.
    """
    n, d = X.shape
    v = np.ones(d) / math.sqrt(max(d, 1))
    eig = 0.0
    for _ in range(n_iter):
        u = X.T @ (X @ v)
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            break
        eig = float(v @ u)
        v = u / norm
    curvature = 0.25 * eig / n + l2_lambda
    return 1.0 / curvature if curvature > 0 else 1.0


class LogisticRegression(_LinearBinaryClassifier):
    """L2-regularised logistic regression by full-batch gradient descent.

    ``learning_rate="auto"`` starts from the inverse curvature bound of the
    loss (see :func:`lipschitz_step`). Whatever the start, the step is halved
    whenever it would increase the loss, so the recorded ``loss_curve_``
    never increases. Training stops after ``max_epochs`` or once an epoch
    lowers the loss by less than ``tolerance``.
    """

    _kind = "logistic"

    def __init__(self, learning_rate="auto", max_epochs=500, l2_lambda=1e-4, tolerance=1e-6,
                 seed=0):
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.l2_lambda = l2_lambda
        self.tolerance = tolerance
        self.seed = seed

    def fit(self, X, y):
        auto = isinstance(self.learning_rate, str)
        if auto and self.learning_rate != "auto":
            raise ValueError(f"learning_rate must be a positive number or 'auto', "
                             f"got {self.learning_rate!r}")
        if (not auto and self.learning_rate <= 0) or self.tolerance <= 0 or self.l2_lambda < 0:
            raise ValueError("learning_rate and tolerance must be > 0, l2_lambda >= 0")
        X, y01 = self._validate_training_data(X, y)
        w = np.zeros(X.shape[1])
        b = 0.0
        lr = lipschitz_step(X, self.l2_lambda) if auto else float(self.learning_rate)
        loss, grad = logistic_loss_grad(w, b, X, y01, self.l2_lambda)
        curve = [loss]
        epochs = 0
        for epochs in range(1, int(self.max_epochs) + 1):
            for _ in range(_MAX_HALVINGS):
                w_new = w - lr * grad[:-1]
                b_new = b - lr * grad[-1]
                new_loss, new_grad = logistic_loss_grad(w_new, b_new, X, y01, self.l2_lambda)
                if new_loss <= loss:
                    break
                lr *= 0.5
            else:
                break
            decrease = loss - new_loss
            w, b, loss, grad = w_new, b_new, new_loss, new_grad
            curve.append(loss)
            if decrease < self.tolerance:
                break
        self.coef_ = w
        self.intercept_ = float(b)
        self.loss_curve_ = curve
        self.final_loss_ = loss
        self.n_epochs_ = epochs
        self.final_learning_rate_ = lr
        return self

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def _positive(self, X, threshold=None):
        threshold = 0.5 if threshold is None else threshold
        return self.predict_proba(X)[:, 1] >= threshold


@numba.njit(cache=True)
def _pegasos(indptr, indices, data, y, order, lam, max_epochs, tol, d):
    # w_t = a * v; the running sum of iterates over an epoch is S * v - r.
    n = order.shape[0]
    v = np.zeros(d)
    a = 1.0
    b = 0.0
    t = 0
    prev = np.inf
    avg_w = np.zeros(d)
    avg_b = 0.0
    obj = np.inf
    epochs_run = 0
    for epoch in range(max_epochs):
        epochs_run = epoch + 1
        S = 0.0
        r = np.zeros(d)
        sb = 0.0
        for k in range(n):
            i = order[k]
            t += 1
            eta = 1.0 / (lam * t)
            s = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                s += v[indices[p]] * data[p]
            margin = y[i] * (a * s + b)
            shrink = 1.0 - eta * lam
            if shrink <= 0.0:
                for j in range(d):
                    cur = S * v[j] - r[j]
                    r[j] = -cur
                    v[j] = 0.0
                S = 0.0
                a = 1.0
            else:
                a *= shrink
            if margin < 1.0:
                coef = eta * y[i] / a
                for p in range(indptr[i], indptr[i + 1]):
                    j = indices[p]
                    delta = coef * data[p]
                    r[j] += delta * S
                    v[j] += delta
                b += eta * y[i]
            S += a
            sb += b
            if a < 1e-9:
                for j in range(d):
                    cur = S * v[j] - r[j]
                    v[j] *= a
                    r[j] = -cur
                S = 0.0
                a = 1.0
        for j in range(d):
            avg_w[j] = (S * v[j] - r[j]) / n
        avg_b = sb / n
        hinge = 0.0
        for i in range(n):
            s = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                s += avg_w[indices[p]] * data[p]
            m = 1.0 - y[i] * (s + avg_b)
            if m > 0.0:
                hinge += m
        obj = 0.5 * lam * np.dot(avg_w, avg_w) + hinge / n
        if abs(prev - obj) < tol:
            break
        prev = obj
    return avg_w, avg_b, obj, epochs_run


class LinearSVM(_LinearBinaryClassifier):
    """L2-regularised hinge-loss classifier by stochastic sub-gradient descent.

    Step size at update ``t`` is ``1 / (l2_lambda * t)``. Examples are
    visited in a seeded order that stays fixed across epochs, and the model
    returned is the average of the iterates of the last epoch. Training
    stops when the epoch objective changes by less than ``tolerance``.

    The bias is unpenalised and takes the same steps as the weights. The
    schedule converges slowly when rows have large norms, so feed it
    standardised or L2-normalised features.
    """

    _kind = "hinge"

    def __init__(self, l2_lambda=1e-4, max_epochs=500, tolerance=1e-6, seed=0):
        self.l2_lambda = l2_lambda
        self.max_epochs = max_epochs
        self.tolerance = tolerance
        self.seed = seed

    def fit(self, X, y):
        if self.l2_lambda <= 0:
            raise ValueError("LinearSVM needs l2_lambda > 0")
        X, y01 = self._validate_training_data(X, y)
        Xc = sp.csr_matrix(X, dtype=float)
        Xc.sort_indices()
        _check_finite(Xc)
        y_pm = 2.0 * y01 - 1.0
        order = np.random.default_rng(int(self.seed) & (2**64 - 1)).permutation(Xc.shape[0])
        w, b, obj, epochs = _pegasos(Xc.indptr.astype(np.int64), Xc.indices.astype(np.int64),
                                     Xc.data, y_pm, order.astype(np.int64), float(self.l2_lambda),
                                     int(self.max_epochs), float(self.tolerance), Xc.shape[1])
        self.coef_ = np.asarray(w)
        self.intercept_ = float(b)
        self.final_loss_ = float(obj)
        self.n_epochs_ = int(epochs)
        return self


class ConstantClassifier(ClassifierMixin, BaseEstimator):
    """Always predicts the same class; baseline and single-class fallback."""

    def __init__(self, positive=True):
        self.positive = positive

    def fit(self, X, y):
        y = np.asarray(y)
        self.classes_ = np.array([False, True]) if y.dtype == bool else np.unique(
            np.concatenate([y, np.array([0, 1], dtype=y.dtype)]))[-2:]
        self.n_features_in_ = np.shape(X)[1] if np.ndim(X) == 2 else 1
        return self

    def decision_function(self, X):
        n = X.shape[0] if hasattr(X, "shape") else len(X)
        return np.full(n, 1.0 if self.positive else -1.0)

    def predict(self, X):
        check_is_fitted(self, "classes_")
        n = X.shape[0] if hasattr(X, "shape") else len(X)
        return np.full(n, self.classes_[1] if self.positive else self.classes_[0])


def train_logistic(X, y, **config) -> LogisticRegression:
    return LogisticRegression(**config).fit(X, y)


def train_svm(X, y, **config) -> LinearSVM:
    return LinearSVM(**config).fit(X, y)


def model_to_dict(model, columns=None, scaler=None) -> dict:
    """Versioned JSON-ready description of a fitted linear model.

    ``scaler`` is an optional fitted :class:`~hatepop.textvec.Standardizer`
    applied to raw feature rows before the linear function.
    """
    check_is_fitted(model, "coef_")
    columns = list(columns) if columns is not None else [f"x{i}" for i in range(len(model.coef_))]
    if len(columns) != len(model.coef_):
        raise ValueError("column names do not match the number of weights")
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model._kind,
        "columns": columns,
        "weights": [float(v) for v in model.coef_],
        "bias": float(model.intercept_),
        "classes": [c.item() if hasattr(c, "item") else c for c in model.classes_],
        "config": model.get_params(),
        "meta": {"final_loss": float(model.final_loss_), "epochs": int(model.n_epochs_)},
        "scaler": scaler.to_dict() if scaler is not None else None,
    }


def model_from_dict(d: dict):
    """Rebuild ``(model, columns, scaler_or_None)`` from :func:`model_to_dict` output."""
    from .textvec import Standardizer

    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file (format={d.get('format')!r})")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    cls = {"logistic": LogisticRegression, "hinge": LinearSVM}.get(d["kind"])
    if cls is None:
        raise ValueError(f"unknown model kind {d['kind']!r}")
    model = cls(**d["config"])
    model.coef_ = np.asarray(d["weights"], dtype=float)
    model.intercept_ = float(d["bias"])
    model.classes_ = np.asarray(d.get("classes", [False, True]))
    model.n_features_in_ = len(model.coef_)
    model.final_loss_ = d["meta"]["final_loss"]
    model.n_epochs_ = d["meta"]["epochs"]
    if not np.all(np.isfinite(model.coef_)) or not math.isfinite(model.intercept_):
        raise ValueError("model file contains non-finite weights")
    scaler = Standardizer.from_dict(d["scaler"]) if d.get("scaler") else None
    return model, list(d["columns"]), scaler


def save_model(path, model, columns=None, scaler=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, columns, scaler), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
