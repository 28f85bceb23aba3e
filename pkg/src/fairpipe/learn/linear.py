"""Logistic regression trained by per-sample stochastic gradient descent.

Objective, with sample weights ``s`` rescaled to mean 1::

    J(w, b) = mean_i s_i * [log(1 + exp(z_i)) - y_i * z_i] + alpha * R(w),   z_i = w.x_i + b

    R(w) = 0.5 * ||w||^2                               (l2)
         = ||w||_1                                     (l1)
         = r * ||w||_1 + 0.5 * (1 - r) * ||w||^2       (elasticnet, r = l1_ratio)

The bias is not penalised. The step size after ``t`` updates is
``eta0 / (1 + alpha * eta0 * t)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from fairpipe.errors import DegenerateLabels, DimensionMismatch

PENALTIES = ("l2", "l1", "elasticnet")
L1_RATIO = 0.15
ETA0 = 0.01
EPOCHS = 100

_PENALTY_CODE = {"l2": 0, "l1": 1, "elasticnet": 2}


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    penalty: str
    alpha: float
    seed: int
    epochs: int = EPOCHS
    objective_trace: np.ndarray | None = None
    constant: float | None = None
    degenerate: bool = False

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(getattr(X, "values", X), dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got shape {X.shape}")
        return X @ self.weights + self.bias

    def predict_scores(self, X) -> np.ndarray:
        z = self.decision_function(X)
        if self.constant is not None:
            return np.full(len(z), self.constant)
        return sigmoid(z)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def penalty_value(w, penalty, alpha, l1_ratio=L1_RATIO) -> float:
    if penalty == "l2":
        r = 0.5 * w @ w
    elif penalty == "l1":
        r = np.abs(w).sum()
    elif penalty == "elasticnet":
        r = l1_ratio * np.abs(w).sum() + 0.5 * (1 - l1_ratio) * (w @ w)
    else:
        raise ValueError(f"unknown penalty {penalty!r}, expected one of {PENALTIES}")
    return alpha * r


def penalty_gradient(w, penalty, alpha, l1_ratio=L1_RATIO) -> np.ndarray:
    if penalty == "l2":
        g = w
    elif penalty == "l1":
        g = np.sign(w)
    elif penalty == "elasticnet":
        g = l1_ratio * np.sign(w) + (1 - l1_ratio) * w
    else:
        raise ValueError(f"unknown penalty {penalty!r}, expected one of {PENALTIES}")
    return alpha * g


def logistic_objective(w, b, X, y, s, penalty, alpha, l1_ratio=L1_RATIO) -> float:
    z = X @ w + b
    loss = np.logaddexp(0.0, z) - y * z
    return float(np.mean(s * loss) + penalty_value(w, penalty, alpha, l1_ratio))


def logistic_gradient(w, b, X, y, s, penalty, alpha, l1_ratio=L1_RATIO):
    """Analytic gradient of :func:`logistic_objective`; returns ``(dJ/dw, dJ/db)``."""
    r = s * (sigmoid(X @ w + b) - y) / len(y)
    return X.T @ r + penalty_gradient(w, penalty, alpha, l1_ratio), float(r.sum())


@njit(cache=True, nogil=True)
def _sigmoid1(z):
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _objective(X, y, s, w, b, alpha, code, l1_ratio):
    n, d = X.shape
    total = 0.0
    for i in range(n):
        z = b
        for j in range(d):
            z += X[i, j] * w[j]
        total += s[i] * (max(z, 0.0) + np.log1p(np.exp(-abs(z))) - y[i] * z)
    l1 = 0.0
    l2 = 0.0
    for j in range(d):
        l1 += abs(w[j])
        l2 += w[j] * w[j]
    if code == 0:
        reg = 0.5 * l2
    elif code == 1:
        reg = l1
    else:
        reg = l1_ratio * l1 + 0.5 * (1.0 - l1_ratio) * l2
    return total / n + alpha * reg


@njit(cache=True, nogil=True)
def _sgd(X, y, s, order, w, b, alpha, code, l1_ratio, eta0):
    epochs, n = order.shape
    d = X.shape[1]
    trace = np.empty(epochs)
    t = 0
    for e in range(epochs):
        for k in range(n):
            i = order[e, k]
            eta = eta0 / (1.0 + alpha * eta0 * t)
            z = b + np.dot(X[i], w)
            g = s[i] * (_sigmoid1(z) - y[i])
            if code == 0:
                for j in range(d):
                    w[j] -= eta * (g * X[i, j] + alpha * w[j])
            elif code == 1:
                for j in range(d):
                    w[j] -= eta * (g * X[i, j] + alpha * np.sign(w[j]))
            else:
                for j in range(d):
                    pg = l1_ratio * np.sign(w[j]) + (1.0 - l1_ratio) * w[j]
                    w[j] -= eta * (g * X[i, j] + alpha * pg)
            b -= eta * g
            t += 1
        trace[e] = _objective(X, y, s, w, b, alpha, code, l1_ratio)
    return b, trace


def train_logistic(
    train,
    labels,
    weights=None,
    penalty="l2",
    alpha=1e-4,
    epochs=EPOCHS,
    seed=0,
    eta0=ETA0,
    l1_ratio=L1_RATIO,
) -> LinearModel:
    """Fit logistic regression with seeded per-sample SGD.

    Rows are visited in a fresh seeded permutation each epoch and the full
    objective is recorded after every epoch in ``objective_trace``. When only
    one class carries positive weight a constant model scoring that class's
    share is returned with ``degenerate=True`` and a :class:`DegenerateLabels`
    warning.
    """
    X = np.ascontiguousarray(getattr(train, "values", train), dtype=float)
    y = np.asarray(labels, dtype=float)
    n = len(y)
    s = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if X.ndim != 2 or X.shape[0] != n or s.shape != (n,):
        raise DimensionMismatch("train, labels and weights must have the same number of rows")
    if penalty not in PENALTIES:
        raise ValueError(f"unknown penalty {penalty!r}, expected one of {PENALTIES}")
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    if (s < 0).any() or s.sum() <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    s = s * (n / s.sum())

    w0 = np.zeros(X.shape[1])
    present = np.unique(y[s > 0])
    if len(present) < 2:
        rate = float(np.average(y, weights=s))
        warnings.warn(f"only class {present.astype(int).tolist()} present; returning a constant model", DegenerateLabels)
        return LinearModel(w0, 0.0, penalty, alpha, seed, epochs, None, constant=rate, degenerate=True)

    rng = np.random.default_rng(seed)
    order = np.stack([rng.permutation(n) for _ in range(epochs)]) if epochs else np.zeros((0, n), dtype=np.int64)
    w = w0.copy()
    b, trace = _sgd(X, y, s, order, w, 0.0, float(alpha), _PENALTY_CODE[penalty], float(l1_ratio), float(eta0))
    return LinearModel(w, float(b), penalty, float(alpha), seed, epochs, trace)
