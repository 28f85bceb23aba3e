"""Baseline learners and hyperparameter search."""

import numpy as np

from fairpipe.errors import DimensionMismatch
from fairpipe.learn.linear import LinearModel, train_logistic
from fairpipe.learn.search import (
    LEARNERS,
    CVResult,
    LearnerSpec,
    expand_grid,
    get_learner,
    grid_search_cv,
    weighted_accuracy,
)
from fairpipe.learn.tree import TreeModel, build_tree, train_tree


def predict_scores(model, data) -> np.ndarray:
    X = np.asarray(getattr(data, "values", data), dtype=float)
    n_features = getattr(model, "n_features", None)
    if X.ndim != 2 or (n_features is not None and X.shape[1] != n_features):
        raise DimensionMismatch(f"model expects {n_features} features, got shape {X.shape}")
    return model.predict_scores(X)


def predict_labels(model, data, threshold=0.5) -> np.ndarray:
    return (predict_scores(model, data) >= threshold).astype(np.int8)


__all__ = [
    "LEARNERS",
    "CVResult",
    "LearnerSpec",
    "LinearModel",
    "TreeModel",
    "build_tree",
    "expand_grid",
    "get_learner",
    "grid_search_cv",
    "predict_labels",
    "predict_scores",
    "train_logistic",
    "train_tree",
    "weighted_accuracy",
]
