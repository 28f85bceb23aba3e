"""Learner registry and grid search with k-fold cross-validation."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from fairpipe.errors import BadK, DegenerateLabels, EmptyGrid
from fairpipe.learn.linear import train_logistic
from fairpipe.learn.tree import train_tree


@dataclass(frozen=True)
class LearnerSpec:
    """A pluggable learner: ``fit(X, labels, weights, seed, **params) -> model``.

    In-processing interventions register here too; anything returned by
    ``fit`` must offer ``predict_scores(X)``.
    """

    name: str
    fit: Callable
    default_grid: Mapping[str, list]
    untuned: Mapping[str, object] = field(default_factory=dict)


def _fit_logistic(X, y, w, seed, **params):
    return train_logistic(X, y, w, seed=seed, **params)


def _fit_tree(X, y, w, seed, **params):
    return train_tree(X, y, w, seed=seed, **params)


LEARNERS: dict[str, LearnerSpec] = {
    "logistic_regression": LearnerSpec(
        name="logistic_regression",
        fit=_fit_logistic,
        default_grid={
            "penalty": ["l2", "l1", "elasticnet"],
            "alpha": [0.00005, 0.0001, 0.005, 0.001],
        },
        untuned={"penalty": "l2", "alpha": 0.0001},
    ),
    "decision_tree": LearnerSpec(
        name="decision_tree",
        fit=_fit_tree,
        default_grid={
            "criterion": ["gini", "entropy"],
            "max_depth": [3, 5, 10],
            "min_samples_leaf": [1, 5, 10, 20],
            "min_samples_split": [2, 5, 10],
        },
        untuned={"criterion": "gini", "max_depth": None, "min_samples_leaf": 1, "min_samples_split": 2},
    ),
}


def get_learner(kind) -> LearnerSpec:
    if isinstance(kind, LearnerSpec):
        return kind
    try:
        return LEARNERS[kind]
    except KeyError:
        raise ValueError(f"unknown learner {kind!r}, expected one of {sorted(LEARNERS)}") from None


def expand_grid(grid: Mapping[str, list]) -> list[dict]:
    """Cartesian product of the grid in key order, last key varying fastest."""
    if not grid:
        return [{}]
    keys = list(grid)
    values = [list(grid[k]) for k in keys]
    if any(len(v) == 0 for v in values):
        raise EmptyGrid(f"grid has empty value lists: {[k for k, v in zip(keys, values) if not v]}")
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


@dataclass(frozen=True, eq=False)
class CVResult:
    candidates: tuple
    mean_scores: np.ndarray
    std_scores: np.ndarray
    fold_scores: np.ndarray
    fit_count: int
    best_index: int
    k: int

    @property
    def best_params(self) -> dict:
        return dict(self.candidates[self.best_index])

    def ranking(self) -> list[int]:
        """Candidate indices by descending mean score, grid order breaking ties."""
        return sorted(range(len(self.candidates)), key=lambda i: (-self.mean_scores[i], i))


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def weighted_accuracy(y_true, y_pred, weights) -> float:
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        return float("nan")
    return float(w[np.asarray(y_true) == np.asarray(y_pred)].sum() / total)


def grid_search_cv(learner_kind, grid, k, train, labels, weights=None, seed=0):
    """Pick hyperparameters by mean weighted accuracy over ``k`` held-out folds.

    Only ``train`` is ever read. Returns the best candidate refit on all of
    ``train`` together with the :class:`CVResult`; the first candidate in
    grid order wins ties.
    """
    spec = get_learner(learner_kind)
    candidates = expand_grid(spec.default_grid if grid is None else grid)
    X = np.asarray(getattr(train, "values", train), dtype=float)
    y = np.asarray(labels)
    n = len(y)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise BadK(f"k must be an integer >= 2, got {k!r}")
    if n < k:
        raise BadK(f"k={k} folds need at least {k} rows, got {n}")

    folds = kfold_indices(n, k, seed)
    scores = np.empty((len(candidates), k))
    fits = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateLabels)
        for c, params in enumerate(candidates):
            for f, held in enumerate(folds):
                keep = np.ones(n, dtype=bool)
                keep[held] = False
                model = spec.fit(X[keep], y[keep], w[keep], seed, **params)
                fits += 1
                pred = (model.predict_scores(X[held]) >= 0.5).astype(int)
                scores[c, f] = weighted_accuracy(y[held], pred, w[held])

    means = np.nanmean(scores, axis=1) if np.isfinite(scores).any() else np.zeros(len(candidates))
    means = np.where(np.isnan(means), -np.inf, means)
    best = int(np.argmax(means))
    result = CVResult(
        candidates=tuple(candidates),
        mean_scores=means,
        std_scores=np.nanstd(scores, axis=1),
        fold_scores=scores,
        fit_count=fits,
        best_index=best,
        k=k,
    )
    model = spec.fit(X, y, w, seed, **candidates[best])
    return model, result
