import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central_difference, objective_loop
from fairpipe.errors import BadK, DegenerateLabels, DimensionMismatch, EmptyGrid
from fairpipe.learn import (
    LEARNERS,
    LinearModel,
    expand_grid,
    grid_search_cv,
    predict_labels,
    predict_scores,
    train_logistic,
    train_tree,
)
from fairpipe.learn.linear import logistic_gradient, logistic_objective
from fairpipe.learn.search import kfold_indices
from fairpipe.learn.tree import build_tree


def blobs(seed=0, n=200):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, 2)) * 0.6 + np.where(y[:, None] == 1, 2.0, -2.0)
    return X, y


def separable_by_search(X, y, steps=720):
    """Brute force: some direction on a fine angle grid separates the classes with a gap."""
    for a in np.linspace(0, np.pi, steps, endpoint=False):
        proj = X @ np.array([np.cos(a), np.sin(a)])
        lo, hi = proj[y == 0], proj[y == 1]
        if lo.max() < hi.min() or hi.max() < lo.min():
            return True
    return False


# -- logistic regression -------------------------------------------------------------


def test_lr_blobs_are_fit():
    X, y = blobs()
    assert separable_by_search(X, y)
    m = train_logistic(X, y, seed=1)
    assert (predict_labels(m, X) == y).mean() >= 0.99


def test_lr_objective_decreases_on_average():
    X, y = blobs(3)
    m = train_logistic(X, y, seed=2)
    trace = m.objective_trace
    assert len(trace) == 100
    assert trace[-10:].mean() < trace[:10].mean()


def test_lr_deterministic_and_seed_sensitive():
    X, y = blobs(1)
    a, b = train_logistic(X, y, seed=4), train_logistic(X, y, seed=4)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    assert not np.array_equal(a.weights, train_logistic(X, y, seed=5).weights)


def test_lr_degenerate_labels():
    X = np.random.default_rng(0).normal(size=(10, 3))
    with pytest.warns(DegenerateLabels):
        m = train_logistic(X, np.ones(10, dtype=int))
    assert m.degenerate
    assert np.all(predict_scores(m, X) == 1.0)
    assert np.all(predict_labels(m, X) == 1)


def test_zero_model_scores_half():
    m = LinearModel(np.zeros(3), 0.0, "l2", 1e-4, 0, 0, np.zeros(0))
    X = np.random.default_rng(0).normal(size=(4, 3))
    assert np.all(predict_scores(m, X) == 0.5)
    assert np.all(predict_labels(m, X) == 1)


@pytest.mark.parametrize("penalty", ["l2", "l1", "elasticnet"])
def test_weight_scale_invariance(penalty):
    X, y = blobs(2, 120)
    w = np.random.default_rng(1).uniform(0.2, 3.0, len(y))
    a = train_logistic(X, y, w, penalty=penalty, seed=0)
    b = train_logistic(X, y, 2.0 * w, penalty=penalty, seed=0)
    assert np.array_equal(predict_labels(a, X), predict_labels(b, X))
    assert np.allclose(a.decision_function(X), b.decision_function(X), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("penalty", ["l2", "l1", "elasticnet"])
def test_objective_matches_loop(penalty):
    rng = np.random.default_rng(7)
    X, y, s = rng.normal(size=(5, 4)), rng.integers(0, 2, 5), rng.uniform(0.5, 2, 5)
    w, b = rng.normal(size=4), 0.3
    assert logistic_objective(w, b, X, y, s, penalty, 0.01) == pytest.approx(
        objective_loop(w, b, X, y, s, penalty, 0.01), rel=1e-12
    )


@pytest.mark.parametrize("penalty", ["l2", "l1", "elasticnet"])
def test_gradient_matches_finite_differences(penalty):
    rng = np.random.default_rng(11)
    for _ in range(20):
        X, y, s = rng.normal(size=(5, 4)), rng.integers(0, 2, 5), rng.uniform(0.5, 2, 5)
        w = rng.normal(size=4)
        w = np.where(np.abs(w) < 0.05, 0.5, w)
        b = float(rng.normal())
        gw, gb = logistic_gradient(w, b, X, y, s, penalty, 0.05)
        theta = np.append(w, b)
        num = central_difference(lambda t: objective_loop(t[:-1], t[-1], X, y, s, penalty, 0.05), theta)
        ana = np.append(gw, gb)
        assert np.linalg.norm(ana - num) / max(np.linalg.norm(num), 1e-12) < 1e-5


def test_dimension_mismatch():
    X, y = blobs()
    m = train_logistic(X, y)
    with pytest.raises(DimensionMismatch):
        predict_scores(m, np.zeros((3, 5)))


# -- trees --------------------------------------------------------------------------------


def test_xor_depth_two():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    y = np.array([0, 1, 1, 0])
    m = train_tree(X, y, max_depth=2)
    assert np.array_equal(predict_labels(m, X), y)
    assert m.depth == 2


def test_depth_zero_is_weighted_base_rate():
    X = np.arange(4.0)[:, None]
    y = np.array([1, 0, 0, 1])
    w = np.array([3.0, 1.0, 1.0, 1.0])
    m = train_tree(X, y, w, max_depth=0)
    assert m.n_nodes == 1
    assert predict_scores(m, X) == pytest.approx([4 / 6] * 4)


def test_pure_node_is_leaf():
    with pytest.warns(DegenerateLabels):
        m = train_tree(np.arange(6.0)[:, None], np.zeros(6, dtype=int))
    assert m.n_nodes == 1 and m.degenerate


def test_six_row_stump_scores():
    X = np.array([[0.0], [0.0], [0.0], [1.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1, 1, 0])
    m = train_tree(X, y, max_depth=1)
    assert m.threshold[0] == 0.5
    assert predict_scores(m, X) == pytest.approx([1 / 3] * 3 + [2 / 3] * 3)


def test_stump_matches_exhaustive_split_search():
    rng = np.random.default_rng(5)
    X = rng.integers(0, 6, size=(40, 3)).astype(float)
    y = (X[:, 1] + rng.normal(size=40) > 2.5).astype(int)

    def gini_cost(rows):
        if len(rows) == 0:
            return 0.0
        p = y[rows].mean()
        return len(rows) * 2 * p * (1 - p)

    best = None
    for f in range(3):
        for t in np.unique(X[:, f])[:-1]:
            left = np.flatnonzero(X[:, f] <= t)
            right = np.flatnonzero(X[:, f] > t)
            cost = gini_cost(left) + gini_cost(right)
            if best is None or cost < best[0] - 1e-12:
                best = (cost, f, t)
    m = train_tree(X, y, max_depth=1)
    assert m.feature[0] == best[1]
    lo = best[2]
    hi = np.unique(X[:, best[1]])[np.unique(X[:, best[1]]) > lo][0]
    assert m.threshold[0] == (lo + hi) / 2


def test_integer_weights_equal_duplicated_rows():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(30, 3))
    y = rng.integers(0, 2, 30)
    w = rng.integers(1, 4, 30)
    kw = dict(task="classification", classes=(0, 1), criterion="gini", max_depth=4,
              min_samples_leaf=1, min_samples_split=2, seed=0)
    a = build_tree(X, y, w.astype(float), **kw)
    b = build_tree(np.repeat(X, w, axis=0), np.repeat(y, w), np.ones(int(w.sum())), **kw)
    assert np.array_equal(a.feature, b.feature)
    assert np.array_equal(a.node_weight, b.node_weight)
    assert np.allclose(predict_scores(a, X), predict_scores(b, X))


def test_tree_weight_scale_invariance():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(50, 3))
    y = rng.integers(0, 2, 50)
    w = rng.uniform(0.5, 2.0, 50)
    a = train_tree(X, y, w, min_samples_leaf=3)
    b = train_tree(X, y, 7.0 * w, min_samples_leaf=3)
    assert np.array_equal(a.feature, b.feature)
    assert np.array_equal(predict_labels(a, X), predict_labels(b, X))


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    leaf=st.sampled_from([1, 3, 5, 10]),
    split=st.sampled_from([2, 5, 10, 20]),
    depth=st.sampled_from([None, 1, 3, 6]),
)
def test_tree_respects_constraints(seed, leaf, split, depth):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    y = rng.integers(0, 2, 60)
    w = rng.uniform(0.1, 2.0, 60)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateLabels)
        m = train_tree(X, y, w, min_samples_leaf=leaf, min_samples_split=split, max_depth=depth)
    inner = m.feature >= 0
    assert np.all(m.node_weight[~inner] >= leaf - 1e-9)
    assert np.all(m.node_weight[inner] >= split - 1e-9)
    if depth is not None:
        assert m.depth <= depth


def test_scale_invariance_of_tree_predictions():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(80, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    a = train_tree(X, y)
    b = train_tree(X * np.array([1.0, 1e6]) + 5.0, y)
    assert np.array_equal(predict_labels(a, X), predict_labels(b, X * np.array([1.0, 1e6]) + 5.0))


# -- grid search -------------------------------------------------------------------------


def test_grid_accounting():
    X, y = blobs(4, 100)
    _, cv = grid_search_cv("logistic_regression", None, 5, X, y, seed=0)
    assert cv.fit_count == 60 and len(cv.candidates) == 12
    _, cv = grid_search_cv("decision_tree", None, 5, X, y, seed=0)
    assert cv.fit_count == 360 and len(cv.candidates) == 72


def test_single_candidate_and_first_wins_ties():
    X, y = blobs(4, 60)
    _, cv = grid_search_cv("decision_tree", {"max_depth": [2]}, 3, X, y)
    assert cv.best_params == {"max_depth": 2}
    # separable data: every depth scores perfectly, so the first listed wins
    _, cv = grid_search_cv("decision_tree", {"max_depth": [5, 3, 1]}, 3, X, y)
    assert cv.best_params == {"max_depth": 5}


def test_best_has_max_mean_score():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(90, 3))
    y = (X[:, 0] + rng.normal(size=90) > 0).astype(int)
    model, cv = grid_search_cv("decision_tree", {"max_depth": [1, 2, 8], "criterion": ["gini", "entropy"]}, 4, X, y)
    assert cv.mean_scores[cv.best_index] == cv.mean_scores.max()
    assert np.allclose(cv.mean_scores, cv.fold_scores.mean(axis=1))
    refit = train_tree(X, y, **cv.best_params)
    assert np.array_equal(refit.threshold, model.threshold)


def test_folds_partition_rows():
    folds = kfold_indices(23, 5, seed=1)
    assert sorted(np.concatenate(folds).tolist()) == list(range(23))
    assert [len(f) for f in folds] == [5, 5, 5, 4, 4]


def test_grid_errors():
    X, y = blobs(0, 20)
    with pytest.raises(BadK):
        grid_search_cv("logistic_regression", None, 1, X, y)
    with pytest.raises(BadK):
        grid_search_cv("logistic_regression", None, 30, X, y)
    with pytest.raises(EmptyGrid):
        expand_grid({"alpha": []})


def test_default_grids_declared():
    assert LEARNERS["logistic_regression"].default_grid["alpha"] == [0.00005, 0.0001, 0.005, 0.001]
    assert len(expand_grid(LEARNERS["decision_tree"].default_grid)) == 72
