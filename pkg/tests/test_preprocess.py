import numpy as np
import pytest

from conftest import make_dataset
from fairpipe.errors import DimensionMismatch, NoCompleteRows, ResidualMissing, UnknownColumn
from fairpipe.preprocess import apply_scaler, fit_imputer, fit_scaler, handle_missing, resample
from fairpipe.tabular import apply_encoder, fit_one_hot_encoder


def encoded(**numeric):
    n = len(next(iter(numeric.values())))
    d = make_dataset(numeric=numeric, labels=[i % 2 for i in range(n)])
    return apply_encoder(fit_one_hot_encoder(d, include_protected=False), d)


# -- scaling -----------------------------------------------------------------------------


def test_standard_statistics_and_application():
    s = fit_scaler("standard", encoded(x=[1.0, 2.0, 3.0]))
    assert s.mean[0] == 2.0
    assert s.std[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-12)
    assert s.std[0] == pytest.approx(0.81649658, abs=1e-8)
    out = apply_scaler(s, encoded(x=[4.0]))
    assert out.values[0, 0] == pytest.approx(2.449490, abs=1e-6)


def test_standardized_train_has_unit_moments(rng):
    m = encoded(x=rng.normal(5, 3, 200), z=rng.uniform(0, 100, 200))
    v = apply_scaler(fit_scaler("standard", m), m).values
    assert np.allclose(v.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(v.std(axis=0), 1, atol=1e-12)


def test_minmax_out_of_range_and_constant():
    s = fit_scaler("minmax", encoded(x=[0.0, 10.0], c=[5.0, 5.0]))
    assert s.min.tolist() == [0.0, 5.0] and s.max.tolist() == [10.0, 5.0]
    out = apply_scaler(s, encoded(x=[20.0], c=[7.0]))
    assert out.values.tolist() == [[2.0, 0.0]]


def test_none_is_identity(rng):
    m = encoded(x=rng.normal(size=10))
    assert np.array_equal(apply_scaler(fit_scaler("none", m), m).values, m.values)


def test_only_numeric_dims_are_scaled():
    d = make_dataset(numeric={"x": [1.0, 3.0]}, categorical={"c": ["a", "b"]}, labels=[0, 1])
    m = apply_encoder(fit_one_hot_encoder(d, include_protected=False), d)
    v = apply_scaler(fit_scaler("standard", m), m).values
    assert v[:, 0].tolist() == [-1.0, 1.0]
    assert np.array_equal(v[:, 1:], m.values[:, 1:])


def test_scaler_dimension_mismatch():
    s = fit_scaler("standard", encoded(x=[1.0, 2.0]))
    with pytest.raises(DimensionMismatch):
        apply_scaler(s, encoded(x=[1.0], z=[2.0]))


# -- imputation -----------------------------------------------------------------------


def test_mode_fill_and_tie_rule():
    d = make_dataset(categorical={"c": ["a", "a", "b", None]}, labels=[0, 1, 0, 1])
    m = fit_imputer("mode", d)
    assert m.fill["c"] == "a"
    assert handle_missing(m, d).columns["c"].tolist() == ["a", "a", "b", "a"]
    tie = make_dataset(categorical={"c": ["b", "a"]}, labels=[0, 1])
    assert fit_imputer("mode", tie).fill["c"] == "a"


def test_mode_numeric_and_flag_kept():
    d = make_dataset(numeric={"x": [2.0, 2.0, 7.0, np.nan]}, labels=[0, 1, 0, 1])
    out = handle_missing(fit_imputer("mode", d), d)
    assert out.columns["x"].tolist() == [2.0, 2.0, 7.0, 2.0]
    assert out.imputed_flag.tolist() == [False, False, False, True]


def test_complete_case_drops_rows():
    d = make_dataset(numeric={"x": [1.0, np.nan, 3.0]}, categorical={"c": ["a", "b", None]}, labels=[0, 1, 0])
    out = handle_missing(fit_imputer("complete_case", d), d)
    assert out.row_ids.tolist() == [0]


def test_imputers_are_identity_on_complete_data(rng):
    d = make_dataset(numeric={"x": rng.normal(size=30)}, categorical={"c": rng.choice(["a", "b"], 30)},
                     labels=rng.integers(0, 2, 30))
    for kind in ("complete_case", "mode", "tree_chained"):
        out = handle_missing(fit_imputer(kind, d), d)
        assert np.array_equal(out.columns["x"], d.columns["x"])
        assert out.columns["c"].tolist() == d.columns["c"].tolist()


def test_tree_chained_recovers_copied_column(rng):
    n = 200
    src = rng.choice(["red", "green", "blue"], n)
    num = rng.integers(0, 5, n).astype(float)
    copy_c = src.astype(object)
    copy_n = num.copy() * 10
    miss = rng.random(n) < 0.2
    copy_c[miss] = None
    copy_n[miss] = np.nan
    d = make_dataset(numeric={"num": num, "num10": copy_n}, categorical={"src": src, "copy": copy_c},
                     labels=rng.integers(0, 2, n))
    m = fit_imputer("tree_chained", d, target_columns=["copy", "num10"])
    out = handle_missing(m, d)
    assert out.columns["copy"].tolist() == src.tolist()
    assert np.allclose(out.columns["num10"], num * 10)


def test_tree_chained_ignores_label(rng):
    n = 120
    y = rng.integers(0, 2, n)
    target = np.where(y == 1, "yes", "no").astype(object)
    target[:20] = None
    noise = rng.normal(size=n)
    d = make_dataset(numeric={"noise": noise}, categorical={"t": target}, labels=y)
    m = fit_imputer("tree_chained", d, target_columns=["t"])
    enc, _ = m.models["t"]
    assert all(col != "y" for col, _, _ in enc.inputs)


def test_imputer_errors():
    d = make_dataset(numeric={"x": [1.0, np.nan]}, categorical={"c": [None, None]}, labels=[0, 1])
    with pytest.raises(UnknownColumn):
        fit_imputer("mode", d, target_columns=["nope"])
    with pytest.raises(NoCompleteRows):
        fit_imputer("mode", d, target_columns=["c"])
    m = fit_imputer("mode", d, target_columns=["x"])
    with pytest.raises(ResidualMissing):
        handle_missing(m, d)


def test_imputer_fit_ignores_held_out_rows(rng):
    train = make_dataset(categorical={"c": ["a", "a", None, "b"]}, labels=[0, 1, 0, 1])
    test = make_dataset(categorical={"c": ["b", "b", "b", None]}, labels=[0, 1, 0, 1])
    m = fit_imputer("mode", train)
    assert handle_missing(m, test).columns["c"][3] == "a"


# -- resampling -------------------------------------------------------------------------


def test_resample_none_and_bootstrap(rng):
    d = make_dataset(numeric={"x": np.arange(1000.0)}, labels=np.arange(1000) % 2)
    assert resample(d, "none") is d
    a, b = resample(d, "bootstrap", seed=5), resample(d, "bootstrap", seed=5)
    assert len(a) == 1000
    assert np.array_equal(a.row_ids, b.row_ids)
    assert set(a.columns["x"].tolist()) <= set(d.columns["x"].tolist())
    assert np.array_equal(a.columns["x"], a.row_ids.astype(float))
