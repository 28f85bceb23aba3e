"""Train-fitted feature scaling, missing-value handling and resampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fairpipe.errors import (
    DimensionMismatch,
    EmptyData,
    EmptyTrain,
    NoCompleteRows,
    ResidualMissing,
    SchemaMismatch,
    UnknownColumn,
)
from fairpipe.learn.tree import build_tree
from fairpipe.tabular import (
    NUMERIC,
    Dataset,
    EncodedMatrix,
    _freeze,
    apply_encoder,
    fit_one_hot_encoder,
    missing_mask,
)

SCALERS = ("standard", "minmax", "none")
IMPUTERS = ("complete_case", "mode", "tree_chained")
RESAMPLERS = ("none", "bootstrap")


@dataclass(frozen=True, eq=False)
class ScalerModel:
    """Per-column affine map ``(x - offset) / spread`` over the numeric dimensions.

    For ``standard`` the offset is the mean and the spread the population
    standard deviation; for ``minmax`` they are the minimum and ``max - min``.
    Zero-spread columns map to 0.
    """

    kind: str
    columns: np.ndarray
    offset: np.ndarray
    spread: np.ndarray
    feature_names: tuple

    @property
    def mean(self):
        return self.offset if self.kind == "standard" else None

    @property
    def std(self):
        return self.spread if self.kind == "standard" else None

    @property
    def min(self):
        return self.offset if self.kind == "minmax" else None

    @property
    def max(self):
        return self.offset + self.spread if self.kind == "minmax" else None


def fit_scaler(kind: str, train: EncodedMatrix) -> ScalerModel:
    if kind not in SCALERS:
        raise ValueError(f"unknown scaler {kind!r}, expected one of {SCALERS}")
    if len(train) == 0:
        raise EmptyTrain("cannot fit a scaler on an empty training set")
    cols = np.flatnonzero(train.numeric_mask) if kind != "none" else np.array([], dtype=np.int64)
    block = train.values[:, cols]
    if kind == "standard":
        offset, spread = block.mean(axis=0), block.std(axis=0)
    elif kind == "minmax":
        offset = block.min(axis=0)
        spread = block.max(axis=0) - offset
    else:
        offset = spread = np.zeros(0)
    return ScalerModel(kind, _freeze(cols), _freeze(offset), _freeze(spread), tuple(train.feature_names))


def apply_scaler(s: ScalerModel, data: EncodedMatrix) -> EncodedMatrix:
    if data.values.shape[1] != len(s.feature_names) or tuple(data.feature_names) != s.feature_names:
        raise DimensionMismatch(
            f"scaler fitted on {len(s.feature_names)} columns, data has {data.values.shape[1]}"
        )
    if s.kind == "none" or len(s.columns) == 0:
        return data
    values = data.values.copy()
    block = values[:, s.columns] - s.offset
    safe = np.where(s.spread > 0, s.spread, 1.0)
    values[:, s.columns] = np.where(s.spread > 0, block / safe, 0.0)
    return data.with_values(values)


@dataclass(frozen=True, eq=False)
class ImputerModel:
    """Fitted missing-value handler.

    ``fill`` maps each target column to its mode (``mode``);
    ``models`` maps each target column to ``(encoder, tree)`` (``tree_chained``).
    """

    kind: str
    target_columns: tuple
    schema_names: tuple
    fill: dict
    models: dict


TREE_IMPUTER_PARAMS = {"max_depth": 10, "min_samples_leaf": 5, "min_samples_split": 10}


def _mode(values: np.ndarray):
    uniq, counts = np.unique(values, return_counts=True)
    # np.unique sorts, so argmax's first hit is the smallest tied value
    return uniq[int(np.argmax(counts))]


def fit_imputer(kind: str, train: Dataset, target_columns: Sequence[str] | None = None, seed: int = 0) -> ImputerModel:
    """Fit a missing-value handler on the training partition.

    ``target_columns`` defaults to every feature column. ``tree_chained``
    fits one tree per target on the rows where the target is present, using
    all other feature columns (never the label) as inputs; missing inputs
    are encoded through the UNSEEN dimension or a missingness indicator.
    """
    if kind not in IMPUTERS:
        raise ValueError(f"unknown imputer {kind!r}, expected one of {IMPUTERS}")
    features = [c.name for c in train.feature_columns]
    if target_columns is None:
        target_columns = features
    for col in target_columns:
        if col not in features:
            raise UnknownColumn(f"imputation target {col!r} is not a feature column")
    ordered = tuple(c for c in features if c in set(target_columns))
    fill, models = {}, {}
    if kind == "mode":
        for col in ordered:
            arr = train.columns[col]
            present = arr[~missing_mask(arr)]
            if len(present) == 0:
                raise NoCompleteRows(f"column {col!r} has no observed values in the training data")
            value = _mode(present)
            fill[col] = float(value) if train.kind_of(col) == NUMERIC else str(value)
    elif kind == "tree_chained":
        for col in ordered:
            inputs = [c for c in features if c != col]
            present = ~train.missing(col)
            if not present.any():
                raise NoCompleteRows(f"column {col!r} has no observed values in the training data")
            rows = train.take(np.flatnonzero(present))
            enc = fit_one_hot_encoder(rows, columns=inputs, numeric_missing="indicator")
            X = apply_encoder(enc, rows).values
            target = rows.columns[col]
            if train.kind_of(col) == NUMERIC:
                tree = build_tree(X, target, task="regression", seed=seed, **TREE_IMPUTER_PARAMS)
            else:
                tree = build_tree(X, target, task="classification", criterion="gini", seed=seed, **TREE_IMPUTER_PARAMS)
            models[col] = (enc, tree)
    return ImputerModel(kind, ordered, tuple(train.column_names), fill, models)


def handle_missing(m: ImputerModel, data: Dataset) -> Dataset:
    if tuple(data.column_names) != m.schema_names:
        raise SchemaMismatch("data schema differs from the schema the imputer was fitted on")
    if m.kind == "complete_case":
        return data.take(np.flatnonzero(~data.row_has_missing()))

    updates = {}
    for col in m.target_columns:
        arr = data.columns[col]
        miss = missing_mask(arr)
        if not miss.any():
            continue
        filled = arr.copy()
        if m.kind == "mode":
            filled[miss] = m.fill[col]
        else:
            enc, tree = m.models[col]
            # inputs always come from the original, un-imputed cells
            X = apply_encoder(enc, data.take(np.flatnonzero(miss))).values
            pred = tree.predict(X)
            filled[miss] = pred.astype(float) if data.kind_of(col) == NUMERIC else pred
        updates[col] = filled
    out = data.with_columns(updates) if updates else data
    leftover = [c.name for c in out.feature_columns if out.missing(c.name).any()]
    if leftover:
        raise ResidualMissing(f"missing cells remain in non-target columns {leftover}")
    return out


def resample(data: Dataset, kind: str = "none", seed: int = 0) -> Dataset:
    if len(data) == 0:
        raise EmptyData("cannot resample an empty dataset")
    if kind == "none":
        return data
    if kind == "bootstrap":
        idx = np.random.default_rng(seed).integers(0, len(data), size=len(data))
        return data.take(idx)
    raise ValueError(f"unknown resampler {kind!r}, expected one of {RESAMPLERS}")
