"""Tabular datasets: schema, CSV ingestion, seeded partitioning and one-hot encoding.

Cells are stored column-wise. Numeric columns are ``float64`` arrays where
``nan`` marks a missing cell; categorical columns are ``object`` arrays of
strings where ``None`` marks a missing cell. Every array held by a
:class:`Dataset` is read-only, so datasets can be shared freely between runs.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from fairpipe.errors import (
    BadFractions,
    EmptyTrain,
    ParseError,
    ResidualMissing,
    SchemaMismatch,
    TooFewRows,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)
ROLES = ("feature", "label", "protected", "ignore")

DEFAULT_MISSING_TOKENS = frozenset({"?", "", "NA"})
UNSEEN = "<UNSEEN>"
MISSING_INDICATOR = "<MISSING>"


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    role: str = "feature"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"column {self.name!r}: unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.role not in ROLES:
            raise SchemaMismatch(f"column {self.name!r}: unknown role {self.role!r}, expected one of {ROLES}")


def validate_schema(schema: Sequence[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaMismatch(f"duplicate column names: {dupes}")
    labels = [c for c in schema if c.role == "label"]
    if len(labels) != 1:
        raise SchemaMismatch(f"expected exactly one label column, found {len(labels)}")
    if not any(c.role == "protected" for c in schema):
        raise SchemaMismatch("schema needs at least one protected column")
    if not any(c.role == "feature" for c in schema):
        raise SchemaMismatch("schema has no feature columns")


@dataclass(frozen=True)
class GroupSpec:
    """Which values of the protected column form the privileged and unprivileged groups."""

    protected_column: str
    privileged_values: frozenset
    unprivileged_values: frozenset
    favorable_label: int = 1

    def __post_init__(self):
        priv = frozenset(str(v) for v in self.privileged_values)
        unpriv = frozenset(str(v) for v in self.unprivileged_values)
        object.__setattr__(self, "privileged_values", priv)
        object.__setattr__(self, "unprivileged_values", unpriv)
        if not priv or not unpriv:
            raise SchemaMismatch("privileged and unprivileged value sets must be non-empty")
        if priv & unpriv:
            raise SchemaMismatch(f"privileged and unprivileged values overlap: {sorted(priv & unpriv)}")
        if self.favorable_label not in (0, 1):
            raise SchemaMismatch(f"favorable_label must be 0 or 1, got {self.favorable_label!r}")

    def group_index(self, values: np.ndarray) -> np.ndarray:
        """1 for privileged rows, 0 for unprivileged rows, -1 for rows in neither set."""
        out = np.full(len(values), -1, dtype=np.int8)
        as_str = np.array([None if v is None else _cell_str(v) for v in values], dtype=object)
        out[np.isin(as_str, list(self.privileged_values))] = 1
        out[np.isin(as_str, list(self.unprivileged_values))] = 0
        return out


def _cell_str(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


@dataclass(frozen=True)
class LabelRule:
    """Maps raw label cells to {0, 1}.

    Either ``favorable_values`` (cells equal to one of them become 1) or
    ``threshold`` (numeric cells >= threshold become 1). With neither set the
    raw cells must already be ``0`` or ``1``.
    """

    favorable_values: frozenset | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.favorable_values is not None and self.threshold is not None:
            raise SchemaMismatch("label rule takes favorable_values or threshold, not both")
        if self.favorable_values is not None:
            object.__setattr__(self, "favorable_values", frozenset(str(v) for v in self.favorable_values))

    def apply(self, raw: Sequence[str], column: str) -> np.ndarray:
        labels = np.empty(len(raw), dtype=np.int8)
        for i, cell in enumerate(raw):
            if self.favorable_values is not None:
                labels[i] = 1 if cell in self.favorable_values else 0
            elif self.threshold is not None:
                try:
                    labels[i] = 1 if float(cell) >= self.threshold else 0
                except ValueError:
                    raise ParseError(f"row {i}: label {column!r} value {cell!r} is not numeric", row=i, column=column)
            else:
                if cell not in ("0", "1", "0.0", "1.0"):
                    raise ParseError(f"row {i}: label {column!r} value {cell!r} is not 0/1", row=i, column=column)
                labels[i] = int(float(cell))
        return labels


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.flags.writeable:
        a = a.copy()
        a.setflags(write=False)
    return a


def missing_mask(values: np.ndarray) -> np.ndarray:
    if values.dtype == object:
        return np.equal(values, None)
    return np.isnan(values)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable tabular dataset with binary labels, row weights and group metadata.

    ``columns`` holds every non-label column of ``schema``. ``row_ids`` are the
    row positions in the originally loaded file; they survive splitting,
    resampling and imputation and are what the isolation audit tracks.
    """

    schema: tuple
    columns: Mapping[str, np.ndarray]
    labels: np.ndarray
    groups: GroupSpec
    weights: np.ndarray | None = None
    imputed_flag: np.ndarray | None = None
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        schema = tuple(self.schema)
        object.__setattr__(self, "schema", schema)
        n = len(self.labels)
        cols = {}
        for c in schema:
            if c.role == "label":
                continue
            if c.name not in self.columns:
                raise SchemaMismatch(f"column {c.name!r} missing from dataset")
            arr = np.asarray(self.columns[c.name], dtype=float if c.kind == NUMERIC else object)
            if arr.shape != (n,):
                raise SchemaMismatch(f"column {c.name!r} has {arr.shape} cells, expected ({n},)")
            if c.role != "feature" and missing_mask(arr).any():
                raise SchemaMismatch(f"missing cells are only allowed in feature columns, found in {c.name!r}")
            cols[c.name] = _freeze(arr)
        object.__setattr__(self, "columns", MappingProxyType(cols))

        labels = np.asarray(self.labels, dtype=np.int8)
        if n and not np.isin(labels, (0, 1)).all():
            raise SchemaMismatch("labels must be 0 or 1")
        object.__setattr__(self, "labels", _freeze(labels))

        weights = np.ones(n) if self.weights is None else np.asarray(self.weights, dtype=float)
        if weights.shape != (n,) or (weights < 0).any() or not np.isfinite(weights).all():
            raise SchemaMismatch("weights must be finite, non-negative and one per row")
        object.__setattr__(self, "weights", _freeze(weights))

        if self.imputed_flag is None:
            flag = self.row_has_missing()
        else:
            flag = np.asarray(self.imputed_flag, dtype=bool)
        object.__setattr__(self, "imputed_flag", _freeze(flag))

        ids = np.arange(n, dtype=np.int64) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        object.__setattr__(self, "row_ids", _freeze(ids))

        if self.groups.protected_column not in cols:
            raise SchemaMismatch(f"protected column {self.groups.protected_column!r} not in schema")

    def __len__(self):
        return len(self.labels)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    def columns_with_role(self, *roles: str) -> list[ColumnSchema]:
        return [c for c in self.schema if c.role in roles]

    @property
    def feature_columns(self) -> list[ColumnSchema]:
        return self.columns_with_role("feature")

    @property
    def label_column(self) -> ColumnSchema:
        return self.columns_with_role("label")[0]

    def kind_of(self, name: str) -> str:
        for c in self.schema:
            if c.name == name:
                return c.kind
        raise SchemaMismatch(f"unknown column {name!r}")

    def missing(self, name: str) -> np.ndarray:
        return missing_mask(self.columns[name])

    def row_has_missing(self) -> np.ndarray:
        out = np.zeros(len(self), dtype=bool)
        for c in self.feature_columns:
            out |= self.missing(c.name)
        return out

    @property
    def group_index(self) -> np.ndarray:
        return self.groups.group_index(self.columns[self.groups.protected_column])

    @property
    def privileged_mask(self) -> np.ndarray:
        return self.group_index == 1

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if idx.dtype != bool:
            idx = idx.astype(np.int64)
        return dataclasses.replace(
            self,
            columns={k: v[idx] for k, v in self.columns.items()},
            labels=self.labels[idx],
            weights=self.weights[idx],
            imputed_flag=self.imputed_flag[idx],
            row_ids=self.row_ids[idx],
        )

    def replace(self, **changes) -> "Dataset":
        return dataclasses.replace(self, **changes)

    def with_columns(self, updates: Mapping[str, np.ndarray]) -> "Dataset":
        cols = dict(self.columns)
        cols.update(updates)
        return dataclasses.replace(self, columns=cols)

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        first = parts[0]
        return dataclasses.replace(
            first,
            columns={k: np.concatenate([p.columns[k] for p in parts]) for k in first.columns},
            labels=np.concatenate([p.labels for p in parts]),
            weights=np.concatenate([p.weights for p in parts]),
            imputed_flag=np.concatenate([p.imputed_flag for p in parts]),
            row_ids=np.concatenate([p.row_ids for p in parts]),
        )


def load_csv(
    path,
    schema: Sequence[ColumnSchema],
    groups: GroupSpec,
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
    label_rule: LabelRule | None = None,
    allow_extra_columns: bool = False,
) -> Dataset:
    """Read a headered CSV file into a :class:`Dataset`.

    Cells equal to a missing token (after stripping surrounding whitespace)
    become missing. Blank lines are skipped. Header columns not named in
    ``schema`` raise :class:`SchemaMismatch` unless ``allow_extra_columns``.
    """
    schema = tuple(schema)
    validate_schema(schema)
    tokens = frozenset(missing_tokens)
    label_rule = label_rule or LabelRule()

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file")
        rows = [r for r in reader if any(cell.strip() for cell in r)]

    position = {}
    for i, h in enumerate(header):
        position.setdefault(h, i)
    wanted = [c.name for c in schema]
    absent = [n for n in wanted if n not in position]
    if absent:
        raise SchemaMismatch(f"{path}: columns {absent} not found in header")
    extra = [h for h in header if h not in set(wanted)]
    if extra and not allow_extra_columns:
        raise SchemaMismatch(f"{path}: unknown columns in header: {extra}")

    width = len(header)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: row {r} has {len(row)} cells, header has {width}", row=r)

    columns = {}
    labels = None
    for c in schema:
        raw = [row[position[c.name]].strip() for row in rows]
        if c.role == "label":
            labels = label_rule.apply(raw, c.name)
            continue
        if c.kind == NUMERIC:
            arr = np.empty(len(raw))
            for r, cell in enumerate(raw):
                if cell in tokens:
                    arr[r] = np.nan
                    continue
                try:
                    arr[r] = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {r}, column {c.name!r}: {cell!r} is not numeric", row=r, column=c.name
                    )
        else:
            arr = np.array([None if cell in tokens else cell for cell in raw], dtype=object)
        if c.role != "feature" and missing_mask(arr).any():
            r = int(np.flatnonzero(missing_mask(arr))[0])
            raise ParseError(f"{path}: row {r}: missing value in non-feature column {c.name!r}", row=r, column=c.name)
        columns[c.name] = arr

    return Dataset(schema=schema, columns=columns, labels=labels, groups=groups)


@dataclass(frozen=True, eq=False)
class SplitBundle:
    train: Dataset
    validation: Dataset
    test: Dataset
    seed: int


def partition_sizes(n: int, fractions: Sequence[float]) -> tuple[int, ...]:
    """Floor each ``n * fraction`` and hand leftover rows to the largest remainders.

    Remainder ties go to the earlier partition (train first), so every size
    is within one row of its exact share.
    """
    exact = [n * f for f in fractions]
    sizes = [math.floor(e + 1e-9) for e in exact]
    leftover = n - sum(sizes)
    order = sorted(range(len(fractions)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return tuple(sizes)


def split(data: Dataset, fractions=(0.7, 0.1, 0.2), seed: int = 0) -> SplitBundle:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise BadFractions(f"fractions must be three positive numbers summing to 1, got {fractions}")
    n = len(data)
    sizes = partition_sizes(n, fractions)
    if min(sizes) == 0:
        raise TooFewRows(f"{n} rows cannot fill partitions {fractions} (sizes would be {sizes})")
    perm = np.random.default_rng(seed).permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return SplitBundle(
        train=data.take(perm[:a]),
        validation=data.take(perm[a:b]),
        test=data.take(perm[b:]),
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class EncodedMatrix:
    values: np.ndarray
    feature_names: tuple
    numeric_mask: np.ndarray
    group: np.ndarray
    row_ids: np.ndarray

    def __post_init__(self):
        for name in ("values", "numeric_mask", "group", "row_ids"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    def __len__(self):
        return self.values.shape[0]

    @property
    def group_mask(self) -> np.ndarray:
        """True for privileged rows."""
        return self.group == 1

    def with_values(self, values: np.ndarray) -> "EncodedMatrix":
        return dataclasses.replace(self, values=values)


@dataclass(frozen=True, eq=False)
class OneHotEncoder:
    """Fitted one-hot encoder.

    ``inputs`` lists ``(column, kind, categories)``; categorical columns get one
    dimension per training category plus an UNSEEN dimension that also absorbs
    missing cells. With ``numeric_missing="indicator"`` each numeric column
    gets an extra 0/1 missingness dimension and missing cells become ``fill``.
    """

    inputs: tuple
    numeric_missing: str
    fill: tuple
    feature_names: tuple = field(init=False)
    numeric_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        names, numeric = [], []
        for col, kind, cats in self.inputs:
            if kind == NUMERIC:
                names.append(col)
                numeric.append(True)
                if self.numeric_missing == "indicator":
                    names.append(f"{col}={MISSING_INDICATOR}")
                    numeric.append(False)
            else:
                names.extend(f"{col}={c}" for c in cats)
                names.append(f"{col}={UNSEEN}")
                numeric.extend([False] * (len(cats) + 1))
        object.__setattr__(self, "feature_names", tuple(names))
        object.__setattr__(self, "numeric_mask", _freeze(np.array(numeric, dtype=bool)))

    @property
    def dim(self) -> int:
        return len(self.feature_names)


def fit_one_hot_encoder(
    train: Dataset,
    include_protected: bool = True,
    columns: Sequence[str] | None = None,
    numeric_missing: str = "raise",
) -> OneHotEncoder:
    if len(train) == 0:
        raise EmptyTrain("cannot fit an encoder on an empty training set")
    if columns is None:
        roles = ("feature", "protected") if include_protected else ("feature",)
        columns = [c.name for c in train.columns_with_role(*roles)]
    inputs, fill = [], []
    for name in columns:
        kind = train.kind_of(name)
        arr = train.columns[name]
        if kind == NUMERIC:
            present = arr[~np.isnan(arr)]
            inputs.append((name, kind, ()))
            fill.append(float(present.mean()) if len(present) else 0.0)
        else:
            cats = tuple(sorted({v for v in arr if v is not None}))
            inputs.append((name, kind, cats))
            fill.append(0.0)
    return OneHotEncoder(inputs=tuple(inputs), numeric_missing=numeric_missing, fill=tuple(fill))


def apply_encoder(enc: OneHotEncoder, data: Dataset) -> EncodedMatrix:
    blocks = []
    for (name, kind, cats), fill in zip(enc.inputs, enc.fill):
        if name not in data.columns or data.kind_of(name) != kind:
            raise SchemaMismatch(f"column {name!r} ({kind}) not present in data")
        arr = data.columns[name]
        if kind == NUMERIC:
            miss = np.isnan(arr)
            if enc.numeric_missing == "indicator":
                blocks.append(np.where(miss, fill, arr)[:, None])
                blocks.append(miss.astype(float)[:, None])
            else:
                if miss.any():
                    raise ResidualMissing(f"numeric column {name!r} has {int(miss.sum())} missing cells")
                blocks.append(arr[:, None])
        else:
            block = np.zeros((len(arr), len(cats) + 1))
            known = np.zeros(len(arr), dtype=bool)
            for j, cat in enumerate(cats):
                hit = arr == cat
                block[hit, j] = 1.0
                known |= hit
            block[~known, len(cats)] = 1.0
            blocks.append(block)
    values = np.hstack(blocks) if blocks else np.zeros((len(data), 0))
    values = values.reshape(len(data), enc.dim)
    return EncodedMatrix(
        values=values,
        feature_names=enc.feature_names,
        numeric_mask=enc.numeric_mask,
        group=data.group_index,
        row_ids=data.row_ids,
    )
