"""Fairness-enhancing interventions.

Pre-processing: reweighing and the disparate impact remover act on
training data. Post-processing: reject option classification and
calibrated equalized odds act on scores and are fitted on the validation
partition. Every ``fit_*`` reads only the data handed to it.

Group arrays use the encoding of :meth:`GroupSpec.group_index`:
1 = privileged, 0 = unprivileged, -1 = neither (left untouched).
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from fairpipe.errors import (
    BadLambda,
    EmptyCell,
    EmptyGroup,
    EmptyValidation,
    SchemaMismatch,
    UnknownGroupValue,
)
from fairpipe.metrics import confusion, disparity, group_metrics
from fairpipe.tabular import NUMERIC, Dataset, _freeze

PRIV, UNPRIV = 1, 0


# -- reweighing ---------------------------------------------------------------


@dataclass(frozen=True)
class ReweighingWeights:
    """Weight per (group, label) cell: ``W_g * W_c / (W * W_gc)``."""

    cells: MappingProxyType

    def multiplier(self, group: np.ndarray, labels: np.ndarray) -> np.ndarray:
        out = np.ones(len(group))
        for (g, c), w in self.cells.items():
            out[(group == g) & (labels == c)] = w
        return out


def fit_reweighing(train: Dataset) -> ReweighingWeights:
    group, y, w = train.group_index, train.labels, train.weights
    known = group >= 0
    total = w[known].sum()
    cells = {}
    for g in (PRIV, UNPRIV):
        for c in (0, 1):
            w_gc = w[(group == g) & (y == c)].sum()
            if w_gc <= 0:
                name = "privileged" if g == PRIV else "unprivileged"
                raise EmptyCell(f"no training rows with group={name}, label={c}")
            w_g = w[group == g].sum()
            w_c = w[known & (y == c)].sum()
            cells[(g, c)] = float(w_g * w_c / (total * w_gc))
    return ReweighingWeights(MappingProxyType(cells))


def apply_reweighing(rw: ReweighingWeights, data: Dataset) -> Dataset:
    return data.replace(weights=data.weights * rw.multiplier(data.group_index, data.labels))


# -- disparate impact remover ---------------------------------------------------


def quantile(sorted_values: np.ndarray, p) -> np.ndarray:
    """Empirical quantile with linear interpolation between order statistics."""
    m = len(sorted_values)
    pos = np.asarray(p, dtype=float) * (m - 1)
    return np.interp(pos, np.arange(m), sorted_values)


def rank_fraction(sorted_values: np.ndarray, x) -> np.ndarray:
    """Inverse of :func:`quantile`: position of ``x`` in the group, scaled to [0, 1].

    Tied training values share their mid-rank; values outside the training
    range clamp to 0 or 1. A single-row group sits at 0.5.
    """
    m = len(sorted_values)
    if m == 1:
        return np.full(np.shape(x), 0.5)
    uniq, first, counts = np.unique(sorted_values, return_index=True, return_counts=True)
    mid = (first + (first + counts - 1)) / 2.0
    return np.interp(x, uniq, mid / (m - 1))


@dataclass(frozen=True, eq=False)
class RepairModel:
    """Per numeric feature, the sorted training values of each group."""

    repair_level: float
    columns: tuple
    privileged: MappingProxyType
    unprivileged: MappingProxyType
    schema_names: tuple

    def median_quantile(self, column: str, p) -> np.ndarray:
        qs = np.stack([quantile(self.privileged[column], p), quantile(self.unprivileged[column], p)])
        return np.median(qs, axis=0)

    def repair_values(self, column: str, x: np.ndarray, group: int, level: float | None = None) -> np.ndarray:
        lam = self.repair_level if level is None else level
        ref = self.privileged[column] if group == PRIV else self.unprivileged[column]
        target = self.median_quantile(column, rank_fraction(ref, x))
        return (1.0 - lam) * x + lam * target


def fit_di_remover(train: Dataset, repair_level: float) -> RepairModel:
    if not 0.0 <= repair_level <= 1.0:
        raise BadLambda(f"repair_level must be in [0, 1], got {repair_level}")
    group = train.group_index
    for g, name in ((PRIV, "privileged"), (UNPRIV, "unprivileged")):
        if not (group == g).any():
            raise EmptyGroup(f"no {name} rows in the training data")
    cols = tuple(c.name for c in train.feature_columns if c.kind == NUMERIC)
    priv, unpriv = {}, {}
    for col in cols:
        arr = train.columns[col]
        for g, store in ((PRIV, priv), (UNPRIV, unpriv)):
            vals = arr[(group == g) & ~np.isnan(arr)]
            if len(vals) == 0:
                raise EmptyGroup(f"column {col!r} has no observed values for group {g}")
            store[col] = _freeze(np.sort(vals))
    return RepairModel(
        float(repair_level), cols, MappingProxyType(priv), MappingProxyType(unpriv), tuple(train.column_names)
    )


def apply_repair(r: RepairModel, data: Dataset) -> Dataset:
    """Move each numeric feature toward the cross-group median distribution.

    ``x -> (1 - lambda) * x + lambda * Q_med(F_g(x))``; missing cells stay missing.
    """
    if tuple(data.column_names) != r.schema_names:
        raise SchemaMismatch("data schema differs from the schema the repairer was fitted on")
    group = data.group_index
    if (group < 0).any():
        bad = data.columns[data.groups.protected_column][group < 0][0]
        raise UnknownGroupValue(f"protected value {bad!r} is in neither group")
    if r.repair_level == 0.0 or not r.columns:
        return data
    updates = {}
    for col in r.columns:
        arr = data.columns[col].copy()
        for g in (PRIV, UNPRIV):
            rows = (group == g) & ~np.isnan(arr)
            if rows.any():
                arr[rows] = r.repair_values(col, arr[rows], g)
        updates[col] = arr
    return data.with_columns(updates)


# -- reject option classification -------------------------------------------------

THETA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 10))
ROC_OBJECTIVES = ("statistical_parity", "average_odds", "equal_opportunity")
_OBJECTIVE_FIELD = {
    "statistical_parity": "statistical_parity_diff",
    "average_odds": "avg_odds_diff",
    "equal_opportunity": "equal_opportunity_diff",
}


@dataclass(frozen=True)
class RejectOptionRule:
    theta: float
    objective: str = "statistical_parity"
    threshold: float = 0.5


def apply_reject_option(rule: RejectOptionRule, scores, groups) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    groups = np.asarray(groups)
    labels = (scores >= rule.threshold).astype(np.int8)
    band = np.abs(scores - rule.threshold) < rule.theta
    labels[band & (groups == UNPRIV)] = 1
    labels[band & (groups == PRIV)] = 0
    return labels


def _objective_and_accuracy(labels, pred, groups, weights, objective):
    priv = group_metrics(confusion(labels, pred, weights, groups == PRIV))
    unpriv = group_metrics(confusion(labels, pred, weights, groups == UNPRIV))
    overall = group_metrics(confusion(labels, pred, weights))
    value = getattr(disparity(priv, unpriv), _OBJECTIVE_FIELD[objective])
    return value, overall.accuracy


def fit_reject_option(val_scores, val_labels, val_groups, objective="statistical_parity", weights=None) -> RejectOptionRule:
    """Choose the critical band half-width on validation data.

    Candidates are ranked by |objective disparity| (undefined ranks last),
    then by accuracy, then by the smaller band.
    """
    if objective not in ROC_OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}, expected one of {ROC_OBJECTIVES}")
    scores = np.asarray(val_scores, dtype=float)
    if len(scores) == 0:
        raise EmptyValidation("reject option needs a non-empty validation set")
    labels = np.asarray(val_labels)
    groups = np.asarray(val_groups)
    best_key, best = None, None
    for i, theta in enumerate(THETA_GRID):
        rule = RejectOptionRule(theta, objective)
        value, acc = _objective_and_accuracy(labels, apply_reject_option(rule, scores, groups), groups, weights, objective)
        gap = np.inf if value is None else round(abs(value), 12)
        key = (gap, -round(acc if acc is not None else 0.0, 12), i)
        if best_key is None or key < best_key:
            best_key, best = key, rule
    return best


# -- calibrated equalized odds ----------------------------------------------------

CEO_COSTS = ("fnr", "fpr", "weighted")


def generalized_cost(scores, labels, cost: str) -> float:
    """Generalized FNR (mean of 1 - s over positives), FPR (mean of s over negatives) or their mean."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos, neg = labels == 1, labels == 0
    gfnr = float(np.mean(1.0 - scores[pos])) if pos.any() else 0.0
    gfpr = float(np.mean(scores[neg])) if neg.any() else 0.0
    if cost == "fnr":
        return gfnr
    if cost == "fpr":
        return gfpr
    if cost == "weighted":
        return 0.5 * (gfnr + gfpr)
    raise ValueError(f"unknown cost {cost!r}, expected one of {CEO_COSTS}")


@dataclass(frozen=True)
class CalibratedEqOddsRule:
    p_priv: float
    p_unpriv: float
    base_rate_priv: float
    base_rate_unpriv: float
    cost: str = "weighted"

    def mix_rate(self, group: int) -> float:
        return self.p_priv if group == PRIV else self.p_unpriv

    def base_rate(self, group: int) -> float:
        return self.base_rate_priv if group == PRIV else self.base_rate_unpriv


def expected_mixed_cost(scores, labels, base_rate, p, cost) -> float:
    """Generalized cost when each score is swapped for ``base_rate`` with probability ``p``."""
    trivial = np.full(len(scores), base_rate)
    return (1.0 - p) * generalized_cost(scores, labels, cost) + p * generalized_cost(trivial, labels, cost)


def fit_calibrated_eq_odds(val_scores, val_labels, val_groups, cost="weighted") -> CalibratedEqOddsRule:
    """Mix the lower-cost group with its base rate until the expected costs match."""
    if cost not in CEO_COSTS:
        raise ValueError(f"unknown cost {cost!r}, expected one of {CEO_COSTS}")
    scores = np.asarray(val_scores, dtype=float)
    labels = np.asarray(val_labels)
    groups = np.asarray(val_groups)
    parts = {}
    for g, name in ((PRIV, "privileged"), (UNPRIV, "unprivileged")):
        mask = groups == g
        if not mask.any():
            raise EmptyGroup(f"no {name} rows in the validation data")
        base = float(labels[mask].mean())
        own = generalized_cost(scores[mask], labels[mask], cost)
        trivial = generalized_cost(np.full(mask.sum(), base), labels[mask], cost)
        parts[g] = (base, own, trivial)

    rates = {PRIV: 0.0, UNPRIV: 0.0}
    (_, c_priv, _), (_, c_unpriv, _) = parts[PRIV], parts[UNPRIV]
    if c_priv != c_unpriv:
        low = PRIV if c_priv < c_unpriv else UNPRIV
        high = UNPRIV if low == PRIV else PRIV
        _, own, trivial = parts[low]
        if trivial > own:
            rates[low] = float(np.clip((parts[high][1] - own) / (trivial - own), 0.0, 1.0))
    return CalibratedEqOddsRule(rates[PRIV], rates[UNPRIV], parts[PRIV][0], parts[UNPRIV][0], cost)


def apply_calibrated_eq_odds(rule: CalibratedEqOddsRule, scores, groups, seed: int = 0):
    """Return ``(scores, labels)`` after seeded mixing with the group base rates."""
    scores = np.asarray(scores, dtype=float).copy()
    groups = np.asarray(groups)
    draw = np.random.default_rng(seed).random(len(scores))
    for g in (PRIV, UNPRIV):
        swap = (groups == g) & (draw < rule.mix_rate(g))
        scores[swap] = rule.base_rate(g)
    return scores, (scores >= 0.5).astype(np.int8)
