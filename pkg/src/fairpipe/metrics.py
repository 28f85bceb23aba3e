"""Weighted confusion counts, per-group metrics and cross-group disparities.

A metric whose denominator is zero is UNDEFINED, represented as ``None``.
Extra metrics are one function each: add it to :data:`GROUP_METRICS` or
:data:`DISPARITY_METRICS` and it appears in every report.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from fairpipe.errors import LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: float
    fp: float
    tn: float
    fn: float

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


def confusion(y_true, y_pred, weights=None, mask=None) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    n = len(y_true)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    m = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not (len(y_pred) == len(w) == len(m) == n):
        raise LengthMismatch(
            f"lengths differ: y_true={n}, y_pred={len(y_pred)}, weights={len(w)}, mask={len(m)}"
        )
    t, p, w = y_true[m] == 1, y_pred[m] == 1, w[m]
    return ConfusionCounts(
        tp=float(w[t & p].sum()),
        fp=float(w[~t & p].sum()),
        tn=float(w[~t & ~p].sum()),
        fn=float(w[t & ~p].sum()),
    )


def _ratio(num, den):
    return None if den == 0 else num / den


def _diff(a, b):
    return None if a is None or b is None else a - b


GROUP_METRICS: dict[str, Callable[[ConfusionCounts], float | None]] = {
    "base_rate": lambda c: _ratio(c.tp + c.fn, c.total),
    "selection_rate": lambda c: _ratio(c.tp + c.fp, c.total),
    "accuracy": lambda c: _ratio(c.tp + c.tn, c.total),
    "tpr": lambda c: _ratio(c.tp, c.tp + c.fn),
    "fpr": lambda c: _ratio(c.fp, c.fp + c.tn),
    "fnr": lambda c: _ratio(c.fn, c.tp + c.fn),
    "tnr": lambda c: _ratio(c.tn, c.fp + c.tn),
    "precision": lambda c: _ratio(c.tp, c.tp + c.fp),
}


class GroupMetrics(dict):
    """Mapping of group metric name to value; also readable as attributes."""

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name) from None


def group_metrics(counts: ConfusionCounts) -> GroupMetrics:
    return GroupMetrics((name, fn(counts)) for name, fn in GROUP_METRICS.items())


def _disparate_impact(p, u):
    sp, su = p.selection_rate, u.selection_rate
    if sp is None or su is None or sp == 0 or su == 0:
        return None
    return su / sp


def _avg_odds(p, u):
    a, b = _diff(u.fpr, p.fpr), _diff(u.tpr, p.tpr)
    return None if a is None or b is None else (a + b) / 2


DISPARITY_METRICS: dict[str, Callable[[GroupMetrics, GroupMetrics], float | None]] = {
    "disparate_impact": _disparate_impact,
    "statistical_parity_diff": lambda p, u: _diff(u.selection_rate, p.selection_rate),
    "fnr_diff": lambda p, u: _diff(u.fnr, p.fnr),
    "fpr_diff": lambda p, u: _diff(u.fpr, p.fpr),
    "equal_opportunity_diff": lambda p, u: _diff(u.tpr, p.tpr),
    "avg_odds_diff": _avg_odds,
    "accuracy_diff": lambda p, u: _diff(u.accuracy, p.accuracy),
}


class DisparityMetrics(GroupMetrics):
    pass


def disparity(priv: GroupMetrics, unpriv: GroupMetrics) -> DisparityMetrics:
    """Unprivileged-versus-privileged comparisons; DI is defined only when both selection rates are positive."""
    return DisparityMetrics((name, fn(priv, unpriv)) for name, fn in DISPARITY_METRICS.items())


SUBSETS = ("all", "complete_rows", "imputed_rows")


@dataclass(frozen=True)
class MetricsReport:
    partition: str
    subset: str
    n_rows: int
    overall: GroupMetrics
    privileged: GroupMetrics
    unprivileged: GroupMetrics
    disparity: DisparityMetrics

    def flat(self) -> dict:
        """Metric columns in report order: overall_*, priv_*, unpriv_*, then disparities."""
        out = {}
        for prefix, gm in (("overall", self.overall), ("priv", self.privileged), ("unpriv", self.unprivileged)):
            for name in GROUP_METRICS:
                out[f"{prefix}_{name}"] = gm[name]
        for name in DISPARITY_METRICS:
            out[name] = self.disparity[name]
        return out

    def as_dict(self) -> dict:
        return asdict(self)


def metric_columns() -> list[str]:
    cols = [f"{prefix}_{name}" for prefix in ("overall", "priv", "unpriv") for name in GROUP_METRICS]
    return cols + list(DISPARITY_METRICS)


def evaluate(y_true, y_pred, groups, weights=None, mask=None, partition="test", subset="all",
             favorable_label=1) -> MetricsReport:
    """Build a :class:`MetricsReport` for the rows selected by ``mask``.

    ``groups`` uses 1 = privileged, 0 = unprivileged; rows in neither group
    count toward ``overall`` only. Selection means predicting ``favorable_label``.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if favorable_label == 0:
        y_true, y_pred = 1 - y_true, 1 - y_pred
    groups = np.asarray(groups)
    m = np.ones(len(y_true), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if len(groups) != len(y_true):
        raise LengthMismatch(f"groups has {len(groups)} rows, labels have {len(y_true)}")
    priv = group_metrics(confusion(y_true, y_pred, weights, m & (groups == 1)))
    unpriv = group_metrics(confusion(y_true, y_pred, weights, m & (groups == 0)))
    return MetricsReport(
        partition=partition,
        subset=subset,
        n_rows=int(m.sum()),
        overall=group_metrics(confusion(y_true, y_pred, weights, m)),
        privileged=priv,
        unprivileged=unpriv,
        disparity=disparity(priv, unpriv),
    )


def evaluate_subsets(y_true, y_pred, groups, imputed_flag, weights=None, partition="test",
                     favorable_label=1) -> list[MetricsReport]:
    """Reports for all rows, rows that were complete, and rows that had missing cells."""
    flag = np.asarray(imputed_flag, dtype=bool)
    masks = {"all": None, "complete_rows": ~flag, "imputed_rows": flag}
    return [
        evaluate(y_true, y_pred, groups, weights, masks[s], partition, s, favorable_label)
        for s in SUBSETS
    ]
