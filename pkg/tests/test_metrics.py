import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import full_report, tally
from fairpipe.errors import LengthMismatch
from fairpipe.metrics import (
    ConfusionCounts,
    confusion,
    disparity,
    evaluate,
    evaluate_subsets,
    group_metrics,
    metric_columns,
)


def test_six_row_hand_tally():
    y = [1, 1, 0, 0, 1, 0]
    p = [1, 0, 1, 0, 1, 0]
    w = [1.0, 2.0, 0.5, 1.0, 3.0, 1.5]
    assert confusion(y, p, w) == ConfusionCounts(tp=4.0, fp=0.5, tn=2.5, fn=2.0)
    assert confusion(y, p, w, mask=[1, 1, 1, 0, 0, 0]) == ConfusionCounts(1.0, 0.5, 0.0, 2.0)


def test_perfect_and_all_ones():
    y = np.array([1, 0, 1, 1, 0])
    c = confusion(y, y)
    assert c.fp == 0 and c.fn == 0
    c = confusion(y, np.ones(5), np.full(5, 2.0))
    assert (c.tp, c.fp) == (0.6 * 10, 0.4 * 10)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [1])


def _with_selection(rate, n=4):
    k = int(rate * n)
    return group_metrics(ConfusionCounts(tp=k, fp=0, tn=0, fn=n - k))


def test_disparity_worked_examples():
    d = disparity(_with_selection(0.5), _with_selection(0.25))
    assert d.disparate_impact == 0.5 and d.statistical_parity_diff == -0.25
    same = disparity(_with_selection(0.5), _with_selection(0.5))
    assert same.disparate_impact == 1.0
    assert all(same[k] == 0 for k in same if k.endswith("_diff") and same[k] is not None)
    z = disparity(_with_selection(0.0), _with_selection(0.25))
    assert z.disparate_impact is None and z.statistical_parity_diff == 0.25


def test_undefined_rates():
    g = group_metrics(ConfusionCounts(0, 0, 3, 0))
    assert g.tpr is None and g.fnr is None and g.precision is None
    assert g.fpr == 0.0 and g.accuracy == 1.0


rows = st.lists(
    st.tuples(st.integers(0, 1), st.integers(0, 1), st.sampled_from([0, 1, -1]), st.floats(0.0, 4.0)),
    min_size=1, max_size=40,
)


@settings(max_examples=150, deadline=None)
@given(rows)
def test_report_matches_oracle(data):
    y, p, g, w = (list(c) for c in zip(*data))
    rep = evaluate(y, p, g, np.array(w))
    overall, priv, unpriv, disp = full_report(y, p, g, w)
    for mine, ref in ((rep.overall, overall), (rep.privileged, priv), (rep.unprivileged, unpriv), (rep.disparity, disp)):
        for k, v in ref.items():
            if v is None:
                assert mine[k] is None, k
            else:
                assert mine[k] == pytest.approx(v, abs=1e-12), k


@settings(max_examples=100, deadline=None)
@given(rows)
def test_swapping_groups_negates_diffs(data):
    y, p, g, w = (np.array(c) for c in zip(*data))
    a = evaluate(y, p, g, w).disparity
    swapped = np.where(g == -1, -1, 1 - g)
    b = evaluate(y, p, swapped, w).disparity
    for k in a:
        if k == "disparate_impact":
            if a[k] is not None:
                assert b[k] == pytest.approx(1 / a[k])
        elif a[k] is None:
            assert b[k] is None
        else:
            assert b[k] == pytest.approx(-a[k], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(rows, st.lists(st.booleans(), min_size=40, max_size=40))
def test_subsets_reconstruct_counts(data, flags):
    y, p, g, w = (np.array(c) for c in zip(*data))
    flag = np.array(flags[: len(y)])
    all_, comp, imp = evaluate_subsets(y, p, g, flag, w)
    assert (all_.subset, comp.subset, imp.subset) == ("all", "complete_rows", "imputed_rows")
    assert comp.n_rows + imp.n_rows == all_.n_rows
    total = confusion(y, p, w, ~flag) + confusion(y, p, w, flag)
    ref = confusion(y, p, w)
    assert [total.tp, total.fp, total.tn, total.fn] == pytest.approx([ref.tp, ref.fp, ref.tn, ref.fn], abs=1e-12)
    assert tally(y, p, w, [True] * len(y)) == pytest.approx((ref.tp, ref.fp, ref.tn, ref.fn))


def test_favorable_label_zero():
    rep = evaluate([0, 0, 1, 1], [0, 1, 0, 1], [1, 1, 0, 0], favorable_label=0)
    assert rep.privileged.selection_rate == 0.5
    assert rep.overall.base_rate == 0.5


def test_metric_columns_stable():
    cols = metric_columns()
    assert len(cols) == 3 * 8 + 7
    assert cols[:2] == ["overall_base_rate", "overall_selection_rate"]
    assert "disparate_impact" in cols and "fpr_diff" in cols
