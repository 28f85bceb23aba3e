"""Independent reference implementations used only by the tests.

They are written for clarity, loop over rows, and share no code with the
package beyond plain numpy.
"""

import itertools
import math

import numpy as np


# -- metrics ------------------------------------------------------------------------

def tally(y_true, y_pred, weights, keep):
    tp = fp = tn = fn = 0.0
    for t, p, w, k in zip(y_true, y_pred, weights, keep):
        if not k:
            continue
        if t == 1 and p == 1:
            tp += w
        elif t == 0 and p == 1:
            fp += w
        elif t == 0 and p == 0:
            tn += w
        else:
            fn += w
    return tp, fp, tn, fn


def safe_div(a, b):
    return None if b == 0 else a / b


def group_table(tp, fp, tn, fn):
    n = tp + fp + tn + fn
    return {
        "base_rate": safe_div(tp + fn, n),
        "selection_rate": safe_div(tp + fp, n),
        "accuracy": safe_div(tp + tn, n),
        "tpr": safe_div(tp, tp + fn),
        "fpr": safe_div(fp, fp + tn),
        "fnr": safe_div(fn, tp + fn),
        "tnr": safe_div(tn, fp + tn),
        "precision": safe_div(tp, tp + fp),
    }


def minus(a, b):
    return None if a is None or b is None else a - b


def disparity_table(p, u):
    di = None
    if p["selection_rate"] and u["selection_rate"]:
        di = u["selection_rate"] / p["selection_rate"]
    ao = None
    if minus(u["fpr"], p["fpr"]) is not None and minus(u["tpr"], p["tpr"]) is not None:
        ao = 0.5 * (minus(u["fpr"], p["fpr"]) + minus(u["tpr"], p["tpr"]))
    return {
        "disparate_impact": di,
        "statistical_parity_diff": minus(u["selection_rate"], p["selection_rate"]),
        "fnr_diff": minus(u["fnr"], p["fnr"]),
        "fpr_diff": minus(u["fpr"], p["fpr"]),
        "equal_opportunity_diff": minus(u["tpr"], p["tpr"]),
        "avg_odds_diff": ao,
        "accuracy_diff": minus(u["accuracy"], p["accuracy"]),
    }


def full_report(y_true, y_pred, groups, weights):
    n = len(y_true)
    overall = group_table(*tally(y_true, y_pred, weights, [True] * n))
    priv = group_table(*tally(y_true, y_pred, weights, [g == 1 for g in groups]))
    unpriv = group_table(*tally(y_true, y_pred, weights, [g == 0 for g in groups]))
    return overall, priv, unpriv, disparity_table(priv, unpriv)


# -- disparate impact remover ----------------------------------------------------------

def _quantile(vals, p):
    s = sorted(vals)
    m = len(s)
    pos = p * (m - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, m - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


def _rank(vals, x):
    """Mid-rank fraction of x among vals with linear interpolation between distinct values."""
    s = sorted(vals)
    m = len(s)
    if m == 1:
        return 0.5
    distinct = sorted(set(s))
    mids = []
    for v in distinct:
        idx = [i for i, t in enumerate(s) if t == v]
        mids.append((idx[0] + idx[-1]) / 2 / (m - 1))
    if x <= distinct[0]:
        return mids[0]
    if x >= distinct[-1]:
        return mids[-1]
    for a, b, ra, rb in zip(distinct, distinct[1:], mids, mids[1:]):
        if a <= x <= b:
            return ra + (x - a) / (b - a) * (rb - ra)
    raise AssertionError("unreachable")


def repair_oracle(priv_vals, unpriv_vals, x, group, lam):
    """Quantile merge: rank x within its own group, read the median of both groups' quantiles."""
    own = priv_vals if group == 1 else unpriv_vals
    p = _rank(own, x)
    qa, qb = _quantile(priv_vals, p), _quantile(unpriv_vals, p)
    return (1 - lam) * x + lam * (qa + qb) / 2


# -- logistic loss ----------------------------------------------------------------------

def objective_loop(w, b, X, y, s, penalty, alpha, l1_ratio=0.15):
    total = 0.0
    for xi, yi, si in zip(X, y, s):
        z = float(np.dot(xi, w) + b)
        total += si * (math.log1p(math.exp(-abs(z))) + max(z, 0.0) - yi * z)
    l2 = 0.5 * float(np.dot(w, w))
    l1 = float(np.abs(w).sum())
    reg = {"l2": l2, "l1": l1, "elasticnet": l1_ratio * l1 + (1 - l1_ratio) * l2}[penalty]
    return total / len(y) + alpha * reg


def central_difference(f, theta, h=1e-6):
    g = np.zeros_like(theta)
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (f(up) - f(dn)) / (2 * h)
    return g


# -- post-processing ----------------------------------------------------------------------

def roc_exhaustive(scores, labels, groups, thetas, objective_name):
    """Evaluate every theta; return the list of (|objective|, accuracy) per theta."""
    rows = []
    for theta in thetas:
        pred = []
        for s, g in zip(scores, groups):
            if abs(s - 0.5) < theta:
                pred.append(1 if g == 0 else 0)
            else:
                pred.append(1 if s >= 0.5 else 0)
        _, p, u, d = full_report(labels, pred, groups, [1.0] * len(labels))
        o = full_report(labels, pred, groups, [1.0] * len(labels))[0]
        value = d[objective_name]
        rows.append((None if value is None else abs(value), o["accuracy"]))
    return rows


def gfnr(scores, labels):
    pos = [1 - s for s, y in zip(scores, labels) if y == 1]
    return sum(pos) / len(pos) if pos else 0.0


def gfpr(scores, labels):
    neg = [s for s, y in zip(scores, labels) if y == 0]
    return sum(neg) / len(neg) if neg else 0.0


def ceo_grid(scores, labels, groups, cost_fn, step=0.001):
    """Exhaustive search over the mixing rate of the lower-cost group."""
    parts = {}
    for g in (0, 1):
        s = [x for x, gg in zip(scores, groups) if gg == g]
        y = [x for x, gg in zip(labels, groups) if gg == g]
        base = sum(y) / len(y)
        parts[g] = (s, y, base)
    cost = {g: cost_fn(parts[g][0], parts[g][1]) for g in (0, 1)}
    low = 0 if cost[0] < cost[1] else 1
    s, y, base = parts[low]
    own, triv = cost_fn(s, y), cost_fn([base] * len(s), y)
    best, best_gap = 0.0, float("inf")
    for p in np.arange(0, 1 + step / 2, step):
        gap = abs((1 - p) * own + p * triv - cost[1 - low])
        if gap < best_gap:
            best, best_gap = float(p), gap
    return low, best


# -- splitting ---------------------------------------------------------------------------

def sizes_oracle(n, fractions):
    """Every size vector within one row of its exact share that sums to n, closest first."""
    exact = [n * f for f in fractions]
    cands = []
    for combo in itertools.product(*[(math.floor(e), math.floor(e) + 1) for e in exact]):
        if sum(combo) == n:
            err = sum(abs(c - e) for c, e in zip(combo, exact))
            cands.append((round(err, 9), combo))
    return sorted(cands)
