"""Independent reference implementations used by the tests.

These are written from the textbook definitions in a different algebraic
form than the package code, so agreement is meaningful.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numba import njit


def metric_oracle(tp: int, fn: int, fp: int, tn: int) -> dict[str, float]:
    """Scalar formulas; positive = majority, so fp counts missed minority rows."""
    n = tp + fn + fp + tn
    pos, neg = tp + fn, fp + tn
    pred_pos, pred_neg = tp + fp, fn + tn
    sens = tp / pos
    spec = tn / neg
    # Cohen's kappa in the 2x2 closed form
    den_k = pred_pos * neg + pos * pred_neg
    kappa = 0.0 if den_k == 0 else 2.0 * (tp * tn - fn * fp) / den_k
    prod = pred_pos * pos * neg * pred_neg
    mcc = 0.0 if prod == 0 else (tp * tn - fp * fn) / (math.sqrt(pred_pos) * math.sqrt(pos) * math.sqrt(neg) * math.sqrt(pred_neg))
    prec = tp / pred_pos if pred_pos else 0.0
    f1 = 2.0 * tp / (2.0 * tp + fp + fn) if tp else 0.0
    return {
        "kappa": kappa,
        "accuracy": (tp + tn) / n,
        "ber": 0.5 * (fn / pos + fp / neg),
        "mcc": mcc,
        "gmean": math.sqrt(sens) * math.sqrt(spec),
        "precision": prec,
        "recall": sens,
        "f1": f1,
        "tpr": sens,
        "tnr": spec,
        "tpr_x_tnr": sens * spec,
    }


def kappa_exact(tp: int, fn: int, fp: int, tn: int) -> Fraction:
    n = tp + fn + fp + tn
    po = Fraction(tp + tn, n)
    pe = Fraction((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn), n * n)
    return Fraction(0) if pe == 1 else (po - pe) / (1 - pe)


def best_split_1d(x, y, w=None, min_leaf=2):
    """Enumerate every midpoint threshold; return (threshold, weighted gini) of the best."""
    x = np.asarray(x, float)
    y = np.asarray(y)
    w = np.ones(x.size) if w is None else np.asarray(w, float)
    vals = np.unique(x)
    best = (None, math.inf)
    for a, b in zip(vals[:-1], vals[1:]):
        t = (a + b) / 2
        left = x <= t
        if left.sum() < min_leaf or (~left).sum() < min_leaf:
            continue
        total = 0.0
        for side in (left, ~left):
            ws = w[side].sum()
            p1 = w[side & (y == 1)].sum() / ws
            total += ws * (1 - p1 * p1 - (1 - p1) ** 2)
        if total < best[1] - 1e-15:
            best = (t, total)
    return best


def adaboost_round(w, miss, beta_miss=None, beta_hit=None):
    """One M1 update written out longhand; returns (alpha, new weights)."""
    w = [float(v) for v in w]
    eps = sum(wi for wi, m in zip(w, miss) if m)
    alpha = 0.5 * math.log((1 - eps) / eps)
    new = []
    for i, (wi, m) in enumerate(zip(w, miss)):
        if beta_miss is None:
            new.append(wi * math.exp(alpha if m else -alpha))
        else:
            new.append(wi * math.exp(alpha * beta_miss[i]) if m else wi * math.exp(-alpha * beta_hit[i]))
    z = sum(new)
    return alpha, [v / z for v in new]


@njit(cache=True)
def _undominated(f, g, slack):
    n = f.size
    keep = np.ones(n, np.bool_)
    for i in range(n):
        for j in range(n):
            if f[j] >= f[i] and g[j] >= g[i] and (f[j] - f[i] > slack or g[j] - g[i] > slack):
                keep[i] = False
                break
    return keep


def nondominated(points, slack=1e-4):
    """Brute-force all-pairs filter: the distinct points that nothing dominates."""
    pts = np.ascontiguousarray(np.asarray(points, float).reshape(-1, 2))
    keep = _undominated(pts[:, 0].copy(), pts[:, 1].copy(), slack)
    return {(float(a), float(b)) for a, b in pts[keep]}
