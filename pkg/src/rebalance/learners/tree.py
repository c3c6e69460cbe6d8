"""Weighted CART (Gini) for two classes, compiled with numba.

Numeric features split at midpoints between adjacent distinct values
(``x <= t`` goes left); nominal features split one category against the
rest (``x == c`` goes left).  Every leaf stores the weighted minority
fraction; a leaf predicts minority when that fraction is >= 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..data_io import MAJORITY, MINORITY


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_leaf: int = 2
    split_criterion: str = "gini"

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.split_criterion != "gini":
            raise ValueError("only the gini criterion is supported")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")


@njit(cache=True)
def presort(X):
    """Per-feature ascending row order, shape (n_features, n_rows)."""
    n, d = X.shape
    order = np.empty((d, n), np.int64)
    for f in range(d):
        order[f] = np.argsort(X[:, f], kind="mergesort")
    return order


@njit(cache=True)
def _fit(X, y, w, m, full_order, ncat, min_leaf, max_depth):
    # m[r] is the row multiplicity (0 drops the row); w[r] its total weight
    d = X.shape[1]
    n = 0
    for r in range(X.shape[0]):
        if m[r] > 0:
            n += 1
    order = np.empty((d, n), np.int64)
    for f in range(d):
        k = 0
        for i in range(full_order.shape[1]):
            r = full_order[f, i]
            if m[r] > 0:
                order[f, k] = r
                k += 1

    XT = np.ascontiguousarray(X.T)

    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    goes_left = np.zeros(X.shape[0], np.bool_)
    buf = np.empty(n, np.int64)

    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        cnt = 0
        w0 = 0.0
        w1 = 0.0
        c1 = 0
        for i in range(start, end):
            r = order[0, i]
            cnt += m[r]
            if y[r] == 1:
                w1 += w[r]
                c1 += m[r]
            else:
                w0 += w[r]
        tot = w0 + w1
        if tot > 0.0:
            value[node] = w1 / tot
        else:
            value[node] = c1 / cnt

        if c1 == 0 or c1 == cnt or cnt < 2 * min_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        best_score = -1.0
        best_f = -1
        best_t = 0.0
        for f in range(d):
            if ncat[f] == 0:
                a0 = 0.0
                a1 = 0.0
                nl = 0
                for i in range(start, end - 1):
                    r = order[f, i]
                    if y[r] == 1:
                        a1 += w[r]
                    else:
                        a0 += w[r]
                    nl += m[r]
                    if nl < min_leaf:
                        continue
                    if cnt - nl < min_leaf:
                        break
                    xv = XT[f, r]
                    xn = XT[f, order[f, i + 1]]
                    if not xv < xn:
                        continue
                    b0 = max(w0 - a0, 0.0)
                    b1 = max(w1 - a1, 0.0)
                    al = a0 + a1
                    br = b0 + b1
                    if al <= 0.0 or br <= 0.0:
                        continue
                    score = (a0 * a0 + a1 * a1) / al + (b0 * b0 + b1 * b1) / br
                    if score > best_score:
                        best_score = score
                        best_f = f
                        t = 0.5 * (xv + xn)
                        if t >= xn:
                            t = xv
                        best_t = t
            else:
                i = start
                while i < end:
                    cat = XT[f, order[f, i]]
                    g0 = 0.0
                    g1 = 0.0
                    gc = 0
                    j = i
                    while j < end and XT[f, order[f, j]] == cat:
                        r = order[f, j]
                        if y[r] == 1:
                            g1 += w[r]
                        else:
                            g0 += w[r]
                        gc += m[r]
                        j += 1
                    if gc >= min_leaf and cnt - gc >= min_leaf:
                        b0 = max(w0 - g0, 0.0)
                        b1 = max(w1 - g1, 0.0)
                        gl = g0 + g1
                        br = b0 + b1
                        if gl > 0.0 and br > 0.0:
                            score = (g0 * g0 + g1 * g1) / gl + (b0 * b0 + b1 * b1) / br
                            if score > best_score:
                                best_score = score
                                best_f = f
                                best_t = cat
                    i = j

        if best_f < 0:
            continue

        nominal = ncat[best_f] > 0
        nl = 0  # distinct rows going left
        for i in range(start, end):
            r = order[0, i]
            xv = XT[best_f, r]
            gl_ = (xv == best_t) if nominal else (xv <= best_t)
            goes_left[r] = gl_
            if gl_:
                nl += 1
        for f in range(d):
            a = 0
            b = nl
            for i in range(start, end):
                r = order[f, i]
                if goes_left[r]:
                    buf[a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for i in range(end - start):
                order[f, start + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_t
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        # right pushed first so the left subtree is grown first
        st_node[sp] = rc
        st_start[sp] = start + nl
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lc
        st_start[sp] = start
        st_end[sp] = start + nl
        st_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@njit(cache=True)
def _minority_score(X, ncat, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            f = feature[node]
            x = X[i, f]
            if ncat[f] > 0:
                go = x == threshold[node]
            else:
                go = x <= threshold[node]
            node = left[node] if go else right[node]
        out[i] = value[node]
    return out


class DecisionTree:
    """A fitted tree; node arrays are indexed by node id, root = 0."""

    kind = "tree"

    def __init__(self, feature, threshold, left, right, value, ncat):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.ncat = np.asarray(ncat, dtype=np.int64)

    @property
    def n_features(self) -> int:
        return int(self.ncat.size)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    def check_rows(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatch(f"model expects {self.n_features} columns, got shape {X.shape}")
        return X

    def minority_score(self, X) -> np.ndarray:
        X = self.check_rows(X)
        return _minority_score(
            X, self.ncat, self.feature, self.threshold, self.left, self.right, self.value
        )

    def predict_score(self, X) -> np.ndarray:
        """Per-row [P(majority), P(minority)]."""
        s = self.minority_score(X)
        return np.column_stack([1.0 - s, s])

    def predict(self, X) -> np.ndarray:
        return np.where(self.minority_score(X) >= 0.5, MINORITY, MAJORITY).astype(np.int8)


def fit_tree(
    X, y, ncat, params: TreeParams = TreeParams(), weights=None, multiplicity=None, order=None
) -> DecisionTree:
    """Array-level entry point used by the ensembles and the swarm loop.

    ``multiplicity`` gives per-row repeat counts (0 excludes a row), which is
    how row subsets and bootstrap samples are expressed without copying X.
    ``order`` may carry a cached ``presort(X)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    ncat = np.ascontiguousarray(ncat, dtype=np.int64)
    n = X.shape[0]
    m = np.ones(n, np.int64) if multiplicity is None else np.ascontiguousarray(multiplicity, np.int64)
    if m.shape != (n,) or np.any(m < 0):
        raise ValueError("multiplicity must be a non-negative count per row")
    if not m.any():
        raise ValueError("cannot fit a tree on zero rows")
    if weights is None:
        w = m.astype(np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (n,) or np.any(w < 0) or not (w * m).sum() > 0:
            raise ValueError("weights must be non-negative with a positive sum")
        w = np.ascontiguousarray(w * m)
    if order is None:
        order = presort(X)
    max_depth = -1 if params.max_depth is None else params.max_depth
    arrays = _fit(X, y, w, m, order, ncat, params.min_leaf, max_depth)
    return DecisionTree(*arrays, ncat)


def train_tree(ds, params: TreeParams = TreeParams(), weights=None, seed=None) -> DecisionTree:
    """Fit a tree on a BinaryDataset.  CART here is deterministic; ``seed`` is accepted for API symmetry."""
    return fit_tree(ds.rows, ds.labels, ds.ncat, params, weights)
