"""Bagging, AdaBoost.M1, minimum-expected-cost trees and AdaCost."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._rng import as_rng
from ..data_io import MAJORITY, MINORITY
from .tree import DecisionTree, SchemaMismatch, TreeParams, fit_tree, presort

EPS_CLAMP = 1e-10
JITTER = 1e-6


@dataclass(frozen=True)
class CostMatrix:
    """cost_fp: a minority row predicted majority; cost_fn: a majority row predicted minority."""

    cost_fp: float = 50.0
    cost_fn: float = 5.0

    def __post_init__(self):
        if self.cost_fp < 0 or self.cost_fn < 0:
            raise ValueError("costs must be non-negative")
        if self.cost_fp == 0 and self.cost_fn == 0:
            raise ValueError("at least one cost must be positive")

    def row_costs(self, y) -> np.ndarray:
        """Per-row cost normalised by the larger cost (AdaCost's c_i)."""
        top = max(self.cost_fp, self.cost_fn)
        return np.where(np.asarray(y) == MINORITY, self.cost_fp / top, self.cost_fn / top)


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int = 50
    n_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_members < 1 or self.n_iterations < 1:
            raise ValueError("n_members and n_iterations must be >= 1")


class Model:
    n_features: int

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatch(f"model expects {self.n_features} columns, got shape {X.shape}")
        return X

    def minority_score(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_score(self, X) -> np.ndarray:
        s = self.minority_score(X)
        return np.column_stack([1.0 - s, s])

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError


class BaggedTrees(Model):
    kind = "bagging"

    def __init__(self, trees: list[DecisionTree]):
        self.trees = trees
        self.n_features = trees[0].n_features

    def minority_votes(self, X) -> np.ndarray:
        X = self._check(X)
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for t in self.trees:
            votes += t.minority_score(X) >= 0.5
        return votes

    def minority_score(self, X) -> np.ndarray:
        return self.minority_votes(X) / len(self.trees)

    def predict(self, X) -> np.ndarray:
        # ties go to the majority class
        votes = self.minority_votes(X)
        return np.where(2 * votes > len(self.trees), MINORITY, MAJORITY).astype(np.int8)


class BoostedTrees(Model):
    """Weighted vote of trees; ``margin`` is positive for a minority call."""

    kind = "boosted"

    def __init__(self, trees: list[DecisionTree], alphas: list[float], weight_history=None):
        self.trees = trees
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.n_features = trees[0].n_features
        self.weight_history = weight_history

    def margin(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.zeros(X.shape[0])
        for a, t in zip(self.alphas, self.trees):
            out += np.where(t.minority_score(X) >= 0.5, a, -a)
        return out

    def minority_score(self, X) -> np.ndarray:
        total = self.alphas.sum()
        return 0.5 + 0.5 * self.margin(X) / total if total > 0 else np.full(len(X), 0.5)

    def predict(self, X) -> np.ndarray:
        return np.where(self.margin(X) > 0, MINORITY, MAJORITY).astype(np.int8)


class CascadeEnsemble(Model):
    """Sum of boosted members, each shifted by its own threshold.

    Predicts minority where ``sum_i (margin_i(x) - theta_i) > 0``.  With all
    thresholds at zero this is the EasyEnsemble combination.
    """

    kind = "cascade"

    def __init__(self, members: list[BoostedTrees], thresholds):
        self.members = members
        self.thresholds = np.asarray(thresholds, dtype=np.float64)
        self.n_features = members[0].n_features

    def margin(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.zeros(X.shape[0])
        for m, theta in zip(self.members, self.thresholds):
            out += m.margin(X) - theta
        return out

    def minority_score(self, X) -> np.ndarray:
        scale = sum(float(m.alphas.sum()) for m in self.members) + float(np.abs(self.thresholds).sum())
        return np.clip(0.5 + 0.5 * self.margin(X) / scale, 0.0, 1.0)

    def predict(self, X) -> np.ndarray:
        return np.where(self.margin(X) > 0, MINORITY, MAJORITY).astype(np.int8)


class CostSensitiveTree(Model):
    kind = "cost"

    def __init__(self, tree: DecisionTree, costs: CostMatrix):
        self.tree = tree
        self.costs = costs
        self.n_features = tree.n_features

    def minority_score(self, X) -> np.ndarray:
        return self.tree.minority_score(self._check(X))

    def predict(self, X) -> np.ndarray:
        p_min = self.minority_score(X)
        pick = p_min * self.costs.cost_fp >= (1.0 - p_min) * self.costs.cost_fn
        return np.where(pick, MINORITY, MAJORITY).astype(np.int8)


def _prepare(X, y, ncat):
    return (
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int8),
        np.ascontiguousarray(ncat, dtype=np.int64),
    )


def fit_bagging(X, y, ncat, n_members=50, params=TreeParams(), seed=0, multiplicity=None, order=None):
    X, y, ncat = _prepare(X, y, ncat)
    rng = as_rng(seed)
    if order is None:
        order = presort(X)
    base = np.arange(X.shape[0]) if multiplicity is None else np.repeat(
        np.arange(X.shape[0]), np.asarray(multiplicity, dtype=np.int64)
    )
    trees = []
    for _ in range(n_members):
        draw = base[rng.integers(0, base.size, base.size)]
        counts = np.bincount(draw, minlength=X.shape[0])
        trees.append(fit_tree(X, y, ncat, params, multiplicity=counts, order=order))
    return BaggedTrees(trees)


def boost(
    X,
    y,
    ncat,
    config: EnsembleConfig,
    params=TreeParams(),
    seed=None,
    multiplicity=None,
    order=None,
    row_costs=None,
    round_sampler=None,
    keep_weights=False,
):
    """AdaBoost.M1 with unpruned-tree weak learners.

    At most ``config.n_iterations`` rounds produce at most ``config.n_members``
    members.  A round with weighted error >= 0.5 is discarded, the weights get a
    1e-6 multiplicative jitter and the round is retried once; a second failure
    stops boosting.  Zero error is clamped so alpha stays finite, and ends
    boosting after that member.

    ``row_costs`` switches the update to AdaCost's cost-adjusted form.
    ``round_sampler(rng, weights)`` may return a per-round training
    multiplicity (RUSBoost); error and weight updates still use every row.
    """
    X, y, ncat = _prepare(X, y, ncat)
    rng = as_rng(config.seed if seed is None else seed)
    if order is None:
        order = presort(X)
    n = X.shape[0]
    live = np.ones(n, dtype=np.int64) if multiplicity is None else np.asarray(multiplicity, np.int64)
    w = live / live.sum()
    history = [w.copy()] if keep_weights else None
    trees, alphas = [], []
    retried = False
    rounds = 0
    while rounds < config.n_iterations and len(trees) < config.n_members:
        rounds += 1
        train_m = live
        if round_sampler is not None:
            train_m = round_sampler(rng, w)
            if train_m is None:
                continue
        tree = fit_tree(X, y, ncat, params, weights=w, multiplicity=train_m, order=order)
        miss = (tree.predict(X) != y) & (live > 0)
        eps = float(w[miss].sum())
        if eps >= 0.5:
            if retried:
                break
            retried = True
            w = w * (1.0 + JITTER * rng.uniform(-1.0, 1.0, n))
            w /= w.sum()
            continue
        retried = False
        e = min(max(eps, EPS_CLAMP), 1.0 - EPS_CLAMP)
        alpha = 0.5 * math.log((1.0 - e) / e)
        trees.append(tree)
        alphas.append(alpha)
        if eps == 0.0:
            break
        if row_costs is None:
            expo = np.where(miss, alpha, -alpha)
        else:
            beta_miss = 0.5 * row_costs + 0.5
            beta_hit = -0.5 * row_costs + 0.5
            expo = np.where(miss, alpha * beta_miss, -alpha * beta_hit)
        w = w * np.exp(expo) * (live > 0)
        w /= w.sum()
        if keep_weights:
            history.append(w.copy())
    if not trees:
        # every round failed: fall back to a single unweighted tree
        trees.append(fit_tree(X, y, ncat, params, multiplicity=live, order=order))
        alphas.append(1.0)
    return BoostedTrees(trees, alphas, history)


def fit_adaboost(X, y, ncat, config=EnsembleConfig(), params=TreeParams(), seed=None, **kw):
    return boost(X, y, ncat, config, params, seed=seed, **kw)


def fit_adacost(X, y, ncat, costs=CostMatrix(), config=EnsembleConfig(), params=TreeParams(), seed=None, **kw):
    return boost(X, y, ncat, config, params, seed=seed, row_costs=costs.row_costs(y), **kw)


def fit_cost_sensitive(X, y, ncat, costs=CostMatrix(), params=TreeParams(), multiplicity=None, order=None):
    tree = fit_tree(X, y, ncat, params, multiplicity=multiplicity, order=order)
    return CostSensitiveTree(tree, costs)


# BinaryDataset-level entry points

def train_bagging(ds, n_members=50, params=TreeParams(), seed=0):
    return fit_bagging(ds.rows, ds.labels, ds.ncat, n_members, params, seed)


def train_adaboost(ds, config=EnsembleConfig(), params=TreeParams(), seed=None, keep_weights=False):
    return fit_adaboost(ds.rows, ds.labels, ds.ncat, config, params, seed, keep_weights=keep_weights)


def train_cost_sensitive(ds, costs=CostMatrix(), params=TreeParams(), seed=None):
    return fit_cost_sensitive(ds.rows, ds.labels, ds.ncat, costs, params)


def train_adacost(ds, costs=CostMatrix(), config=EnsembleConfig(), params=TreeParams(), seed=None, keep_weights=False):
    return fit_adacost(ds.rows, ds.labels, ds.ncat, costs, config, params, seed, keep_weights=keep_weights)
