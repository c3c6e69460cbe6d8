"""Base tree, ensembles and a small registry keyed by learner name."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensembles import (
    BaggedTrees,
    BoostedTrees,
    CostMatrix,
    CostSensitiveTree,
    EnsembleConfig,
    fit_adaboost,
    fit_adacost,
    fit_bagging,
    fit_cost_sensitive,
    train_adaboost,
    train_adacost,
    train_bagging,
    train_cost_sensitive,
)
from .tree import DecisionTree, SchemaMismatch, TreeParams, fit_tree, presort, train_tree

LEARNERS = ("dt", "bagging", "adab", "adac", "cost")


@dataclass(frozen=True)
class LearnerSpec:
    """What to train on a (possibly masked) training set.

    ``n_members``/``n_iterations`` apply to the ensembles; AdaBoost and AdaCost
    keep at most ``n_members`` trees out of ``n_iterations`` rounds.
    """

    name: str = "dt"
    tree: TreeParams = field(default_factory=TreeParams)
    n_members: int = 50
    n_iterations: int = 100
    costs: CostMatrix = field(default_factory=CostMatrix)

    def __post_init__(self):
        if self.name not in LEARNERS:
            raise ValueError(f"unknown learner {self.name!r}; expected one of {', '.join(LEARNERS)}")
        if self.n_members < 1 or self.n_iterations < 1:
            raise ValueError("n_members and n_iterations must be >= 1")

    def fit(self, X, y, ncat, seed=0, multiplicity=None, order=None):
        """Train on rows with positive ``multiplicity`` (all rows when None)."""
        if self.name == "dt":
            return fit_tree(X, y, ncat, self.tree, multiplicity=multiplicity, order=order)
        if self.name == "cost":
            return fit_cost_sensitive(X, y, ncat, self.costs, self.tree, multiplicity, order)
        if self.name == "bagging":
            return fit_bagging(X, y, ncat, self.n_members, self.tree, seed, multiplicity, order)
        config = EnsembleConfig(self.n_members, self.n_iterations, 0)
        if self.name == "adab":
            return fit_adaboost(X, y, ncat, config, self.tree, seed, multiplicity=multiplicity, order=order)
        return fit_adacost(
            X, y, ncat, self.costs, config, self.tree, seed, multiplicity=multiplicity, order=order
        )

    def train(self, ds, seed=0):
        return self.fit(ds.rows, ds.labels, ds.ncat, seed)


def predict(model, ds) -> np.ndarray:
    """Labels for every row of ``ds``; an empty dataset yields an empty array."""
    rows = ds.rows if hasattr(ds, "rows") else np.asarray(ds, dtype=np.float64)
    if rows.ndim == 2 and rows.shape[0] == 0:
        if rows.shape[1] != model.n_features:
            raise SchemaMismatch(f"model expects {model.n_features} columns, got {rows.shape[1]}")
        return np.empty(0, dtype=np.int8)
    return model.predict(rows)


__all__ = [
    "BaggedTrees",
    "BoostedTrees",
    "CostMatrix",
    "CostSensitiveTree",
    "DecisionTree",
    "EnsembleConfig",
    "LEARNERS",
    "LearnerSpec",
    "SchemaMismatch",
    "TreeParams",
    "fit_tree",
    "predict",
    "presort",
    "train_adaboost",
    "train_adacost",
    "train_bagging",
    "train_cost_sensitive",
    "train_tree",
]
