"""Outer cross-validation shared by the baselines, the swarm and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._rng import derive_seed
from .data_io import BinaryDataset, FoldPlan
from .metrics import ConfusionMatrix, MetricReport, average_reports, confusion, fold_report


@dataclass(frozen=True)
class FoldResult:
    fold: int
    confusion: ConfusionMatrix
    integrity: float
    extra: object = None


# train_fn(train_ds, seed) -> (model, integrity, extra)
TrainFn = Callable[[BinaryDataset, int], tuple]


def cross_validate(
    ds: BinaryDataset, plan: FoldPlan, train_fn: TrainFn, seed: int = 0, keep=None
) -> list[FoldResult]:
    """Train on each fold's training rows and predict its untouched test rows.

    ``keep`` (bool per row) drops rows from the training side only.
    """
    out = []
    for fold in range(plan.k):
        train, test = plan.split(fold)
        if keep is not None:
            train = train[np.asarray(keep, dtype=bool)[train]]
        model, integ, extra = train_fn(ds.take(train), derive_seed(seed, fold))
        cm = confusion(model.predict(ds.rows[test]), ds.labels[test])
        out.append(FoldResult(fold, cm, float(integ), extra))
    return out


def pooled(results: list[FoldResult]) -> ConfusionMatrix:
    total = ConfusionMatrix(0, 0, 0, 0)
    for r in results:
        total = total + r.confusion
    return total


def fold_averaged(results: list[FoldResult], elapsed: float = 0.0) -> MetricReport:
    """Mean of the per-fold reports; integrity is the mean kept fraction."""
    reports = [fold_report(r.confusion) for r in results]
    return average_reports(reports, elapsed, float(np.mean([r.integrity for r in results])))
