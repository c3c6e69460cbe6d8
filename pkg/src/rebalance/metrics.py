"""Confusion-matrix metrics with majority as the positive class."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .data_io import MAJORITY

# Column order of every results table.
REPORT_COLUMNS = (
    "kappa",
    "accuracy",
    "ber",
    "mcc",
    "gmean",
    "precision",
    "recall",
    "f1",
    "tpr_x_tnr",
    "integrity",
)


class LengthMismatch(ValueError):
    pass


class EmptyMatrix(ValueError):
    pass


class EmptyClass(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with positive = majority, negative = minority.

    ``fp`` counts minority rows predicted as majority (the costly error),
    ``fn_`` majority rows predicted as minority.
    """

    tp: int
    fn_: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn_, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def P(self) -> int:
        return self.tp + self.fn_

    @property
    def N(self) -> int:
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.P + self.N

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(
            self.tp + other.tp, self.fn_ + other.fn_, self.fp + other.fp, self.tn + other.tn
        )

    def swapped(self) -> ConfusionMatrix:
        """Same predictions with the positive/negative roles exchanged."""
        return ConfusionMatrix(tp=self.tn, fn_=self.fp, fp=self.fn_, tn=self.tp)


@dataclass(frozen=True)
class MetricReport:
    kappa: float
    accuracy: float
    ber: float
    mcc: float
    gmean: float
    precision: float
    recall: float
    f1: float
    tpr: float
    tnr: float
    tpr_x_tnr: float
    integrity: float
    elapsed_seconds: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def row(self) -> list[float]:
        """Values in REPORT_COLUMNS order followed by elapsed seconds."""
        return [getattr(self, c) for c in REPORT_COLUMNS] + [self.elapsed_seconds]

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def confusion(predicted, actual) -> ConfusionMatrix:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise LengthMismatch(f"{predicted.shape} predictions vs {actual.shape} labels")
    pmaj = predicted == MAJORITY
    amaj = actual == MAJORITY
    return ConfusionMatrix(
        tp=int(np.count_nonzero(pmaj & amaj)),
        fn_=int(np.count_nonzero(~pmaj & amaj)),
        fp=int(np.count_nonzero(pmaj & ~amaj)),
        tn=int(np.count_nonzero(~pmaj & ~amaj)),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyMatrix("accuracy of an empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def tpr(cm: ConfusionMatrix) -> float:
    if cm.P == 0:
        raise EmptyClass("no majority rows: TPR undefined")
    return cm.tp / cm.P


def tnr(cm: ConfusionMatrix) -> float:
    if cm.N == 0:
        raise EmptyClass("no minority rows: TNR undefined")
    return cm.tn / cm.N


def fitness_product(cm: ConfusionMatrix) -> float:
    """TPR * TNR, the swarm's first objective."""
    return tpr(cm) * tnr(cm)


def integrity(selected_majority: int, original_majority: int) -> float:
    if not 0 < selected_majority <= original_majority:
        raise ValueError(f"need 0 < selected ({selected_majority}) <= original ({original_majority})")
    return selected_majority / original_majority


def kappa(cm: ConfusionMatrix) -> float:
    n = cm.total
    p_o = (cm.tp + cm.tn) / n
    p_e = ((cm.tp + cm.fp) * (cm.tp + cm.fn_) + (cm.tn + cm.fn_) * (cm.tn + cm.fp)) / (n * n)
    if 1.0 - p_e == 0.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def mcc(cm: ConfusionMatrix) -> float:
    den = (cm.tp + cm.fp) * (cm.tp + cm.fn_) * (cm.tn + cm.fp) * (cm.tn + cm.fn_)
    if den == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn_) / math.sqrt(den)


def full_report(
    cm: ConfusionMatrix, selected: int = 1, original: int = 1, elapsed: float = 0.0
) -> MetricReport:
    t_p = tpr(cm)
    t_n = tnr(cm)
    prec = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    f1 = 2 * prec * t_p / (prec + t_p) if prec + t_p else 0.0
    return MetricReport(
        kappa=kappa(cm),
        accuracy=accuracy(cm),
        ber=1.0 - (t_p + t_n) / 2.0,
        mcc=mcc(cm),
        gmean=math.sqrt(t_p * t_n),
        precision=prec,
        recall=t_p,
        f1=f1,
        tpr=t_p,
        tnr=t_n,
        tpr_x_tnr=t_p * t_n,
        integrity=integrity(selected, original),
        elapsed_seconds=float(elapsed),
    )


def fold_report(cm: ConfusionMatrix, selected: int = 1, original: int = 1) -> MetricReport:
    """Like ``full_report`` but tolerant of a test part missing one class.

    Rates that need the missing class (and the metrics built from them) come
    back as NaN so that ``average_reports`` can skip them.
    """
    if cm.total == 0:
        raise EmptyMatrix("empty confusion matrix")
    nan = float("nan")
    t_p = cm.tp / cm.P if cm.P else nan
    t_n = cm.tn / cm.N if cm.N else nan
    prec = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    if math.isnan(t_p):
        f1 = nan
    else:
        f1 = 2 * prec * t_p / (prec + t_p) if prec + t_p else 0.0
    return MetricReport(
        kappa=kappa(cm),
        accuracy=accuracy(cm),
        ber=1.0 - (t_p + t_n) / 2.0,
        mcc=mcc(cm),
        gmean=math.sqrt(t_p * t_n),
        precision=prec,
        recall=t_p,
        f1=f1,
        tpr=t_p,
        tnr=t_n,
        tpr_x_tnr=t_p * t_n,
        integrity=integrity(selected, original),
    )


def average_reports(reports, elapsed: float = 0.0, integrity_value: float | None = None) -> MetricReport:
    """Field-wise mean, each field over the reports where it is defined."""
    if not reports:
        raise EmptyMatrix("no reports to average")
    vals = {}
    for f in MetricReport.field_names():
        if f == "elapsed_seconds":
            continue
        col = np.array([getattr(r, f) for r in reports], dtype=np.float64)
        ok = ~np.isnan(col)
        vals[f] = float(col[ok].mean()) if ok.any() else float("nan")
    if integrity_value is not None:
        vals["integrity"] = float(integrity_value)
    return MetricReport(**vals, elapsed_seconds=float(elapsed))
