"""Method registry, cross-validated evaluation and experiment tables."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import baselines
from .bpso import SwarmConfig, SwarmResult, run_bpsois, run_psois
from .data_io import BinaryDataset, stratified_folds
from .evaluation import FoldResult, cross_validate, fold_averaged
from .learners import CostMatrix, LearnerSpec
from .metrics import REPORT_COLUMNS, MetricReport

WRAPPED = {"dt": "dt", "adab": "adab", "adac": "adac", "bagging": "bagging"}
PLAIN_METHODS = (
    "dt", "resample", "bagging", "cost", "adaboost", "adacost",
    "easyensemble", "balancecascade", "rusboost",
)
SWARM_METHODS = tuple(f"{kind}_{l}" for kind in ("psois", "bpsois") for l in WRAPPED)
METHODS = PLAIN_METHODS + SWARM_METHODS

EXPERIMENTS = {
    1: ("dt", "resample", "bagging", "cost", "adaboost", "adacost", "bpsois_dt"),
    2: (
        "dt", "easyensemble", "balancecascade", "rusboost",
        "psois_dt", "psois_adab", "psois_adac", "psois_bagging",
        "bpsois_dt", "bpsois_adab", "bpsois_adac", "bpsois_bagging",
    ),
}

DESK_DATASETS = ("haberman", "pima", "poker-9_vs_7")
DESK_SWARM = {"population": 20, "max_iter": 30}
DESK_SEARCH_MEMBERS = 10

RESULT_HEADER = ["dataset", "method", "seed", *REPORT_COLUMNS, "time", "error"]
SUMMARY_HEADER = ["method", "n_datasets", *REPORT_COLUMNS, "time"]
ARCHIVE_HEADER = ["seed", "fold", "fitness", "integrity", "kappa", "accuracy", "popcount"]
TRACE_HEADER = ["seed", "fold", "iteration", "particle", "fitness", "integrity"]


class UnknownMethod(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything one (dataset, method) cell needs besides the data."""

    method: str = "dt"
    folds: int = 10
    seed: int = 0
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    n_members: int = 50
    n_iterations: int = 100
    search_members: int | None = None  # ensemble size inside the search; None = n_members
    costs: CostMatrix = field(default_factory=CostMatrix)
    subsets: int = 100  # EasyEnsemble / BalanceCascade rounds
    rus_rate: float = 0.75

    def __post_init__(self):
        if self.method not in METHODS:
            raise UnknownMethod(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    def learner(self, name: str, search: bool = False) -> LearnerSpec:
        members = self.n_members
        if search and self.search_members is not None:
            members = self.search_members
        return LearnerSpec(name, n_members=members, n_iterations=self.n_iterations, costs=self.costs)


def search(ds: BinaryDataset, config: RunConfig, seed: int) -> SwarmResult:
    """Run the swarm a swarm method names on ``ds`` (its whole training set)."""
    kind, lname = config.method.split("_", 1)
    swarm = replace(config.swarm, seed=seed)
    learner = config.learner(WRAPPED[lname], search=True)
    if kind == "bpsois":
        return run_bpsois(ds, learner, swarm)
    return run_psois(ds, learner, replace(swarm, mode="pso_continuous"))


def trainer(config: RunConfig) -> Callable[[BinaryDataset, int], tuple]:
    """train_fn(train_ds, seed) -> (model, integrity, extra) for ``config.method``."""
    m = config.method
    if m in SWARM_METHODS:
        lname = WRAPPED[m.split("_", 1)[1]]

        def train(ds, seed):
            res = search(ds, config, seed)
            model = config.learner(lname).train(res.rebalanced, seed)
            return model, res.final.objectives.integrity, res

        return train
    if m == "resample":
        return lambda ds, seed: (LearnerSpec("dt").train(baselines.resample_uniform(ds, seed), seed), 1.0, None)
    if m == "easyensemble":
        return lambda ds, seed: (baselines.easy_ensemble(ds, config.subsets, seed=seed), 1.0, None)
    if m == "balancecascade":
        return lambda ds, seed: (baselines.balance_cascade(ds, config.subsets, seed=seed), 1.0, None)
    if m == "rusboost":
        return lambda ds, seed: (
            baselines.rusboost(ds, config.n_iterations, config.rus_rate, seed=seed),
            config.rus_rate,
            None,
        )
    name = {"adaboost": "adab", "adacost": "adac"}.get(m, m)
    return lambda ds, seed: (config.learner(name).train(ds, seed), 1.0, None)


@dataclass
class CellResult:
    dataset: str
    method: str
    seed: int
    report: MetricReport | None
    folds: list[FoldResult] = field(default_factory=list)
    error: str = ""


def evaluate(ds: BinaryDataset, config: RunConfig) -> CellResult:
    """Stratified k-fold CV of one method; Time covers training and search only."""
    plan = stratified_folds(ds, config.folds, config.seed)
    train = trainer(config)
    spent = [0.0]

    def timed(sub, seed):
        t0 = time.perf_counter()
        out = train(sub, seed)
        spent[0] += time.perf_counter() - t0
        return out

    folds = cross_validate(ds, plan, timed, config.seed)
    return CellResult(ds.name, config.method, config.seed, fold_averaged(folds, spent[0]), folds)


def evaluate_safely(ds: BinaryDataset, config: RunConfig) -> CellResult:
    try:
        return evaluate(ds, config)
    except Exception as exc:  # a failing cell must not stop the table
        return CellResult(ds.name, config.method, config.seed, None, error=f"{type(exc).__name__}: {exc}")


# CSV output -----------------------------------------------------------------

def _num(x: float) -> str:
    return "" if x is None or np.isnan(x) else repr(float(x))


def result_row(cell: CellResult) -> list[str]:
    if cell.report is None:
        return [cell.dataset, cell.method, str(cell.seed)] + [""] * (len(REPORT_COLUMNS) + 1) + [cell.error]
    r = cell.report
    return [cell.dataset, cell.method, str(cell.seed)] + [_num(getattr(r, c)) for c in REPORT_COLUMNS] + [
        _num(r.elapsed_seconds),
        "",
    ]


def write_csv(path: Path | None, header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def summarize(cells: list[CellResult]) -> tuple[list[list[str]], list[list[str]]]:
    """Per-method mean and sample std (ddof=1) across datasets.

    Seeds are averaged within a dataset first; failed cells are left out.
    """
    cols = list(REPORT_COLUMNS) + ["time"]
    methods = list(dict.fromkeys(c.method for c in cells))
    mean_rows, std_rows = [], []
    for m in methods:
        per_ds: dict[str, list[list[float]]] = {}
        for c in cells:
            if c.method == m and c.report is not None:
                vals = [getattr(c.report, k) for k in REPORT_COLUMNS] + [c.report.elapsed_seconds]
                per_ds.setdefault(c.dataset, []).append(vals)
        if not per_ds:
            mean_rows.append([m, "0"] + [""] * len(cols))
            std_rows.append([m, "0"] + [""] * len(cols))
            continue
        table = np.array([np.nanmean(np.array(v, dtype=float), axis=0) for v in per_ds.values()])
        n = table.shape[0]
        means = np.nanmean(table, axis=0)
        stds = np.nanstd(table, axis=0, ddof=1) if n > 1 else np.zeros(len(cols))
        mean_rows.append([m, str(n)] + [_num(v) for v in means])
        std_rows.append([m, str(n)] + [_num(v) for v in stds])
    return mean_rows, std_rows


def archive_rows(cell: CellResult) -> list[list[str]]:
    rows = []
    for fr in cell.folds:
        res = fr.extra
        if res is None:
            continue
        entries = list(res.archive) if res.archive is not None else [res.final]
        for s in entries:
            rows.append(
                [
                    str(cell.seed),
                    str(fr.fold),
                    _num(s.objectives.fitness),
                    _num(s.objectives.integrity),
                    _num(s.report.kappa),
                    _num(s.report.accuracy),
                    str(s.popcount),
                ]
            )
    return rows


def trace_rows(cell: CellResult) -> list[list[str]]:
    rows = []
    for fr in cell.folds:
        if fr.extra is None:
            continue
        for e in fr.extra.evaluations:
            rows.append([str(cell.seed), str(fr.fold), str(e.iteration), str(e.particle), _num(e.fitness), _num(e.integrity)])
    return rows


def run_experiment(
    which: int,
    datasets: list[BinaryDataset],
    base: RunConfig,
    out_dir: Path,
    seeds: tuple[int, ...] = (0,),
    methods: tuple[str, ...] | None = None,
    progress: Callable[[CellResult], None] | None = None,
) -> list[CellResult]:
    """Every (dataset, method, seed) cell of an experiment, written as CSVs."""
    if which not in EXPERIMENTS:
        raise ValueError(f"experiment must be one of {sorted(EXPERIMENTS)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    methods = methods or EXPERIMENTS[which]
    cells = []
    for ds in datasets:
        for m in methods:
            swarm_cells = []
            for s in seeds:
                cell = evaluate_safely(ds, replace(base, method=m, seed=s))
                cells.append(cell)
                swarm_cells.append(cell)
                if progress:
                    progress(cell)
            if m in SWARM_METHODS:
                arch = [r for c in swarm_cells for r in archive_rows(c)]
                write_csv(out_dir / f"archive_{ds.name}_{m}.csv", ARCHIVE_HEADER, arch)
                trace = [r for c in swarm_cells for r in trace_rows(c)]
                write_csv(out_dir / f"trace_{ds.name}_{m}.csv", TRACE_HEADER, trace)
    write_csv(out_dir / f"results_exp{which}.csv", RESULT_HEADER, [result_row(c) for c in cells])
    mean_rows, std_rows = summarize(cells)
    write_csv(out_dir / "summary_mean.csv", SUMMARY_HEADER, mean_rows)
    write_csv(out_dir / "summary_std.csv", SUMMARY_HEADER, std_rows)
    return cells


def format_report(report: MetricReport) -> str:
    """Two-decimal rendering in table column order."""
    names = list(REPORT_COLUMNS) + ["time"]
    vals = report.row()
    return "  ".join(f"{n}={'nan' if np.isnan(v) else f'{v:.2f}'}" for n, v in zip(names, vals))
