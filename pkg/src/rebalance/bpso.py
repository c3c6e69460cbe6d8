"""Binary PSO instance selection over the majority rows of a training set.

Each particle's position is a real vector with one component per majority
row.  A mask keeps row d when its component rounds to 1 (``x >= 0.5``), or,
in the sigmoid mode, with probability sigmoid(v_d).  Each mask is scored by
cross-validating the wrapped learner on the candidate dataset (all minority
rows plus the kept majority rows).  One stratified fold plan over the search
rows is fixed per run and restricted to the kept rows, so every mask is
scored on the same partition.  Fitness is the inner-fold mean of TPR x TNR,
and the report used for the final decision is the inner-fold mean as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import derive_seed
from .archive import ObjectivePair, ParetoArchive, Solution, select_final
from .data_io import BinaryDataset, ClassPartition, assemble_subset, partition_classes, stratified_folds
from .learners import LearnerSpec
from .learners.tree import presort
from .metrics import MetricReport, average_reports, confusion, fold_report

MODES = ("bpso_round", "bpso_sigmoid", "pso_continuous")


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class SwarmConfig:
    population: int = 50
    max_iter: int = 100
    inertia: float = 0.8
    c1: float = 2.0
    c2: float = 2.0
    v_max: float = 1.0
    pos_lo: float = -0.49
    pos_hi: float = 1.49
    seed: int = 0
    mode: str = "bpso_round"
    inner_folds: int = 5
    integrity_weight: float = 0.01
    archive_cap: int | None = 200

    def __post_init__(self):
        if not self.pos_lo < self.pos_hi:
            raise ValueError("pos_lo must be below pos_hi")
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.inertia < 0:
            raise ValueError("inertia must be non-negative")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")


@dataclass
class ParticleState:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_objectives: ObjectivePair | None = None
    pbest_score: float = float("-inf")


def pso_step(state: ParticleState, gbest_position, config: SwarmConfig, rng, r1=None, r2=None) -> ParticleState:
    """One velocity/position update with clamping; returns a new state."""
    x = state.position
    if r1 is None:
        r1 = rng.random(x.size)
    if r2 is None:
        r2 = rng.random(x.size)
    v = (
        config.inertia * state.velocity
        + config.c1 * r1 * (state.pbest_position - x)
        + config.c2 * r2 * (np.asarray(gbest_position) - x)
    )
    v = np.clip(v, -config.v_max, config.v_max)
    x = np.clip(x + v, config.pos_lo, config.pos_hi)
    return replace(state, position=x, velocity=v)


def binarize_round(position, pos_lo: float = -0.49, pos_hi: float = 1.49) -> np.ndarray:
    """bit = [x >= 0.5]; an all-zero result keeps the largest component instead."""
    x = np.asarray(position, dtype=np.float64)
    if x.size and (x.min() < pos_lo or x.max() > pos_hi or np.isnan(x).any()):
        raise OutOfRange(f"position outside [{pos_lo}, {pos_hi}]")
    return _repair(x >= 0.5, x)


def _repair(bits: np.ndarray, x: np.ndarray) -> np.ndarray:
    if bits.size and not bits.any():
        bits = bits.copy()
        bits[int(np.argmax(x))] = True
    return bits


def binarize_sigmoid(velocity, rng) -> np.ndarray:
    """bit_d = 1 with probability 1 / (1 + exp(-v_d))."""
    v = np.asarray(velocity, dtype=np.float64)
    return rng.random(v.size) <= 1.0 / (1.0 + np.exp(-v))


@dataclass(frozen=True)
class EvalPlan:
    """Inner folds over the rows of the search dataset."""

    k: int = 5
    seed: int = 0


class MaskEvaluator:
    """Scores masks on one training set; presort and fold masks are built once.

    Results are memoised by mask, so a mask revisited during a run is scored
    once (with the seed of its first visit).
    """

    def __init__(self, ds: BinaryDataset, part: ClassPartition, learner: LearnerSpec, plan: EvalPlan):
        self.ds = ds
        self.part = part
        self.learner = learner
        self.X = np.ascontiguousarray(ds.rows)
        self.y = np.ascontiguousarray(ds.labels)
        self.ncat = ds.ncat
        self.order = presort(self.X)
        k = max(2, min(plan.k, len(ds)))
        folds = stratified_folds(ds, k, plan.seed)
        self.folds = [folds.fold_assignments == f for f in range(k)]
        self.cache: dict[bytes, tuple[ObjectivePair, MetricReport]] = {}
        self.n_fits = 0

    def evaluate(self, mask, seed: int) -> tuple[ObjectivePair, MetricReport]:
        mask = np.asarray(mask, dtype=bool)
        key = np.packbits(mask).tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if mask.shape != (self.part.n_majority,) or not mask.any():
            raise ValueError("mask must cover the majority rows and keep at least one")
        keep = np.ones(len(self.ds), dtype=bool)
        keep[self.part.majority_idx[~mask]] = False
        reports = []
        for f, in_fold in enumerate(self.folds):
            test = np.flatnonzero(in_fold & keep)
            if test.size == 0:
                continue
            m = (~in_fold & keep).astype(np.int64)
            model = self.learner.fit(self.X, self.y, self.ncat, derive_seed(seed, f), multiplicity=m, order=self.order)
            self.n_fits += 1
            cm = confusion(model.predict(self.X[test]), self.y[test])
            reports.append(fold_report(cm))
        kept = int(np.count_nonzero(mask))
        report = average_reports(reports, integrity_value=kept / self.part.n_majority)
        fitness = report.tpr_x_tnr if not np.isnan(report.tpr_x_tnr) else 0.0
        out = (ObjectivePair(fitness, report.integrity), report)
        self.cache[key] = out
        return out


def evaluate_mask(mask, ds, part, learner_spec: LearnerSpec, eval_plan: EvalPlan = EvalPlan(), seed: int = 0):
    """(objectives, report) of one mask; see MaskEvaluator for the protocol."""
    return MaskEvaluator(ds, part, learner_spec, eval_plan).evaluate(mask, seed)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    gbest_fitness: float
    gbest_integrity: float
    gbest_score: float


@dataclass(frozen=True)
class EvalRecord:
    iteration: int
    particle: int
    fitness: float
    integrity: float


@dataclass
class SwarmResult:
    final: Solution
    rebalanced: BinaryDataset
    archive: ParetoArchive | None
    trace: list[TraceRecord] = field(default_factory=list)
    evaluations: list[EvalRecord] = field(default_factory=list)
    n_fits: int = 0


def _masks(config: SwarmConfig, positions, velocities, rng, first: bool) -> list[np.ndarray]:
    if config.mode == "bpso_sigmoid" and not first:
        return [_repair(binarize_sigmoid(v, rng), x) for x, v in zip(positions, velocities)]
    return [binarize_round(x, config.pos_lo, config.pos_hi) for x in positions]


def _run(ds: BinaryDataset, learner: LearnerSpec, config: SwarmConfig, multi: bool) -> SwarmResult:
    part = partition_classes(ds)
    n = part.n_majority
    rng = np.random.default_rng(config.seed)
    evaluator = MaskEvaluator(ds, part, learner, EvalPlan(config.inner_folds, config.seed))
    weight = config.integrity_weight if multi else 0.0

    pos = rng.uniform(config.pos_lo, config.pos_hi, (config.population, n))
    vel = rng.uniform(-config.v_max, config.v_max, (config.population, n))
    pos[0] = config.pos_hi  # the untouched training set is always a candidate
    particles = [ParticleState(pos[i].copy(), vel[i].copy(), pos[i].copy()) for i in range(config.population)]

    archive = ParetoArchive(cap=config.archive_cap) if multi else None
    best: Solution | None = None
    g_pos, g_obj, g_score = None, None, float("-inf")
    trace, log = [], []

    for it in range(config.max_iter + 1):
        if it:
            particles = [pso_step(p, g_pos, config, rng) for p in particles]
        masks = _masks(config, [p.position for p in particles], [p.velocity for p in particles], rng, it == 0)
        for i, (p, mask) in enumerate(zip(particles, masks)):
            obj, report = evaluator.evaluate(mask, derive_seed(config.seed, it, i))
            log.append(EvalRecord(it, i, obj.fitness, obj.integrity))
            sol = Solution(mask, obj, report)
            if multi:
                archive.offer(sol)
            elif best is None or obj.fitness > best.objectives.fitness:
                best = sol
            score = obj.fitness + weight * obj.integrity
            if score > p.pbest_score:
                p.pbest_score, p.pbest_objectives = score, obj
                p.pbest_position = p.position.copy()
            if score > g_score:
                g_score, g_obj, g_pos = score, obj, p.position.copy()
        trace.append(TraceRecord(it, g_obj.fitness, g_obj.integrity, g_score))

    final = select_final(archive) if multi else best
    return SwarmResult(
        final=final,
        rebalanced=assemble_subset(ds, part, final.mask),
        archive=archive,
        trace=trace,
        evaluations=log,
        n_fits=evaluator.n_fits,
    )


def run_bpsois(ds: BinaryDataset, learner_spec: LearnerSpec, config: SwarmConfig = SwarmConfig()) -> SwarmResult:
    """Two-objective search: archive of non-inferior masks, final pick by kappa x accuracy."""
    if config.mode == "pso_continuous":
        raise ValueError("run_bpsois needs a binary mode; use run_psois for pso_continuous")
    return _run(ds, learner_spec, config, multi=True)


def run_psois(ds: BinaryDataset, learner_spec: LearnerSpec, config: SwarmConfig = SwarmConfig(mode="pso_continuous")) -> SwarmResult:
    """Single-objective baseline: guidance and result by TPR x TNR alone."""
    if config.mode != "pso_continuous":
        config = replace(config, mode="pso_continuous")
    return _run(ds, learner_spec, config, multi=False)
