"""Reference rebalancing methods: random under-sampling, Resample,
EasyEnsemble, BalanceCascade and RUSBoost."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import as_rng, derive_seed
from .data_io import MAJORITY, MINORITY, BinaryDataset, ClassPartition, partition_classes, stratified_folds
from .evaluation import cross_validate, fold_averaged
from .learners import LearnerSpec
from .learners.ensembles import BoostedTrees, CascadeEnsemble, EnsembleConfig, boost
from .learners.tree import TreeParams, presort

SWEEP_RATES = (
    1.0, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2,
    0.1, 0.08, 0.06, 0.04, 0.02, 0.015, 0.014, 0.013, 0.012, 0.011,
)

# rounds of AdaBoost inside each EasyEnsemble / BalanceCascade subset
SUBSET_ROUNDS = 10


@dataclass(frozen=True)
class SweepSpec:
    rates: tuple[float, ...] = SWEEP_RATES
    trials: int = 10
    seed: int = 0
    folds: int = 10

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates or any(not 0.0 < r <= 1.0 for r in rates):
            raise ValueError("sweep rates must lie in (0, 1]")
        if any(a <= b for a, b in zip(rates, rates[1:])):
            raise ValueError("sweep rates must be strictly descending")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    rate: float
    mean_tpr: float
    mean_tnr: float
    mean_product: float
    integrity: float
    post_ratio: float  # minority / selected majority


def kept_count(n: int, rate: float) -> int:
    """Rows kept at ``rate``: round half up, never below one."""
    return max(1, int(math.floor(rate * n + 0.5)))


def random_undersample(part: ClassPartition | int, rate: float, seed) -> np.ndarray:
    """Boolean mask over the majority rows keeping ``kept_count(N, rate)`` of them."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate {rate} outside (0, 1]")
    n = part if isinstance(part, int) else part.n_majority
    mask = np.zeros(n, dtype=bool)
    mask[as_rng(seed).choice(n, kept_count(n, rate), replace=False)] = True
    return mask


def undersample_sweep(ds: BinaryDataset, spec: SweepSpec = SweepSpec(), learner: LearnerSpec = LearnerSpec()):
    """Mean TPR/TNR over ``spec.trials`` random masks per rate.

    Each mask is drawn over the whole majority class; cross-validation then
    trains on the kept rows of each training part and tests on untouched
    folds.  Per-trial values are fold averages, as in ``cmd_eval``.
    """
    part = partition_classes(ds)
    plan = stratified_folds(ds, spec.folds, spec.seed)

    def train(sub, seed):
        return learner.train(sub, seed), 1.0, None

    rows = []
    for i, rate in enumerate(spec.rates):
        tprs, tnrs, prods = [], [], []
        for trial in range(spec.trials):
            mask = random_undersample(part, rate, derive_seed(spec.seed, trial, i))
            keep = np.ones(len(ds), dtype=bool)
            keep[part.majority_idx[~mask]] = False
            rep = fold_averaged(cross_validate(ds, plan, train, spec.seed, keep=keep))
            tprs.append(rep.tpr)
            tnrs.append(rep.tnr)
            prods.append(rep.tpr_x_tnr)
        kept = kept_count(part.n_majority, rate)
        rows.append(
            SweepRow(
                rate=rate,
                mean_tpr=float(np.mean(tprs)),
                mean_tnr=float(np.mean(tnrs)),
                mean_product=float(np.mean(prods)),
                integrity=kept / part.n_majority,
                post_ratio=part.n_minority / kept,
            )
        )
    return rows


def resample_uniform(ds: BinaryDataset, seed) -> BinaryDataset:
    """Same-size sample with replacement whose expected class counts are equal."""
    labels = ds.labels
    n_class = np.bincount(labels, minlength=2).astype(np.float64)
    p = 1.0 / (2.0 * n_class[labels])
    draw = np.sort(as_rng(seed).choice(len(ds), len(ds), replace=True, p=p / p.sum()))
    if np.all(labels[draw] == labels[draw[0]]):
        # both classes are needed downstream; swap one draw for the other class
        other = np.flatnonzero(labels != labels[draw[0]])[0]
        draw = np.sort(np.append(draw[1:], other))
    return ds.take(draw)


def _subset_config(rounds: int) -> EnsembleConfig:
    return EnsembleConfig(n_members=rounds, n_iterations=rounds)


def _balanced_subset(rng, maj_pool, min_idx, n_rows) -> np.ndarray:
    m = np.zeros(n_rows, dtype=np.int64)
    m[min_idx] = 1
    take = min(min_idx.size, maj_pool.size)
    m[rng.choice(maj_pool, take, replace=False)] = 1
    return m


def easy_ensemble(
    ds: BinaryDataset,
    T: int = 100,
    rounds: int = SUBSET_ROUNDS,
    params: TreeParams = TreeParams(),
    seed=0,
) -> CascadeEnsemble:
    """T independent balanced subsets, AdaBoost on each, votes summed."""
    rng = as_rng(seed)
    X, y, ncat = ds.rows, ds.labels, ds.ncat
    order = presort(X)
    part = partition_classes(ds)
    members = []
    for _ in range(T):
        m = _balanced_subset(rng, part.majority_idx, part.minority_idx, len(ds))
        members.append(boost(X, y, ncat, _subset_config(rounds), params, seed=rng, multiplicity=m, order=order))
    return CascadeEnsemble(members, np.zeros(len(members)))


def balance_cascade(
    ds: BinaryDataset,
    T: int = 100,
    rounds: int = SUBSET_ROUNDS,
    params: TreeParams = TreeParams(),
    seed=0,
) -> CascadeEnsemble:
    """EasyEnsemble with a shrinking majority pool.

    After round i < T a threshold theta_i is set so that a fraction
    f = (|min|/|maj|)^(1/(T-1)) of the pool's majority rows still scores above
    it; the rest (correctly rejected) leave the pool.  Rows tied at theta are
    split at random so the pool shrinks by exactly that fraction.  The
    thresholds only drive removal: members are combined with zero offsets,
    because at T = 100 f is close to 1 and the summed offsets would push every
    row to minority.
    T = 1 is exactly one EasyEnsemble subset.  ``pool_sizes`` records the pool
    before each round and ``removal_thresholds`` the theta_i.
    """
    rng = as_rng(seed)
    X, y, ncat = ds.rows, ds.labels, ds.ncat
    order = presort(X)
    part = partition_classes(ds)
    pool = part.majority_idx.copy()
    f = (part.n_minority / part.n_majority) ** (1.0 / (T - 1)) if T > 1 else 1.0
    members, thetas, sizes = [], [], []
    for i in range(T):
        if pool.size == 0:
            break
        sizes.append(int(pool.size))
        m = _balanced_subset(rng, pool, part.minority_idx, len(ds))
        member = boost(X, y, ncat, _subset_config(rounds), params, seed=rng, multiplicity=m, order=order)
        theta = 0.0
        if i < T - 1:
            # keep exactly the n_keep highest-margin rows; ties are broken at random
            perm = rng.permutation(pool.size)
            margins = member.margin(X[pool[perm]])
            top = np.argsort(-margins, kind="stable")
            n_keep = int(math.floor(f * pool.size + 0.5))
            if n_keep >= pool.size:
                theta = float(margins.min()) - 1.0
            else:
                theta = float(margins[top[n_keep]])
            pool = np.sort(pool[perm[top[:n_keep]]])
        members.append(member)
        thetas.append(theta)
    model = CascadeEnsemble(members, np.zeros(len(members)))
    model.removal_thresholds = thetas
    model.pool_sizes = sizes
    model.fp_rate = f
    return model


def rusboost(
    ds: BinaryDataset,
    iterations: int = 100,
    rate: float = 0.75,
    params: TreeParams = TreeParams(),
    seed=0,
) -> BoostedTrees:
    """AdaBoost.M1 where each round's tree sees all minority rows plus a random
    ``rate`` share of the majority, weighted by the current boosting weights."""
    X, y, ncat = ds.rows, ds.labels, ds.ncat
    part = partition_classes(ds)
    n_keep = kept_count(part.n_majority, rate)

    def sampler(rng, w):
        m = np.zeros(len(ds), dtype=np.int64)
        m[part.minority_idx] = 1
        m[rng.choice(part.majority_idx, n_keep, replace=False)] = 1
        sub = m > 0
        if not (np.any(sub & (y == MAJORITY)) and np.any(sub & (y == MINORITY))) or w[sub].sum() <= 0:
            return None
        return m

    config = EnsembleConfig(n_members=iterations, n_iterations=iterations)
    return boost(X, y, ncat, config, params, seed=seed, round_sampler=sampler)
