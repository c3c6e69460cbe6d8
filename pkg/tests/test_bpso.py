from __future__ import annotations

import numpy as np
import pytest

from rebalance.archive import SLACK
from rebalance.bpso import (
    EvalPlan,
    OutOfRange,
    ParticleState,
    SwarmConfig,
    binarize_round,
    binarize_sigmoid,
    evaluate_mask,
    pso_step,
    run_bpsois,
    run_psois,
)
from rebalance.data_io import parse_keel, partition_classes
from rebalance.harness import RunConfig, evaluate
from rebalance.learners import LearnerSpec
from rebalance.metrics import REPORT_COLUMNS

DT = LearnerSpec("dt")


def _state(x, v, p):
    x, v, p = (np.array([float(a)]) for a in (x, v, p))
    return ParticleState(x, v, p)


def test_step_hand_example():
    cfg = SwarmConfig(inertia=0.8, c1=2.0, c2=2.0)
    out = pso_step(_state(0.3, 0.1, 0.5), np.array([1.0]), cfg, None, r1=np.array([0.5]), r2=np.array([0.5]))
    # 0.8*0.1 + 2*0.5*(0.5-0.3) + 2*0.5*(1.0-0.3) = 0.98
    assert out.velocity[0] == pytest.approx(0.98, abs=1e-15)
    assert out.position[0] == pytest.approx(1.28, abs=1e-15)


def test_step_pure_inertia_and_clamp():
    cfg = SwarmConfig(inertia=0.8)
    rng = np.random.default_rng(0)
    out = pso_step(_state(0.4, 0.5, 0.4), np.array([0.4]), cfg, rng)
    assert out.velocity[0] == 0.8 * 0.5
    fast = pso_step(_state(-0.49, 0.0, 1.49), np.array([1.49]), cfg, None, r1=np.ones(1), r2=np.ones(1))
    assert fast.velocity[0] == cfg.v_max
    edge = pso_step(_state(1.2, 1.0, 1.49), np.array([1.49]), cfg, None, r1=np.ones(1), r2=np.ones(1))
    assert edge.position[0] == cfg.pos_hi


def test_round_binarisation():
    assert binarize_round([0.7, -0.2, 0.5, 0.49]).tolist() == [True, False, True, False]
    assert binarize_round([-0.49, -0.01, 0.49, 0.5, 1.0, 1.49]).astype(int).tolist() == [0, 0, 0, 1, 1, 1]
    assert binarize_round(np.full(5, 1.49)).all()
    rep = binarize_round(np.array([-0.49, -0.3, -0.49]))
    assert rep.sum() == 1 and rep[1]
    with pytest.raises(OutOfRange):
        binarize_round([1.6])


def test_sigmoid_midpoint_and_saturation():
    rng = np.random.default_rng(0)
    bits = binarize_sigmoid(np.zeros(100_000), rng)
    assert abs(bits.mean() - 0.5) <= 0.01
    assert binarize_sigmoid(np.full(1000, 50.0), rng).all()
    a = binarize_sigmoid(np.linspace(-2, 2, 50), np.random.default_rng(4))
    b = binarize_sigmoid(np.linspace(-2, 2, 50), np.random.default_rng(4))
    assert np.array_equal(a, b)


def test_all_ones_mask_equals_plain_dt(bundled):
    ds = bundled("haberman")
    part = partition_classes(ds)
    obj, rep = evaluate_mask(np.ones(part.n_majority, bool), ds, part, DT, EvalPlan(k=10, seed=4))
    base = evaluate(ds, RunConfig("dt", folds=10, seed=4)).report
    for col in REPORT_COLUMNS:
        assert getattr(rep, col) == getattr(base, col), col
    assert obj.fitness == base.tpr_x_tnr and obj.integrity == 1.0


def test_integrity_arithmetic(bundled):
    ds = bundled("abalone9-18")
    part = partition_classes(ds)
    mask = np.zeros(689, bool)
    mask[:530] = True
    obj, _ = evaluate_mask(mask, ds, part, DT, EvalPlan(), seed=0)
    assert obj.integrity == 530 / 689


def test_single_majority_row():
    # one row per class: the first-declared label is the majority on a tie
    text = "@relation r\n@attribute x real\n@attribute c {a, b}\n@data\n0, a\n1, b\n"
    ds = parse_keel(text)
    assert partition_classes(ds).n_majority == 1
    res = run_bpsois(ds, DT, SwarmConfig(population=3, max_iter=2, inner_folds=2))
    assert res.final.mask.tolist() == [True]
    assert res.final.objectives.integrity == 1.0


@pytest.fixture(scope="module")
def small_runs(bundled):
    ds = bundled("glass-0-1-4-6_vs_2")
    cfg = SwarmConfig(population=6, max_iter=4, seed=3)
    return ds, cfg, run_bpsois(ds, DT, cfg), run_psois(ds, DT, cfg)


def test_final_not_worse_than_full_set(small_runs):
    ds, cfg, res, _ = small_runs
    part = partition_classes(ds)
    full, _ = evaluate_mask(np.ones(part.n_majority, bool), ds, part, DT, EvalPlan(cfg.inner_folds, cfg.seed), seed=0)
    assert res.final.objectives.fitness >= full.fitness - SLACK
    assert res.evaluations[0].integrity == 1.0  # particle 0 starts as the full set


def test_archive_is_mutually_non_dominated(small_runs):
    _, _, res, _ = small_runs
    objs = res.archive.objectives()
    for i, a in enumerate(objs):
        for j, b in enumerate(objs):
            if i != j:
                assert not (b[0] >= a[0] and b[1] >= a[1] and (b[0] - a[0] > SLACK or b[1] - a[1] > SLACK))


def test_trace_scores_non_decreasing(small_runs):
    _, cfg, res, pres = small_runs
    for r in (res, pres):
        scores = [t.gbest_score for t in r.trace]
        assert len(scores) == cfg.max_iter + 1
        assert all(a <= b for a, b in zip(scores, scores[1:]))
    assert pres.archive is None
    assert pres.final.objectives.fitness == max(e.fitness for e in pres.evaluations)


def test_runs_are_deterministic(bundled, small_runs):
    ds, cfg, res, _ = small_runs
    again = run_bpsois(ds, DT, cfg)
    assert np.array_equal(again.final.mask, res.final.mask)
    assert again.archive.objectives() == res.archive.objectives()
    assert again.evaluations == res.evaluations


def test_sigmoid_mode_runs(bundled):
    ds = bundled("glass-0-1-4-6_vs_2")
    res = run_bpsois(ds, DT, SwarmConfig(population=4, max_iter=2, mode="bpso_sigmoid"))
    assert res.final.popcount >= 1
    with pytest.raises(ValueError):
        run_bpsois(ds, DT, SwarmConfig(mode="pso_continuous"))
