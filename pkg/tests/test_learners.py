from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adaboost_round, best_split_1d
from rebalance.learners import (
    LEARNERS,
    CostMatrix,
    EnsembleConfig,
    LearnerSpec,
    SchemaMismatch,
    TreeParams,
    fit_tree,
    predict,
)
from rebalance.learners.ensembles import boost, fit_adaboost, fit_adacost, fit_bagging, fit_cost_sensitive
from rebalance.learners.serialize import CorruptModel, dumps, loads

NUM1 = np.zeros(1, dtype=np.int64)


def _blobs(seed, n=200, d=3, shift=1.0, minority=0.2):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < minority).astype(np.int8)
    X = rng.normal(size=(n, d)) + shift * y[:, None]
    return X, y, np.zeros(d, dtype=np.int64)


# -- tree ------------------------------------------------------------------

def test_threshold_on_separable_line():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1], dtype=np.int8)
    tree = fit_tree(X, y, NUM1)
    assert tree.feature[0] == 0 and tree.threshold[0] == 1.5
    np.testing.assert_array_equal(tree.predict(X), y)


def test_single_class_is_one_leaf():
    X = np.arange(6.0).reshape(-1, 1)
    tree = fit_tree(X, np.zeros(6, dtype=np.int8), NUM1)
    assert tree.n_nodes == 1
    assert not tree.predict(X).any()


def test_leaf_tie_goes_to_minority():
    X = np.array([[0.0], [0.0]])
    tree = fit_tree(X, np.array([0, 1], dtype=np.int8), NUM1)
    assert tree.predict(X).tolist() == [1, 1]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(6, 60))
def test_root_split_matches_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    y = (rng.random(n) < 0.4).astype(np.int8)
    if y.min() == y.max():
        return
    w = rng.random(n) + 0.1
    tree = fit_tree(x[:, None], y, NUM1, TreeParams(max_depth=1), weights=w)
    t, _ = best_split_1d(x, y, w)
    if t is None:
        assert tree.n_nodes == 1
    else:
        assert tree.threshold[0] == pytest.approx(t, abs=1e-12)


def test_multiplicity_equals_row_copies():
    X, y, ncat = _blobs(3, n=60)
    m = np.random.default_rng(0).integers(0, 3, 60)
    a = fit_tree(X, y, ncat, multiplicity=m)
    idx = np.repeat(np.arange(60), m)
    b = fit_tree(X[idx], y[idx], ncat)
    probe = np.random.default_rng(1).normal(size=(500, 3))
    np.testing.assert_array_equal(a.predict(probe), b.predict(probe))


def test_nominal_split():
    X = np.array([[0.0], [1.0], [2.0], [1.0], [0.0], [2.0]])
    y = np.array([0, 1, 0, 1, 0, 0], dtype=np.int8)
    tree = fit_tree(X, y, np.array([3]), TreeParams(min_leaf=1))
    np.testing.assert_array_equal(tree.predict(X), y)


def test_schema_mismatch_and_empty_probe():
    X, y, ncat = _blobs(0)
    model = LearnerSpec("dt").fit(X, y, ncat)
    with pytest.raises(SchemaMismatch):
        model.predict(np.zeros((3, 5)))
    assert predict(model, np.zeros((0, 3))).shape == (0,)
    with pytest.raises(SchemaMismatch):
        predict(model, np.zeros((0, 2)))


# -- boosting --------------------------------------------------------------

def test_adaboost_first_round_matches_hand_update():
    X, y, ncat = _blobs(5, n=80)
    model = fit_adaboost(X, y, ncat, EnsembleConfig(3, 3), TreeParams(max_depth=1), seed=0, keep_weights=True)
    w0 = model.weight_history[0]
    miss = model.trees[0].predict(X) != y
    alpha, w1 = adaboost_round(w0, miss)
    assert model.alphas[0] == pytest.approx(alpha, rel=1e-12)
    np.testing.assert_allclose(model.weight_history[1], w1, rtol=1e-12, atol=0)


def test_adacost_first_round_matches_hand_update():
    X, y, ncat = _blobs(6, n=80)
    costs = CostMatrix(50, 5)
    model = fit_adacost(X, y, ncat, costs, EnsembleConfig(3, 3), TreeParams(max_depth=1), seed=0, keep_weights=True)
    c = np.where(y == 1, 1.0, 0.1)
    miss = model.trees[0].predict(X) != y
    alpha, w1 = adaboost_round(model.weight_history[0], miss, 0.5 * c + 0.5, -0.5 * c + 0.5)
    assert model.alphas[0] == pytest.approx(alpha, rel=1e-12)
    np.testing.assert_allclose(model.weight_history[1], w1, rtol=1e-12, atol=0)
    np.testing.assert_array_equal(costs.row_costs(y), c)


@pytest.mark.parametrize("costed", [False, True])
def test_weights_stay_normalised(costed):
    X, y, ncat = _blobs(8, n=150, shift=0.6)
    kw = dict(config=EnsembleConfig(20, 40), params=TreeParams(max_depth=2), seed=1, keep_weights=True)
    model = fit_adacost(X, y, ncat, **kw) if costed else fit_adaboost(X, y, ncat, **kw)
    assert len(model.weight_history) > 3
    for w in model.weight_history:
        assert abs(w.sum() - 1.0) <= 1e-12


def test_boosting_reaches_zero_training_error_on_threshold_data():
    x = np.linspace(0, 1, 40)[:, None]
    y = (x[:, 0] > 0.62).astype(np.int8)
    model = fit_adaboost(x, y, NUM1, EnsembleConfig(5, 5), TreeParams(max_depth=1), seed=0)
    assert len(model.trees) <= 5
    np.testing.assert_array_equal(model.predict(x), y)


def test_member_and_round_caps():
    X, y, ncat = _blobs(9, n=300, shift=0.3)
    model = fit_adaboost(X, y, ncat, EnsembleConfig(7, 100), TreeParams(max_depth=1), seed=0)
    assert 1 <= len(model.trees) <= 7


def test_half_error_round_is_retried_after_jitter():
    # a constant feature with balanced labels: the first round errs exactly 0.5
    X = np.zeros((10, 1))
    y = np.array([0, 1] * 5, dtype=np.int8)
    model = boost(X, y, NUM1, EnsembleConfig(5, 5), seed=0)
    assert 1 <= len(model.trees) < 5
    assert all(a > 0 for a in model.alphas)


# -- cost-sensitive and bagging -------------------------------------------

def test_symmetric_costs_match_plain_tree():
    X, y, ncat = _blobs(11, n=300, shift=0.5)
    tree = fit_tree(X, y, ncat)
    cost = fit_cost_sensitive(X, y, ncat, CostMatrix(1.0, 1.0))
    probe = np.random.default_rng(2).normal(size=(1000, 3)) * 2
    np.testing.assert_array_equal(cost.predict(probe), tree.predict(probe))


def test_cost_rule():
    X, y, ncat = _blobs(12, n=300, shift=0.5)
    model = fit_cost_sensitive(X, y, ncat, CostMatrix(50, 5), TreeParams(max_depth=2))
    p_min = model.tree.minority_score(X)
    expected = (p_min * 50 >= (1 - p_min) * 5).astype(np.int8)
    np.testing.assert_array_equal(model.predict(X), expected)


def test_bagging_vote_rule():
    X, y, ncat = _blobs(13, n=200, shift=0.7)
    model = fit_bagging(X, y, ncat, 9, seed=3)
    probe = np.random.default_rng(4).normal(size=(300, 3))
    votes = np.sum([t.predict(probe) for t in model.trees], axis=0)
    np.testing.assert_array_equal(model.minority_votes(probe), votes)
    np.testing.assert_array_equal(model.predict(probe), (votes * 2 > 9).astype(np.int8))
    even = fit_bagging(X, y, ncat, 4, seed=3)
    v = even.minority_votes(probe)
    assert np.all(even.predict(probe)[v == 2] == 0)  # tie to majority


@pytest.mark.parametrize("name", LEARNERS)
def test_learners_deterministic(name):
    X, y, ncat = _blobs(14)
    spec = LearnerSpec(name, n_members=5, n_iterations=5)
    a = spec.fit(X, y, ncat, seed=9)
    b = spec.fit(X, y, ncat, seed=9)
    assert dumps(a) == dumps(b)


# -- serialisation ---------------------------------------------------------

@pytest.mark.parametrize("name", LEARNERS)
def test_serialise_round_trip(name):
    X, y, ncat = _blobs(15)
    model = LearnerSpec(name, n_members=6, n_iterations=6).fit(X, y, ncat, seed=2)
    blob = dumps(model)
    again = loads(blob)
    assert dumps(again) == blob
    probe = np.random.default_rng(5).normal(size=(400, 3))
    np.testing.assert_array_equal(again.predict(probe), model.predict(probe))


def test_cascade_round_trip(bundled):
    from rebalance.baselines import balance_cascade

    ds = bundled("glass-0-1-4-6_vs_2")
    model = balance_cascade(ds, T=4, rounds=3, seed=1)
    again = loads(dumps(model))
    np.testing.assert_array_equal(again.predict(ds.rows), model.predict(ds.rows))


def test_corrupt_blobs_rejected():
    X, y, ncat = _blobs(16)
    blob = dumps(LearnerSpec("adab", n_members=3, n_iterations=3).fit(X, y, ncat))
    for bad in (blob[:-5], blob + b"\0", b"XXXX" + blob[4:], blob[:4] + b"\xff\xff" + blob[6:], b""):
        with pytest.raises(CorruptModel):
            loads(bad)
