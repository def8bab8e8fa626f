import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopsgd.ensemble import (
    NoParticipantsError,
    Participation,
    SiloPredictor,
    TestSet,
    evaluate,
    fedboost_aggregate,
    predict_silo,
)


def test_aggregate_examples():
    assert fedboost_aggregate([0.2, 0.8], [1, 1]) == pytest.approx(0.5, abs=1e-15)
    assert fedboost_aggregate([0.2, 0.8], Participation((1, 0))) == 0.2
    with pytest.raises(NoParticipantsError):
        fedboost_aggregate([0.2, 0.8], [0, 0])


def test_aggregate_length_mismatch():
    with pytest.raises(ValueError):
        fedboost_aggregate([0.1, 0.2, 0.3], [1, 1])


def test_participation_parsing():
    assert Participation.parse("1,0,1").flags == (1, 0, 1)
    assert Participation.parse("1,0,1").count == 2
    assert Participation.all(3).flags == (1, 1, 1)
    with pytest.raises(ValueError):
        Participation((1, 2))
    with pytest.raises(ValueError):
        Participation.parse("1,x")


def test_predict_silo():
    assert predict_silo(SiloPredictor(0, np.zeros(3), "logistic"), np.array([4.0, -2.0, 9.0])) == 0.5
    assert predict_silo(SiloPredictor(0, np.array([1.0, 0.0]), "linear"), np.array([3.0, 7.0])) == 3.0
    with pytest.raises(ValueError):
        predict_silo(SiloPredictor(0, np.zeros(2), "linear"), np.zeros(3))
    with pytest.raises(ValueError):
        SiloPredictor(0, np.zeros(2), "tree")


def test_logistic_range(rng):
    p = SiloPredictor(0, rng.standard_normal(4), "logistic")
    out = predict_silo(p, rng.standard_normal((10_000, 4)))
    assert out.shape == (10_000,)
    assert np.all((out >= 0) & (out <= 1))
    # saturation stays inside the closed interval
    extreme = predict_silo(p, np.array([[1e6] * 4, [-1e6] * 4]))
    assert np.all((extreme >= 0) & (extreme <= 1))


def test_evaluate_identical_silos(rng):
    theta = rng.standard_normal(3)
    silos = [SiloPredictor(i, theta, "logistic") for i in range(4)]
    X = rng.standard_normal((50, 3))
    ts = TestSet(X, (X @ theta > 0).astype(float))
    full = evaluate(silos, Participation.all(4), ts)
    np.testing.assert_array_equal(full.predictions, predict_silo(silos[0], X))
    sub = evaluate(silos, (0, 1, 0, 1), ts)
    assert sub.value == full.value == 1.0
    assert full.metric == "accuracy" and sub.participants == 2


def test_evaluate_linear_mse():
    silos = [SiloPredictor(0, np.array([1.0, 0.0]), "linear"), SiloPredictor(1, np.array([0.0, 1.0]), "linear")]
    ts = TestSet(np.array([[1.0, 3.0], [2.0, 2.0]]), np.array([2.0, 0.0]))
    m = evaluate(silos, (1, 1), ts)
    np.testing.assert_allclose(m.predictions, [2.0, 2.0])
    assert m.metric == "mse" and m.value == pytest.approx(2.0)


def test_evaluate_without_labels_and_errors(rng):
    silos = [SiloPredictor(i, rng.standard_normal(2), "linear") for i in range(2)]
    m = evaluate(silos, (1, 0), TestSet(rng.standard_normal((5, 2))))
    assert m.metric is None and m.value is None
    with pytest.raises(NoParticipantsError):
        evaluate(silos, (0, 0), TestSet(np.zeros((1, 2))))
    with pytest.raises(ValueError):
        evaluate(silos, (1,), TestSet(np.zeros((1, 2))))
    mixed = [SiloPredictor(0, np.zeros(2), "linear"), SiloPredictor(1, np.zeros(2), "logistic")]
    with pytest.raises(ValueError):
        evaluate(mixed, (1, 1), TestSet(np.zeros((1, 2))))
    with pytest.raises(ValueError):
        TestSet(np.zeros((3, 2)), np.zeros(2))


def test_evaluate_matches_per_sample_aggregation(rng):
    silos = [SiloPredictor(i, rng.standard_normal(3), "logistic") for i in range(5)]
    flags = (1, 0, 1, 1, 0)
    X = rng.standard_normal((20, 3))
    agg = evaluate(silos, flags, TestSet(X)).predictions
    for j, x in enumerate(X):
        per = [predict_silo(s, x) for s in silos]
        assert agg[j] == pytest.approx(fedboost_aggregate(per, flags), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.integers(0, 1)), min_size=1, max_size=12), st.randoms())
def test_aggregate_properties(pairs, rnd):
    preds = [p for p, _ in pairs]
    flags = [f for _, f in pairs]
    if sum(flags) == 0:
        with pytest.raises(NoParticipantsError):
            fedboost_aggregate(preds, flags)
        return
    out = fedboost_aggregate(preds, flags)
    active = [p for p, f in pairs if f]
    tol = 1e-9 * max(1.0, max(abs(p) for p in active))
    assert min(active) - tol <= out <= max(active) + tol
    perm = list(range(len(pairs)))
    rnd.shuffle(perm)
    assert fedboost_aggregate([preds[i] for i in perm], [flags[i] for i in perm]) == pytest.approx(out, abs=tol)
    # an extra silo with flag 0 never changes the output
    assert fedboost_aggregate(preds + [preds[0] * 7 + 1], flags + [0]) == pytest.approx(out, abs=tol)
    assert Participation(tuple(flags)).count == len(active)


def test_exhaustive_flag_patterns_n4():
    preds = np.random.default_rng(4).uniform(-3, 3, 4)
    for flags in itertools.product((0, 1), repeat=4):
        if sum(flags) == 0:
            with pytest.raises(NoParticipantsError):
                fedboost_aggregate(preds, flags)
            continue
        out = fedboost_aggregate(preds, flags)
        active = preds[np.array(flags, dtype=bool)]
        assert active.min() - 1e-12 <= out <= active.max() + 1e-12
        assert out == pytest.approx(active.mean(), abs=1e-12)
