import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crisisgraph.metrics import report


def test_hand_computed_confusion():
    r = report([0, 0, 1, 1], [0, 1, 1, 1], 2)
    np.testing.assert_array_equal(r.confusion, [[1, 1], [0, 2]])
    assert r.f1[0] == pytest.approx(2 / 3)
    assert r.f1[1] == pytest.approx(0.8)
    assert r.weighted_f1 == pytest.approx(0.733333, abs=1e-4)


def test_perfect_and_constant_predictions():
    r = report([0, 1, 2, 1], [0, 1, 2, 1], 3)
    assert r.weighted_precision == r.weighted_recall == r.weighted_f1 == 1.0
    r = report([0, 0, 1, 1], [0, 0, 0, 0], 2)
    np.testing.assert_allclose(r.precision, [0.5, 0.0])
    np.testing.assert_allclose(r.recall, [1.0, 0.0])
    assert r.weighted_f1 == pytest.approx(1 / 3)


def test_empty_rejected():
    with pytest.raises(ValueError):
        report([], [], 2)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
def test_metric_ranges_and_supports(pairs):
    truth, pred = zip(*pairs)
    r = report(truth, pred, 4)
    for v in (r.weighted_precision, r.weighted_recall, r.weighted_f1):
        assert 0.0 <= v <= 1.0
    np.testing.assert_array_equal(r.confusion.sum(axis=1), r.support)
    assert np.all((r.f1 >= 0) & (r.f1 <= 1))


@given(st.integers(1, 15), st.lists(st.integers(0, 2), min_size=45, max_size=45))
def test_weighted_equals_macro_for_equal_supports(per_class, preds):
    truth = [c for c in range(3) for _ in range(per_class)]
    r = report(truth, preds[:len(truth)], 3)
    assert r.weighted_f1 == pytest.approx(r.f1.mean())
