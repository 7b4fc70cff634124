import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vaxlens.errors import EvalError
from vaxlens.learning import Metrics, TreeParams, evaluate, fit


def test_symmetric_confusion():
    m = Metrics(tp=9, fp=1, fn=1, tn=9)
    assert m.accuracy == 0.9
    assert m.precision == 0.9
    assert m.recall == 0.9
    assert m.f1 == pytest.approx(0.9, abs=1e-15)


def test_all_positive_perfect():
    m = Metrics.from_predictions([1, 1, 1], [1, 1, 1])
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)


def test_zero_division_conventions():
    m = Metrics(tp=0, fp=0, fn=3, tn=7)
    assert m.precision == 0.0
    assert m.recall == 0.0
    assert m.f1 == 0.0


def test_empty_labels_rejected():
    with pytest.raises(EvalError):
        Metrics.from_predictions([], [])


@given(st.tuples(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500)))
def test_identities_on_random_tables(counts):
    tp, fp, fn, tn = counts
    if tp + fp + fn + tn == 0:
        return
    m = Metrics(tp=tp, fp=fp, fn=fn, tn=tn)
    assert abs(m.accuracy - (tp + tn) / m.n) < 1e-12
    if m.precision + m.recall > 0:
        f1 = 2 * m.precision * m.recall / (m.precision + m.recall)
        assert abs(m.f1 - f1) < 1e-12


def test_evaluate_thresholds_at_half():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    y = np.array([0, 0, 1, 1])
    model = fit("tree", TreeParams(max_depth=2), X, y, seed=0)
    m = evaluate(model, X, y)
    assert (m.tp, m.fp, m.fn, m.tn) == (2, 0, 0, 2)
    assert m.accuracy == 1.0


def test_evaluate_counts_derive_from_confusion():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] > 0).astype(int)
    model = fit("tree", TreeParams(max_depth=3), X, y, seed=0)
    m = evaluate(model, X, y)
    assert m.tp + m.fp + m.fn + m.tn == 60
    assert 0 <= m.accuracy <= 1
