import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dementia_qml.metrics import ConfusionCounts, compute_metrics, confusion, evaluate


class TestConfusion:
    def test_perfect(self):
        assert confusion([1, 1, -1, -1], [1, 1, -1, -1]) == ConfusionCounts(2, 0, 0, 2)

    def test_all_false_positive(self):
        assert confusion([1, 1, 1], [-1, -1, -1]) == ConfusionCounts(0, 3, 0, 0)

    def test_one_each(self):
        assert confusion([1, 1, -1, -1], [1, -1, 1, -1]) == ConfusionCounts(1, 1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion([1, -1], [1])

    def test_bad_values(self):
        with pytest.raises(ValueError):
            confusion([1, 0], [1, -1])

    def test_empty(self):
        with pytest.raises(ValueError):
            confusion([], [])


class TestComputeMetrics:
    def test_formulas(self):
        m = compute_metrics(ConfusionCounts(tp=2, fp=1, fn=1, tn=2))
        assert m.accuracy == pytest.approx(4 / 6)
        assert m.precision == pytest.approx(2 / 3)
        assert m.recall == pytest.approx(2 / 3)
        assert m.f1 == pytest.approx(2 / 3)
        assert m.degenerate == ()

    def test_perfect(self):
        m = compute_metrics(ConfusionCounts(3, 0, 0, 4))
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_no_positive_predictions(self):
        m = compute_metrics(ConfusionCounts(tp=0, fp=0, fn=2, tn=3))
        assert m.precision == 0.0 and "precision" in m.degenerate
        assert m.f1 == 0.0 and "f1" in m.degenerate

    def test_zero_total(self):
        with pytest.raises(ValueError):
            compute_metrics(ConfusionCounts(0, 0, 0, 0))

    def test_tags(self):
        m = evaluate([1, -1], [1, -1], model="svm", k=3, shots=1024, seed=2)
        d = m.as_dict()
        assert (d["model"], d["k"], d["shots"], d["seed"]) == ("svm", 3, 1024, 2)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(-1, 0, 0, 0)


labels = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=40)


@given(st.data())
@settings(max_examples=100, deadline=None)
def test_properties(data):
    y = data.draw(labels)
    p = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(y), max_size=len(y)))
    c = confusion(p, y)
    m = compute_metrics(c)
    assert c.total == len(y)
    for v in (m.accuracy, m.precision, m.recall, m.f1):
        assert 0.0 <= v <= 1.0
    if not m.degenerate:
        assert min(m.precision, m.recall) - 1e-12 <= m.f1 <= max(m.precision, m.recall) + 1e-12
        assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
    swapped = confusion(-np.array(p), -np.array(y))
    assert (swapped.tp, swapped.tn, swapped.fp, swapped.fn) == (c.tn, c.tp, c.fn, c.fp)
    assert compute_metrics(swapped).accuracy == m.accuracy
