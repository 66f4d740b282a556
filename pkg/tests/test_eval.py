import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from clid.errors import DataError
from clid.eval import (
    CSV_FIELDS,
    EvalReport,
    accuracy,
    confusion_matrix,
    evaluate,
    macro_f1,
    mcc,
    per_class_f1,
    render_confusion,
    render_report,
)

# published confusion matrices, rows/cols in W, E, I, S order
VAE_NGRAM_30 = np.array([[611, 2, 0, 0], [0, 300, 0, 1], [2, 9, 512, 11], [0, 1, 9, 528]])
NGRAM_FULL = np.array([[611, 2, 0, 0], [1, 299, 1, 0], [0, 3, 519, 12], [0, 1, 8, 529]])


def pearson_oracle(cm):
    """Correlation of one-hot true/predicted indicator matrices, built sample by sample."""
    k = cm.shape[0]
    t, p = np.nonzero(cm)
    reps = cm[t, p]
    true = np.repeat(t, reps)
    pred = np.repeat(p, reps)
    X = np.eye(k)[true]
    Y = np.eye(k)[pred]
    Xc, Yc = X - X.mean(0), Y - Y.mean(0)
    den = np.sqrt((Xc * Xc).sum() * (Yc * Yc).sum())
    return 0.0 if den == 0 else (Xc * Yc).sum() / den


def binary_mcc(cm):
    tp, fn, fp, tn = cm[0, 0], cm[0, 1], cm[1, 0], cm[1, 1]
    den = np.sqrt(float((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)))
    return 0.0 if den == 0 else (tp * tn - fp * fn) / den


def test_mcc_matches_pearson_oracle_4x4():
    r = np.random.default_rng(0)
    for _ in range(1000):
        cm = r.integers(0, 30, size=(4, 4))
        cm[0, 0] += 1
        assert abs(mcc(cm) - pearson_oracle(cm)) <= 1e-10


def test_mcc_reduces_to_binary():
    r = np.random.default_rng(1)
    for _ in range(1000):
        cm = r.integers(0, 50, size=(2, 2))
        cm[0, 0] += 1
        assert abs(mcc(cm) - binary_mcc(cm)) <= 1e-10


def test_confusion_examples():
    assert confusion_matrix([0, 1, 2, 3], [0, 1, 2, 3]).tolist() == np.eye(4, dtype=int).tolist()
    cm = confusion_matrix([0], [1])
    assert cm[0, 1] == 1 and cm.sum() == 1
    with pytest.raises(DataError):
        confusion_matrix([0, 1], [0])


def test_metric_examples():
    assert accuracy(np.eye(4)) == 1.0
    assert accuracy(np.array([[2, 0], [1, 1]])) == 0.75
    assert np.allclose(per_class_f1(np.array([[2, 1], [1, 2]])), [2 / 3, 2 / 3])
    assert per_class_f1(np.array([[3, 0], [2, 0]]))[1] == 0.0
    assert macro_f1(np.diag([1, 0, 1, 0])) == 0.5
    assert mcc(np.eye(4) * 5) == 1.0
    assert mcc(np.array([[5, 0], [7, 0]])) == 0.0


def test_published_matrices():
    assert abs(accuracy(NGRAM_FULL) - 1958 / 1986) < 1e-12
    assert round(accuracy(NGRAM_FULL), 3) == 0.986
    assert 0.98 <= macro_f1(NGRAM_FULL) <= 0.99
    assert VAE_NGRAM_30[2].tolist() == [2, 9, 512, 11]
    # the printed headline (98% accuracy, 97% MCC) agrees with the matrix to within one point
    assert abs(accuracy(VAE_NGRAM_30) - 0.98) < 0.01
    assert abs(mcc(VAE_NGRAM_30) - 0.97) < 0.01
    rep = evaluate(*expand(VAE_NGRAM_30))
    assert np.array_equal(rep.cm, VAE_NGRAM_30)


def expand(cm):
    t, p = np.nonzero(cm)
    return np.repeat(t, cm[t, p]), np.repeat(p, cm[t, p])


def random_cm():
    return arrays(np.int64, (4, 4), elements=st.integers(0, 40)).filter(lambda m: m.sum() > 0)


@settings(max_examples=200)
@given(random_cm(), st.permutations(range(4)), st.integers(1, 5))
def test_metric_invariants(cm, perm, factor):
    assert 0 <= accuracy(cm) <= 1 and 0 <= macro_f1(cm) <= 1
    assert -1 - 1e-12 <= mcc(cm) <= 1 + 1e-12
    q = np.array(perm)
    P = cm[np.ix_(q, q)]
    assert abs(accuracy(P) - accuracy(cm)) < 1e-12
    assert abs(macro_f1(P) - macro_f1(cm)) < 1e-12
    assert abs(mcc(P) - mcc(cm)) < 1e-12
    assert abs(mcc(cm * factor) - mcc(cm)) < 1e-12
    off_diagonal = np.count_nonzero(cm - np.diag(np.diag(cm)))
    if off_diagonal:
        assert mcc(cm) < 1 - 1e-12
    elif np.count_nonzero(cm.sum(axis=0)) > 1:
        assert abs(mcc(cm) - 1) < 1e-12


def test_render_rounding_and_formats():
    y = np.array([0] * 500)
    pred = y.copy()
    pred[:11] = 1  # accuracy 0.978
    rep = evaluate(y, pred, model="nn", features="ngram", label_fraction=1.0, seed=42)
    assert "98%" in render_report(rep, "table").splitlines()[2]
    d = json.loads(render_report(rep, "json"))
    assert d["metrics"]["accuracy"] == rep.accuracy
    assert set(d) == {"meta", "metrics", "confusion"}
    assert set(d["metrics"]["f1"]) == {"welsh", "english", "irish", "scottish"}
    assert EvalReport.from_dict(d).to_dict() == d
    header = render_report(rep, "csv").splitlines()[0]
    assert header == ",".join(CSV_FIELDS)
    assert render_report([rep, rep], "csv").splitlines()[0] == header


def test_render_confusion_side_by_side():
    a = EvalReport(VAE_NGRAM_30, {"model": "nn", "features": "vae+ngram", "label_fraction": 0.3})
    b = EvalReport(NGRAM_FULL, {"model": "nn", "features": "ngram", "label_fraction": 1.0})
    lines = render_confusion([a, b]).splitlines()
    assert len(lines) == 6
    assert "512" in lines[4] and "519" in lines[4]
