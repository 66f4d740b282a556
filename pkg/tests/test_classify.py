import numpy as np
import pytest

from clid.classify import (
    CnnConfig,
    NnConfig,
    SvmConfig,
    SvmModel,
    gradient_check,
    predict,
    train_cnn,
    train_nn,
    train_svm,
)
from clid.classify.svm import hinge_losses
from clid.errors import DataError
from clid.features import Alphabet, encode_batch


def two_blobs(seed=0, n=40):
    r = np.random.default_rng(seed)
    X = np.vstack([r.normal(-3, 0.5, size=(n, 2)), r.normal(3, 0.5, size=(n, 2))])
    return X, np.repeat([0, 1], n)


def test_hinge():
    assert hinge_losses(np.array([2.0, 1.0, 0.0, -1.0])).tolist() == [0, 0, 1, 2]


def test_svm_separable_and_deterministic():
    X, y = two_blobs()
    m = train_svm(X, y, SvmConfig(epochs=20))
    assert (m.predict(X) == y).all()
    m2 = train_svm(X, y, SvmConfig(epochs=20))
    assert np.array_equal(m.weights, m2.weights)
    assert m.objective_trace[-1] < m.objective_trace[0]


def test_single_class_rejected():
    with pytest.raises(DataError):
        train_svm(np.zeros((4, 2)), np.zeros(4, dtype=int))
    with pytest.raises(DataError):
        train_nn(np.zeros((4, 2)), np.array([0, 1, 2]))


def test_tie_goes_to_lowest_index():
    m = SvmModel(np.zeros((4, 3)), np.array([0.0, 1.0, 1.0, 0.5]))
    assert predict(m, np.zeros((2, 3))).tolist() == [1, 1]
    flat = SvmModel(np.zeros((4, 3)), np.zeros(4))
    assert predict(flat, np.ones(3)) == 0


def test_dimension_mismatch():
    X, y = two_blobs()
    m = train_svm(X, y, SvmConfig(epochs=2))
    with pytest.raises(DataError):
        m.predict(np.zeros((3, 5)))


def test_nn_gradient_check():
    r = np.random.default_rng(0)
    X, y = r.normal(size=(60, 12)), r.integers(0, 4, size=60)
    m = train_nn(X, y, NnConfig(epochs=1))
    assert gradient_check(m, X[:4], y[:4]) <= 1e-4
    with pytest.raises(ValueError):
        gradient_check(m, X[:9], y[:9])


def test_nn_toy_reproduces_labels():
    X, y = two_blobs(1)
    m = train_nn(X, y, NnConfig(epochs=30, batch_size=16))
    assert (m.predict(X) == y).all()
    P = m.predict_proba(X)
    assert np.allclose(P.sum(axis=1), 1)


@pytest.fixture(scope="module")
def char_data(small_synthetic):
    alpha = Alphabet.fit(small_synthetic.texts)
    return encode_batch(small_synthetic.texts, alpha), small_synthetic.labels, alpha


def test_cnn_gradient_check(char_data):
    ids, y, alpha = char_data
    m = train_cnn(ids[::30], y[::30], alpha.size, CnnConfig(epochs=1, n_filters=8, embed_dim=6))
    assert gradient_check(m, ids[:2], y[:2]) <= 1e-4


def test_cnn_all_pad_input(char_data):
    ids, y, alpha = char_data
    m = train_cnn(ids[::30], y[::30], alpha.size, CnnConfig(epochs=1, n_filters=4, embed_dim=4))
    P = m.predict_proba(np.zeros((2, ids.shape[1]), dtype=np.int64))
    assert np.isfinite(P).all() and np.allclose(P.sum(axis=1), 1)
    with pytest.raises(DataError):
        m.predict(np.full((1, ids.shape[1]), alpha.size))
