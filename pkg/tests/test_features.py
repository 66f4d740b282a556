import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from clid.errors import DataError
from clid.features import (
    Alphabet,
    MinMaxScaler,
    NgramVocab,
    encode_chars,
    feature_names,
    fit_ngram_vocab,
    fit_pca,
    pca_transform,
    text_stats,
    vectorize_ngrams,
    word_ngrams,
)

AB = Alphabet({"a": 2, "b": 3})


def test_encode_chars():
    assert encode_chars("ab", AB, 4).tolist() == [2, 3, 0, 0]
    assert encode_chars("", AB, 3).tolist() == [0, 0, 0]
    assert encode_chars("abq", AB, 3).tolist() == [2, 3, 1]
    assert encode_chars("ababab", AB, 4).tolist() == [2, 3, 2, 3]


def test_alphabet_fit_reserves_pad_and_unk():
    alpha = Alphabet.fit(["ba", "c"])
    assert alpha.char_to_id == {"a": 2, "b": 3, "c": 4}
    assert alpha.size == 5


def test_fit_vocab_examples():
    assert set(fit_ngram_vocab(["aba"], (2, 2)).ngram_to_col) == {"ab", "ba"}
    v = fit_ngram_vocab(["ab", "ab", "cd"], (2, 2), max_features=2)
    assert set(v.ngram_to_col) == {"ab", "cd"}
    assert fit_ngram_vocab(["aba"], (1, 3)) == fit_ngram_vocab(["aba"], (1, 3))
    with pytest.raises(DataError):
        fit_ngram_vocab([], (1, 3))


def test_vectorize():
    v = NgramVocab({"ab": 0, "ba": 1}, (2, 2))
    assert vectorize_ngrams("aba", v).tolist() == [1, 1]
    assert vectorize_ngrams("abab", v).tolist() == [2, 1]
    assert vectorize_ngrams("", v).tolist() == [0, 0]


@given(st.text(alphabet="ab c", max_size=30))
def test_vectorize_matches_substring_count(text):
    vocab = fit_ngram_vocab(["ab c", "ba", "cab a"], (1, 3))
    vec = vectorize_ngrams(text, vocab)
    for g, col in vocab.ngram_to_col.items():
        # overlapping occurrence count
        expected = sum(text.startswith(g, i) for i in range(len(text)))
        assert vec[col] == expected


def test_text_stats():
    s = text_stats("ab abc")
    assert (s.avg_word_len, s.avg_consonants) == (2.5, 1.5)
    s = text_stats("aeiou")
    assert (s.avg_word_len, s.avg_consonants) == (5.0, 0.0)
    s = text_stats("")
    assert (s.avg_word_len, s.avg_consonants) == (0.0, 0.0)
    # accented vowels and w/y count as vowels
    assert text_stats("àéwy").avg_consonants == 0.0


def test_word_ngrams():
    assert word_ngrams("an cat mor") == ["an", "cat", "mor", "an_cat", "cat_mor"]
    assert word_ngrams("an") == ["an"]
    assert word_ngrams("") == []


def test_feature_names_escape_space():
    v = NgramVocab({"a ": 0, "b": 1}, (1, 2))
    assert feature_names(v) == ["ng:a\\s", "ng:b", "avg_word_len", "avg_consonants"]


def test_minmax_zero_span():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    out = MinMaxScaler.fit(X).transform(X)
    assert out.tolist() == [[0.0, 0.0], [1.0, 0.0]]


def test_pca_diagonal_line():
    m = fit_pca(np.array([[0.0, 0], [1, 1], [2, 2]]), 1)
    assert np.allclose(m.components[0], [1 / np.sqrt(2), 1 / np.sqrt(2)])
    assert np.isclose(m.explained_variance.sum(), 2.0)  # total variance of the data


def test_pca_mean_maps_to_zero_and_dimension_check(rng):
    X = rng.normal(size=(30, 4))
    m = fit_pca(X, 2)
    assert np.allclose(pca_transform(m, X.mean(axis=0)), 0)
    with pytest.raises(DataError):
        m.transform(np.zeros(3))
    with pytest.raises(DataError):
        fit_pca(X, 5)


def test_pca_total_variance_oracle(rng):
    X = rng.normal(size=(100, 10)) * np.arange(1, 11)
    m = fit_pca(X, 10)
    assert abs(m.explained_variance.sum() - np.trace(np.cov(X, rowvar=False))) < 1e-8


def test_pca_isotropic_exact_reconstruction(rng):
    X = rng.normal(size=(50, 2))
    m = fit_pca(X, 2)
    assert np.abs(m.inverse_transform(m.transform(X)) - X).max() < 1e-10


def test_pca_wide_matrix_uses_same_convention(rng):
    X = rng.normal(size=(6, 20))
    m = fit_pca(X, 5)
    assert np.allclose(m.components @ m.components.T, np.eye(5), atol=1e-8)
    assert abs(m.explained_variance.sum() - np.trace(np.cov(X, rowvar=False))) < 1e-8


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(8, 30), st.integers(2, 6)), elements=st.floats(-100, 100)))
def test_pca_invariants(X):
    n, d = X.shape
    m = fit_pca(X, d)
    assert np.abs(m.components @ m.components.T - np.eye(d)).max() < 1e-8
    total = np.var(X, axis=0, ddof=1).sum()
    assert abs(m.transform(X).var(axis=0, ddof=1).sum() - total) <= 1e-8 * max(1.0, total)
    assert np.all(np.diff(m.explained_variance) <= 1e-9 * max(1.0, total))
