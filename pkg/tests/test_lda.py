import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clid.corpus import Language
from clid.errors import DataError
from clid.features import word_ngrams
from clid.unsup.lda import LdaConfig, fit_lda, lda_infer, lda_top_terms

FAST = LdaConfig(iterations=200, burn_in=100, sample_window=50, min_freq=1, seed=3)


def disjoint_docs(seed=0, per_group=15, length=20):
    r = np.random.default_rng(seed)
    groups = [[f"g{g}w{i}" for i in range(8)] for g in range(4)]
    docs, owner = [], []
    for g, vocab in enumerate(groups):
        for _ in range(per_group):
            docs.append(list(r.choice(vocab, size=length)))
            owner.append(g)
    return docs, np.array(owner), groups


@pytest.fixture(scope="module")
def disjoint_model():
    docs, owner, groups = disjoint_docs()
    return fit_lda(docs, 4, 0.1, 0.01, FAST), docs, owner, groups


def test_counts_consistent_after_every_sweep():
    docs, _, _ = disjoint_docs(1)
    n_tokens = sum(map(len, docs))
    seen = []

    def check(it, ndk, nkw):
        seen.append(it)
        assert nkw.sum() == n_tokens
        assert ndk.sum() == n_tokens
        assert np.array_equal(ndk.sum(axis=0), nkw.sum(axis=1))
        assert (nkw >= 0).all() and (ndk >= 0).all()

    fit_lda(docs, 4, 0.1, 0.01, LdaConfig(iterations=30, burn_in=10, sample_window=10, min_freq=1), on_sweep=check)
    assert seen == list(range(30))


def test_disjoint_groups_get_distinct_topics(disjoint_model):
    model, docs, owner, groups = disjoint_model
    theta = model.infer_batch(docs)
    dominant = theta.argmax(axis=1)
    assert (theta.max(axis=1) > 0.6).all()
    per_group = [set(dominant[owner == g]) for g in range(4)]
    assert all(len(s) == 1 for s in per_group)
    assert len(set().union(*per_group)) == 4


def test_top_terms_from_one_group(disjoint_model):
    model, _, _, groups = disjoint_model
    for k in range(4):
        top = lda_top_terms(model, k, 5)
        assert any(set(top) <= set(g) for g in groups)
    assert lda_top_terms(model, 0, 0) == []
    assert len(lda_top_terms(model, 0, 10_000)) == len(model.vocabulary)
    with pytest.raises(DataError):
        lda_top_terms(model, 4, 3)


def test_infer_fallbacks_and_determinism(disjoint_model):
    model, docs, _, _ = disjoint_model
    assert lda_infer(model, ["zzz", "qqq"]).tolist() == [0.25] * 4
    assert lda_infer(model, []).tolist() == [0.25] * 4
    assert np.array_equal(lda_infer(model, docs[0]), lda_infer(model, docs[0]))
    # position in the batch does not matter
    assert np.array_equal(model.infer_batch(docs[:3])[2], model.infer_batch([docs[2]])[0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([f"g{g}w{i}" for g in range(4) for i in range(8)] + ["oov"]), max_size=40))
def test_inferred_proportions_on_simplex(disjoint_model, doc):
    theta = lda_infer(disjoint_model[0], doc)
    assert theta.shape == (4,)
    assert abs(theta.sum() - 1) <= 1e-9
    assert (theta >= 0).all()


def test_empty_vocabulary_rejected():
    with pytest.raises(DataError, match="empty"):
        fit_lda([["a"], ["b"], ["c"], ["d"]], 4, config=LdaConfig(min_freq=2))


def test_celtic_topic_has_function_words(small_synthetic):
    docs = [word_ngrams(t) for t in small_synthetic.texts]
    model = fit_lda(docs, 4, 0.1, 0.01, LdaConfig(iterations=300, burn_in=150, sample_window=50))
    theta = model.infer_batch(docs)
    irish = small_synthetic.labels == int(Language.IRISH)
    topic = int(theta[irish].mean(axis=0).argmax())
    top = lda_top_terms(model, topic, 10)
    assert "agus" in top and "an" in top
