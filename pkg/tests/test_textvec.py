from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hatepop.textvec import (
    CharNgramTfidfVectorizer,
    SparseVector,
    Standardizer,
    char_ngrams,
    standardize,
)


def test_char_ngrams_examples():
    assert char_ngrams("ab", 1, 2) == Counter({"a": 1, "b": 1, "ab": 1})
    assert char_ngrams("", 1, 4) == Counter()
    assert char_ngrams("aaa", 2, 2) == Counter({"aa": 2})
    # spaces are characters too; too-short text yields nothing of that length
    assert char_ngrams("a b", 3, 4) == Counter({"a b": 1})


def test_idf_hand_values():
    v = CharNgramTfidfVectorizer(ngram_min=1, ngram_max=1).fit(["aa", "ab"])
    assert v.vocabulary_ == {"a": 0, "b": 1}
    assert v.idf_[0] == 1.0
    assert v.idf_[1] == pytest.approx(math.log(1.5) + 1, abs=1e-12)
    assert v.idf_[1] == pytest.approx(1.405465, abs=1e-6)
    single = CharNgramTfidfVectorizer(ngram_max=1).fit(["x"])
    assert single.idf_.tolist() == [1.0]


def test_min_df_drops_rare_terms():
    v = CharNgramTfidfVectorizer(ngram_max=1, min_df=2).fit(["ab", "ac"])
    assert list(v.vocabulary_) == ["a"]


def test_transform_hand_values():
    v = CharNgramTfidfVectorizer(ngram_max=1).fit(["aa", "ab"])
    sv = v.transform_one("ab")
    norm = math.sqrt(1 + 1.405465 ** 2)
    assert norm == pytest.approx(1.72492, abs=1e-5)
    assert sv.indices == (0, 1)
    assert sv.weights[0] == pytest.approx(0.5798, abs=1e-4)
    assert sv.weights[1] == pytest.approx(0.8148, abs=1e-4)
    assert len(v.transform_one("")) == 0
    assert len(v.transform_one("zzz")) == 0


def test_sparse_output_matches_transform_one():
    docs = ["Hello there", "general kenobi", "hello"]
    v = CharNgramTfidfVectorizer().fit(docs)
    X = v.transform(docs + ["", "qqq"])
    assert X.shape == (5, len(v.vocabulary_))
    for i, d in enumerate(docs):
        sv = v.transform_one(d)
        assert X[i].indices.tolist() == list(sv.indices)
        np.testing.assert_allclose(X[i].data, sv.weights)
    assert X[3].nnz == 0 and X[4].nnz == 0


def test_lowercase_switch():
    assert "A" not in CharNgramTfidfVectorizer(ngram_max=1).fit(["Ab"]).vocabulary_
    assert "A" in CharNgramTfidfVectorizer(ngram_max=1, lowercase=False).fit(["Ab"]).vocabulary_


def test_sublinear_tf():
    v = CharNgramTfidfVectorizer(ngram_max=1, sublinear_tf=True).fit(["aab", "b"])
    sv = v.transform_one("aab").as_dict()
    idf_a = math.log(3 / 2) + 1
    raw = np.array([(1 + math.log(2)) * idf_a, 1.0])
    np.testing.assert_allclose([sv[0], sv[1]], raw / np.linalg.norm(raw))


def test_vectorizer_errors_and_params():
    with pytest.raises(ValueError):
        CharNgramTfidfVectorizer().fit([])
    with pytest.raises(ValueError):
        CharNgramTfidfVectorizer(ngram_min=3, ngram_max=2).fit(["abc"])
    with pytest.raises(NotFittedError):
        CharNgramTfidfVectorizer().transform(["a"])
    with pytest.raises(TypeError):
        CharNgramTfidfVectorizer().fit([1, 2])
    v = CharNgramTfidfVectorizer(ngram_max=3)
    assert clone(v).get_params()["ngram_max"] == 3


def test_all_empty_documents_give_empty_vocabulary():
    v = CharNgramTfidfVectorizer().fit(["", ""])
    assert v.vocabulary_ == {}
    assert v.transform(["abc"]).shape == (1, 0)


def test_vectorizer_roundtrip(tmp_path):
    v = CharNgramTfidfVectorizer(ngram_max=2).fit(["héllo wörld", "foo"])
    v.save(tmp_path / "v.json")
    w = CharNgramTfidfVectorizer.load(tmp_path / "v.json")
    assert w.get_params() == v.get_params()
    assert (w.transform(["hello"]) != v.transform(["hello"])).nnz == 0
    with pytest.raises(ValueError):
        CharNgramTfidfVectorizer.from_dict({"format": "other"})


def test_sparse_vector_validation():
    with pytest.raises(ValueError):
        SparseVector((1, 0), (1.0, 1.0))
    with pytest.raises(ValueError):
        SparseVector((0,), (0.0,))
    with pytest.raises(ValueError):
        SparseVector((0,), (float("nan"),))


def test_standardize_examples():
    scaled, mean, std = standardize(np.array([[1.0], [2.0], [3.0]]))
    np.testing.assert_allclose(scaled[:, 0], [-1.224745, 0, 1.224745], atol=1e-6)
    assert std[0] == pytest.approx(math.sqrt(2 / 3))
    c, _, std = standardize(np.array([[5.0], [5.0]]))
    assert c.tolist() == [[0.0], [0.0]] and std[0] == 0.0


def test_standardizer_column_mismatch():
    s = Standardizer().fit(np.ones((3, 2)))
    with pytest.raises(ValueError):
        s.transform(np.ones((3, 3)))
    with pytest.raises(ValueError):
        Standardizer().fit(np.array([[np.inf]]))


def test_standardizer_roundtrip():
    X = np.random.default_rng(0).normal(size=(20, 4))
    s = Standardizer().fit(X)
    t = Standardizer.from_dict(s.to_dict())
    np.testing.assert_array_equal(s.transform(X), t.transform(X))


# ---------------------------------------------------------------- properties

_docs = st.lists(st.text(alphabet="abcAB #!é", max_size=12), min_size=1, max_size=8)


@settings(max_examples=80, deadline=None)
@given(_docs)
def test_tfidf_properties(docs):
    v = CharNgramTfidfVectorizer().fit(docs)
    assert list(v.vocabulary_.values()) == list(range(len(v.vocabulary_)))
    assert list(v.vocabulary_) == sorted(v.vocabulary_)
    assert np.all(v.idf_ >= 1.0)
    X = v.transform(docs)
    assert np.all(X.data != 0) and np.all(np.isfinite(X.data))
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1))).ravel()
    for d, n in zip(docs, norms):
        if d:
            assert abs(n - 1) < 1e-9
        else:
            assert n == 0
    # idf non-increasing in df; df = N gives exactly 1
    df = Counter()
    for d in docs:
        df.update(char_ngrams(d.lower(), 1, 4).keys())
    order = sorted(v.vocabulary_, key=lambda t: df[t])
    idfs = [v.idf_[v.vocabulary_[t]] for t in order]
    assert all(a >= b for a, b in zip(idfs, idfs[1:]))
    for t, i in v.vocabulary_.items():
        if df[t] == len(docs):
            assert v.idf_[i] == 1.0


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardize_properties(X):
    s = Standardizer().fit(X)
    Z = s.transform(X)
    constant = np.all(X == X[0], axis=0)
    assert np.all(Z[:, constant] == 0)
    live = ~constant & (X.std(axis=0) > 1e-6)
    np.testing.assert_allclose(Z[:, live].mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(Z[:, live].std(axis=0), 1, atol=1e-9)
    # applying the same fitted stats to the standardized data again is idempotent
    if live.any():
        again = Standardizer().fit(Z[:, live]).transform(Z[:, live])
        np.testing.assert_allclose(again, Z[:, live], atol=1e-9)
