"""Character n-gram TF-IDF vectorisation and column standardisation."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

__all__ = [
    "char_ngrams",
    "SparseVector",
    "CharNgramTfidfVectorizer",
    "Standardizer",
    "standardize",
]

VECTORIZER_FORMAT = "hatepop.char-tfidf"
VECTORIZER_VERSION = 1


def char_ngrams(text: str, n_min: int = 1, n_max: int = 4) -> Counter:
    """Count every contiguous substring of length ``n_min`` to ``n_max``.

    Works on code points of ``text`` as given, whitespace and punctuation
    included.
    """
    counts: Counter = Counter()
    length = len(text)
    for n in range(n_min, n_max + 1):
        for i in range(length - n + 1):
            counts[text[i:i + n]] += 1
    return counts


@dataclass(frozen=True)
class SparseVector:
    indices: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(w == 0 or not math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite and nonzero")

    def __len__(self):
        return len(self.indices)

    def as_dict(self) -> dict:
        return dict(zip(self.indices, self.weights))

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))


class CharNgramTfidfVectorizer(TransformerMixin, BaseEstimator):
    """Character n-gram TF-IDF with smoothed idf and L2-normalised rows.

    ``idf(t) = ln((1 + N) / (1 + df(t))) + 1`` over the ``N`` fitted
    documents. Term frequencies are raw counts unless ``sublinear_tf``
    replaces them with ``1 + ln(tf)``.

    Parameters
    ----------
    ngram_min, ngram_max : int, default=1, 4
        Inclusive range of n-gram lengths.
    lowercase : bool, default=True
        Lowercase documents before extraction.
    min_df : int, default=1
        Drop n-grams occurring in fewer documents.
    sublinear_tf : bool, default=False

    Attributes
    ----------
    vocabulary_ : dict of str -> int
        Columns in lexicographic order of their n-gram.
    idf_ : ndarray of shape (n_features,)
    n_docs_ : int
    """

    def __init__(self, ngram_min=1, ngram_max=4, lowercase=True, min_df=1, sublinear_tf=False):
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self.lowercase = lowercase
        self.min_df = min_df
        self.sublinear_tf = sublinear_tf

    def _check_params(self):
        if int(self.ngram_min) < 1:
            raise ValueError("ngram_min must be >= 1")
        if int(self.ngram_max) < int(self.ngram_min):
            raise ValueError("ngram_max must be >= ngram_min")
        if int(self.min_df) < 1:
            raise ValueError("min_df must be >= 1")

    def _count(self, doc) -> Counter:
        if not isinstance(doc, str):
            raise TypeError(f"documents must be str, got {type(doc).__name__}")
        if self.lowercase:
            doc = doc.lower()
        return char_ngrams(doc, self.ngram_min, self.ngram_max)

    def fit(self, X, y=None):
        self._check_params()
        docs = list(X)
        if not docs:
            raise ValueError("cannot fit a vectorizer on zero documents")
        df: Counter = Counter()
        for doc in docs:
            df.update(self._count(doc).keys())
        terms = sorted(t for t, c in df.items() if c >= self.min_df)
        n = len(docs)
        self.vocabulary_ = {t: i for i, t in enumerate(terms)}
        counts = np.array([df[t] for t in terms], dtype=float)
        self.idf_ = np.log((1.0 + n) / (1.0 + counts)) + 1.0
        self.n_docs_ = n
        return self

    def _weights(self, doc) -> tuple[list, list]:
        vocab = self.vocabulary_
        pairs = sorted((vocab[t], c) for t, c in self._count(doc).items() if t in vocab)
        if not pairs:
            return [], []
        idx = [i for i, _ in pairs]
        tf = np.array([c for _, c in pairs], dtype=float)
        if self.sublinear_tf:
            tf = 1.0 + np.log(tf)
        w = tf * self.idf_[idx]
        w /= math.sqrt(float(w @ w))
        return idx, w.tolist()

    def transform(self, X):
        """Return a CSR matrix of shape ``(len(X), n_features)``."""
        check_is_fitted(self, "vocabulary_")
        indptr, indices, data = [0], [], []
        for doc in X:
            idx, w = self._weights(doc)
            indices.extend(idx)
            data.extend(w)
            indptr.append(len(indices))
        shape = (len(indptr) - 1, len(self.vocabulary_))
        return sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64),
                              np.asarray(indptr, dtype=np.int64)), shape=shape)

    def transform_one(self, doc: str) -> SparseVector:
        check_is_fitted(self, "vocabulary_")
        idx, w = self._weights(doc)
        return SparseVector(tuple(idx), tuple(w))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(sorted(self.vocabulary_, key=self.vocabulary_.get), dtype=object)

    def to_dict(self) -> dict:
        check_is_fitted(self, "vocabulary_")
        return {
            "format": VECTORIZER_FORMAT,
            "version": VECTORIZER_VERSION,
            "config": self.get_params(),
            "n_docs": self.n_docs_,
            "vocabulary": list(self.get_feature_names_out()),
            "idf": self.idf_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharNgramTfidfVectorizer":
        if d.get("format") != VECTORIZER_FORMAT:
            raise ValueError(f"not a vectorizer file (format={d.get('format')!r})")
        if d.get("version") != VECTORIZER_VERSION:
            raise ValueError(f"unsupported vectorizer version {d.get('version')!r}")
        vec = cls(**d["config"])
        vec.vocabulary_ = {t: i for i, t in enumerate(d["vocabulary"])}
        vec.idf_ = np.asarray(d["idf"], dtype=float)
        vec.n_docs_ = int(d["n_docs"])
        if len(vec.idf_) != len(vec.vocabulary_):
            raise ValueError("vocabulary and idf lengths differ")
        return vec

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CharNgramTfidfVectorizer":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class Standardizer(TransformerMixin, BaseEstimator):
    """Centre columns and divide by their population standard deviation.

    Constant columns keep a unit divisor, so they come out as zeros on the
    fitted rows.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    std_ : ndarray of shape (n_features,)
        Population std; zero for constant columns.
    scale_ : ndarray of shape (n_features,)
        Divisor actually applied.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_all_finite=True)
        self.mean_ = X.mean(axis=0)
        self.std_ = X.std(axis=0)
        # float noise in std of a constant column is not zero
        constant = np.all(X == X[0], axis=0)
        self.std_[constant] = 0.0
        # and the float mean of a constant column need not equal its value
        self.mean_[constant] = X[0, constant]
        self.scale_ = np.where(constant | (self.std_ == 0), 1.0, self.std_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float, ensure_all_finite=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return (X - self.mean_) / self.scale_

    def to_dict(self) -> dict:
        check_is_fitted(self, "mean_")
        return {"mean": self.mean_.tolist(), "std": self.std_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        s = cls()
        s.mean_ = np.asarray(d["mean"], dtype=float)
        s.std_ = np.asarray(d["std"], dtype=float)
        s.scale_ = np.where(s.std_ == 0, 1.0, s.std_)
        s.n_features_in_ = len(s.mean_)
        return s


def standardize(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(scaled, mean, std)`` for a dense matrix."""
    scaler = Standardizer().fit(X)
    return scaler.transform(X), scaler.mean_, scaler.std_
