"""Hate speech detection, tweet popularity prediction and corpus bias diagnostics."""

from .corpus import Corpus, Label, TweetRecord, UserRecord, load_annotations, load_corpus
from .evaluation import (
    chi2_test,
    confusion_and_metrics,
    cross_validate,
    information_gain,
    rank_features_ig,
    stratified_kfold,
)
from .features import FeatureMatrix, LexiconSet, build_matrix, targets
from .models import ConstantClassifier, LinearSVM, LogisticRegression
from .synth import SynthSpec, synth_corpus
from .textvec import CharNgramTfidfVectorizer, Standardizer

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Label",
    "TweetRecord",
    "UserRecord",
    "load_annotations",
    "load_corpus",
    "chi2_test",
    "confusion_and_metrics",
    "cross_validate",
    "information_gain",
    "rank_features_ig",
    "stratified_kfold",
    "FeatureMatrix",
    "LexiconSet",
    "build_matrix",
    "targets",
    "ConstantClassifier",
    "LinearSVM",
    "LogisticRegression",
    "SynthSpec",
    "synth_corpus",
    "CharNgramTfidfVectorizer",
    "Standardizer",
]
