"""Cross-validation, metrics, chi-squared tests, information gain and ablation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from .corpus import Corpus, interaction_histogram
from .features import FeatureMatrix

__all__ = [
    "FoldPlan",
    "Metrics",
    "CVReport",
    "Chi2Result",
    "IGEntry",
    "FoldError",
    "stratified_kfold",
    "stratified_holdout",
    "holdout_evaluate",
    "confusion_and_metrics",
    "cross_validate",
    "regularized_upper_gamma",
    "chi2_sf",
    "chi2_test",
    "interaction_chi2",
    "entropy",
    "information_gain",
    "rank_features_ig",
    "ablate",
    "format_p",
    "take_rows",
]


class FoldError(RuntimeError):
    def __init__(self, fold: int, exc: Exception):
        super().__init__(f"fold {fold}: {exc}")
        self.fold = fold


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def split(self, X=None, y=None, groups=None):
        """Yield ``(train_idx, test_idx)`` per fold, scikit-learn splitter style."""
        for fold in range(self.k):
            test = np.flatnonzero(self.assignments == fold)
            train = np.flatnonzero(self.assignments != fold)
            yield train, test

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.k


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class with a seeded generator and deal rows to folds round-robin.

    Dealing continues across classes, so fold sizes also differ by at most one.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    assignments = np.full(labels.shape[0], -1, dtype=int)
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ValueError(f"class {cls!r} has {len(members)} members, fewer than k={k}")
        members = rng.permutation(members)
        assignments[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return FoldPlan(k, assignments, int(seed))


def stratified_holdout(labels, fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Set aside ``round(fraction * n_c)`` shuffled rows of every class.

    Returns sorted ``(kept_idx, holdout_idx)``. Each class keeps at least
    one row on both sides.
    """
    labels = np.asarray(labels)
    if not 0.0 < fraction < 1.0:
        raise ValueError("holdout fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    held = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise ValueError(f"class {cls!r} has {len(members)} member(s); a holdout needs 2")
        take = min(max(int(round(fraction * len(members))), 1), len(members) - 1)
        held.append(rng.permutation(members)[:take])
    mask = np.zeros(labels.shape[0], dtype=bool)
    mask[np.concatenate(held)] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1_positive: float
    f1_weighted: float
    confusion: tuple  # ((tn, fp), (fn, tp))
    precision_undefined: bool = False
    recall_undefined: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["confusion"] = [list(row) for row in self.confusion]
        return d


def _prf(tp, fp, fn):
    p_undef = tp + fp == 0
    r_undef = tp + fn == 0
    precision = 0.0 if p_undef else tp / (tp + fp)
    recall = 0.0 if r_undef else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1, p_undef, r_undef


def confusion_and_metrics(y_true, y_pred) -> Metrics:
    """Binary metrics; undefined precision or recall is reported as 0 and flagged."""
    t = np.asarray(y_true).astype(bool).reshape(-1)
    p = np.asarray(y_pred).astype(bool).reshape(-1)
    if t.shape != p.shape or t.size == 0:
        raise ValueError("y_true and y_pred must be non-empty and of equal length")
    tp = int(np.sum(t & p))
    tn = int(np.sum(~t & ~p))
    fp = int(np.sum(~t & p))
    fn = int(np.sum(t & ~p))
    n = t.size
    precision, recall, f1_pos, p_undef, r_undef = _prf(tp, fp, fn)
    _, _, f1_neg, _, _ = _prf(tn, fn, fp)
    n_pos = tp + fn
    f1_weighted = (n_pos * f1_pos + (n - n_pos) * f1_neg) / n
    return Metrics(
        accuracy=(tp + tn) / n,
        precision=precision,
        recall=recall,
        f1_positive=f1_pos,
        f1_weighted=f1_weighted,
        confusion=((tn, fp), (fn, tp)),
        precision_undefined=p_undef,
        recall_undefined=r_undef,
    )


_AVERAGED = ("accuracy", "precision", "recall", "f1_positive", "f1_weighted")


@dataclass
class CVReport:
    mean: dict
    folds: list
    k: int
    seed: int

    @property
    def accuracy(self) -> float:
        return self.mean["accuracy"]

    @property
    def f1(self) -> float:
        return self.mean["f1_positive"]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "mean": dict(self.mean),
            "folds": [m.to_dict() for m in self.folds],
        }


def take_rows(X, idx):
    """Index rows of a list, array, sparse matrix or FeatureMatrix."""
    if isinstance(X, FeatureMatrix):
        return X.values[idx]
    if sp.issparse(X) or isinstance(X, np.ndarray):
        return X[idx]
    return [X[i] for i in idx]


def cross_validate(estimator, X, y, plan: FoldPlan, preprocessing=None) -> CVReport:
    """Fit a fresh clone per fold on the training rows and score the held-out fold.

    ``preprocessing`` (a transformer or list of transformers) is prepended
    and refit on each fold's training rows, never on test rows.
    """
    y = np.asarray(y)
    if np.shape(y)[0] != plan.assignments.shape[0]:
        raise ValueError("labels and fold plan differ in length")
    steps = []
    if preprocessing is not None:
        steps = list(preprocessing) if isinstance(preprocessing, (list, tuple)) else [preprocessing]
    folds = []
    for fold, (train, test) in enumerate(plan.split()):
        model = make_pipeline(*[clone(s) for s in steps], clone(estimator)) if steps \
            else clone(estimator)
        try:
            model.fit(take_rows(X, train), y[train])
            pred = model.predict(take_rows(X, test))
        except Exception as exc:
            raise FoldError(fold, exc) from exc
        folds.append(confusion_and_metrics(y[test], pred))
    mean = {name: float(np.mean([getattr(m, name) for m in folds])) for name in _AVERAGED}
    return CVReport(mean=mean, folds=folds, k=plan.k, seed=plan.seed)


def holdout_evaluate(estimator, X, y, train, test, preprocessing=None) -> Metrics:
    """Fit on ``train`` rows once and score the untouched ``test`` rows."""
    y = np.asarray(y)
    steps = []
    if preprocessing is not None:
        steps = list(preprocessing) if isinstance(preprocessing, (list, tuple)) else [preprocessing]
    model = make_pipeline(*[clone(s) for s in steps], clone(estimator)) if steps \
        else clone(estimator)
    model.fit(take_rows(X, train), y[train])
    return confusion_and_metrics(y[test], model.predict(take_rows(X, test)))


def regularized_upper_gamma(a: float, x: float) -> float:
    """``Q(a, x) = Gamma(a, x) / Gamma(a)``.

    Power series for ``x < a + 1``, modified Lentz continued fraction otherwise.
    """
    if a <= 0:
        raise ValueError("a must be > 0")
    if x <= 0:
        return 1.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(10000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return max(0.0, 1.0 - total * math.exp(log_prefactor))
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return min(1.0, math.exp(log_prefactor) * h)


def chi2_sf(statistic: float, df: int) -> float:
    return regularized_upper_gamma(df / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    df: int
    p_value: float
    observed: tuple = ()
    expected: tuple = ()
    row_labels: tuple = ()
    col_labels: tuple = ()

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": format_p(self.p_value),
            "p_value_raw": self.p_value,
            "observed": [list(r) for r in self.observed],
            "expected": [list(r) for r in self.expected],
            "rows": list(self.row_labels),
            "columns": list(self.col_labels),
        }


def format_p(p: float):
    """p-values under 1e-12 become the string ``"<1e-12"``."""
    return "<1e-12" if p < 1e-12 else p


def chi2_test(observed, row_labels=(), col_labels=()) -> Chi2Result:
    """Pearson chi-squared test of independence on an r x c contingency table."""
    obs = np.asarray(observed, dtype=float)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 2:
        raise ValueError("contingency table must be at least 2 x 2")
    if np.any(obs < 0) or not np.all(np.isfinite(obs)):
        raise ValueError("counts must be finite and non-negative")
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise ValueError("contingency table has a zero row or column sum")
    total = obs.sum()
    expected = np.outer(rows, cols) / total
    stat = float(np.sum((obs - expected) ** 2 / expected))
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return Chi2Result(stat, df, chi2_sf(stat, df),
                      tuple(tuple(float(v) for v in r) for r in obs),
                      tuple(tuple(float(v) for v in r) for r in expected),
                      tuple(row_labels), tuple(col_labels))


def _pool_sparse_bins(table: np.ndarray, labels: list, min_expected=5.0):
    table = table.astype(float)
    labels = list(labels)
    while table.shape[1] > 2:
        rows, cols = table.sum(axis=1), table.sum(axis=0)
        expected = np.outer(rows, cols) / table.sum()
        low = [j for j in range(table.shape[1]) if expected[:, j].min() < min_expected]
        if not low:
            break
        j = low[-1]
        k = j - 1 if j > 0 else 1
        lo, hi = min(j, k), max(j, k)
        table[:, lo] += table[:, hi]
        start = labels[lo].split("-")[0]
        labels[lo] = f"{start}+" if labels[hi].endswith("+") else f"{start}-{labels[hi].split('-')[-1]}"
        table = np.delete(table, hi, axis=1)
        del labels[hi]
    return table, labels


def interaction_chi2(corpus: Corpus, kind: str, mode: str = "binary") -> Chi2Result:
    """Test whether hate and non-hate tweets differ in ``kind`` interactions.

    ``binary`` compares zero versus at least one interaction; ``histogram``
    uses the 0..4, 5+ bins, pooling sparse high bins until every expected
    count reaches 5.
    """
    non = interaction_histogram(corpus, kind, "non-hate").bins
    hate = interaction_histogram(corpus, kind, "hate").bins
    rows = ("non-hate", "hate")
    if mode == "binary":
        table = np.array([[non[0], sum(non[1:])], [hate[0], sum(hate[1:])]])
        return chi2_test(table, rows, ("0", "1+"))
    if mode == "histogram":
        table, labels = _pool_sparse_bins(np.array([non, hate]),
                                          ["0", "1", "2", "3", "4", "5+"])
        return chi2_test(table, rows, labels)
    raise ValueError(f"unknown chi-squared mode {mode!r}; expected 'binary' or 'histogram'")


def entropy(labels) -> float:
    """Shannon entropy in bits."""
    _, counts = np.unique(np.asarray(labels), return_counts=True)
    if counts.size == 0:
        return 0.0
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)))


def _discretize(column: np.ndarray, bins: int) -> np.ndarray:
    values = np.unique(column)
    if values.size <= bins:
        return np.searchsorted(values, column)
    edges = np.unique(np.quantile(column, np.linspace(0.0, 1.0, bins + 1)[1:-1]))
    return np.searchsorted(edges, column, side="right")


def information_gain(column, labels, bins: int = 10) -> float:
    """``H(Y) - H(Y | X)`` in bits.

    Columns with at most ``bins`` distinct values are used as they are;
    others are cut into equal-frequency bins, merging duplicated edges.
    """
    x = np.asarray(column, dtype=float).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if x.shape != y.shape:
        raise ValueError("column and labels differ in length")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if x.size == 0:
        return 0.0
    codes = _discretize(x, bins)
    h_y = entropy(y)
    cond = 0.0
    for code in np.unique(codes):
        mask = codes == code
        cond += mask.mean() * entropy(y[mask])
    return float(min(max(h_y - cond, 0.0), h_y))


@dataclass(frozen=True)
class IGEntry:
    feature: str
    ig: float


def rank_features_ig(matrix, labels, bins: int = 10, columns: Sequence[str] | None = None):
    """Information gain of every column, highest first, ties broken by name."""
    if isinstance(matrix, FeatureMatrix):
        names, values = matrix.column_names, matrix.values
    else:
        values = np.asarray(matrix, dtype=float)
        names = tuple(columns) if columns is not None else tuple(f"x{i}" for i in range(values.shape[1]))
    entries = [IGEntry(name, information_gain(values[:, j], labels, bins))
               for j, name in enumerate(names)]
    return sorted(entries, key=lambda e: (-e.ig, e.feature))


@dataclass
class AblationRow:
    unit: str
    removed: list
    accuracy: float
    f1: float
    delta_accuracy: float
    delta_f1: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AblationReport:
    unit: str
    full: CVReport
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"unit": self.unit, "full": self.full.to_dict()["mean"],
                "rows": [r.to_dict() for r in self.rows]}


def ablate(matrix: FeatureMatrix, y, plan: FoldPlan, estimator, unit: str = "group",
           preprocessing=None) -> AblationReport:
    """Retrain without each feature group (or each single feature) and report metric drops.

    Deltas are full-model minus ablated-model, so positive means the removed
    unit helped.
    """
    if unit == "group":
        units = list(matrix.groups().items())
    elif unit == "single":
        units = [(c, [c]) for c in matrix.column_names]
    else:
        raise ValueError(f"unknown ablation unit {unit!r}; expected 'group' or 'single'")
    if len(units) < 2:
        raise ValueError("ablation needs at least two units")
    full = cross_validate(estimator, matrix.values, y, plan, preprocessing)
    report = AblationReport(unit=unit, full=full)
    for name, cols in units:
        reduced = matrix.drop(cols)
        if not reduced.column_names:
            raise ValueError(f"removing {name!r} leaves no features")
        cv = cross_validate(estimator, reduced.values, y, plan, preprocessing)
        report.rows.append(AblationRow(
            unit=name, removed=list(cols), accuracy=cv.accuracy, f1=cv.f1,
            delta_accuracy=full.accuracy - cv.accuracy, delta_f1=full.f1 - cv.f1))
    return report
