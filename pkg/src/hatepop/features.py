"""Tweet, user and content features for popularity prediction."""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass
from datetime import timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import HATE_LABELS, Corpus, TweetRecord, UserRecord

__all__ = [
    "TWEET_FEATURES",
    "USER_FEATURES",
    "CONTENT_FEATURES",
    "GROUPS",
    "LexiconSet",
    "FeatureMatrix",
    "extract_tweet_features",
    "extract_user_features",
    "extract_content_features",
    "build_matrix",
    "targets",
    "training_columns",
    "read_feature_csv",
]

TWEET_FEATURES = (
    "tweet_age", "tweet_hour", "is_quote_status", "is_reply",
    "is_reply_to_hate_tweet", "num_replies",
)
USER_FEATURES = (
    "account_age", "len_handle", "len_name", "num_followers", "num_followees",
    "num_times_user_was_listed", "num_posted_tweets", "num_favorited_tweets",
)
CONTENT_FEATURES = (
    "is_hate_tweet", "has_mentions", "num_mentions", "has_hashtags", "num_hashtags",
    "has_urls", "num_urls", "char_count", "token_count", "has_digits",
    "has_questionmark", "has_exclamationpoint", "has_fullstop",
    "has_uppercase_token", "uppercase_token_ratio", "lowercase_token_ratio",
    "mixedcase_token_ratio", "blacklist_total", "blacklist_ratio",
    "total_negative_tokens", "negative_token_ratio", "total_positive_tokens",
    "positive_token_ratio", "total_subjective_tokens", "subjective_token_ratio",
)
GROUPS = {"Tweet": TWEET_FEATURES, "User": USER_FEATURES, "Content": CONTENT_FEATURES}
ID_COLUMN = "user_id"

TARGET_KINDS = ("liked", "retweeted", "replied")
_LEXICON_NAMES = ("blacklist", "positive", "negative", "subjective")


def _read_lexicon(lines: Iterable[str]) -> frozenset:
    tokens = set()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if len(line.split()) != 1:
            raise ValueError(f"lexicon entry contains whitespace: {line!r}")
        tokens.add(line.lower())
    return frozenset(tokens)


@dataclass(frozen=True)
class LexiconSet:
    blacklist: frozenset = frozenset()
    positive: frozenset = frozenset()
    negative: frozenset = frozenset()
    subjective: frozenset = frozenset()

    @classmethod
    def from_dir(cls, path) -> "LexiconSet":
        """Load ``blacklist.txt``, ``positive.txt``, ``negative.txt``, ``subjective.txt``.

        Missing files give empty lexicons.
        """
        path = Path(path)
        kwargs = {}
        for name in _LEXICON_NAMES:
            f = path / f"{name}.txt"
            if f.exists():
                kwargs[name] = _read_lexicon(f.read_text(encoding="utf-8").splitlines())
        return cls(**kwargs)

    @classmethod
    def default(cls) -> "LexiconSet":
        base = resources.files("hatepop") / "data" / "lexicons"
        return cls(**{name: _read_lexicon((base / f"{name}.txt").read_text(encoding="utf-8")
                                          .splitlines())
                      for name in _LEXICON_NAMES})


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense feature rows with named, grouped columns.

    ``row_ids`` holds the tweet id of each row.
    """

    column_names: tuple
    values: np.ndarray
    group_of: Mapping[str, str]
    row_ids: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size == 0:
            values = values.reshape(values.shape[0] if values.ndim == 2 else 0,
                                    len(self.column_names))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError("duplicate column names")
        if values.shape[1] != len(self.column_names):
            raise ValueError("column count does not match values")
        if self.row_ids and len(self.row_ids) != values.shape[0]:
            raise ValueError("row_ids do not match row count")

    @property
    def shape(self):
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_names.index(name)]

    def select(self, columns: Sequence[str]) -> "FeatureMatrix":
        idx = [self.column_names.index(c) for c in columns]
        return FeatureMatrix(tuple(columns), self.values[:, idx],
                             {c: self.group_of[c] for c in columns}, self.row_ids)

    def drop(self, columns: Iterable[str]) -> "FeatureMatrix":
        gone = set(columns)
        return self.select([c for c in self.column_names if c not in gone])

    def rows(self, mask_or_idx) -> "FeatureMatrix":
        idx = np.flatnonzero(mask_or_idx) if np.asarray(mask_or_idx).dtype == bool \
            else np.asarray(mask_or_idx, dtype=int)
        ids = tuple(self.row_ids[i] for i in idx) if self.row_ids else ()
        return FeatureMatrix(self.column_names, self.values[idx], self.group_of, ids)

    def groups(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for c in self.column_names:
            out.setdefault(self.group_of[c], []).append(c)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", *self.column_names])
            ids = self.row_ids or tuple(str(i) for i in range(self.shape[0]))
            for rid, row in zip(ids, self.values):
                w.writerow([rid, *(_fmt(v) for v in row)])

    def to_dict(self) -> dict:
        return {
            "columns": list(self.column_names),
            "groups": {c: self.group_of[c] for c in self.column_names},
            "ids": list(self.row_ids),
            "rows": [[_num(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMatrix":
        cols = d["columns"]
        return cls(tuple(cols), np.asarray(d["rows"], dtype=float).reshape(len(d["rows"]), len(cols)),
                   d["groups"], tuple(d.get("ids", ())))


def _num(v: float):
    return int(v) if float(v).is_integer() else float(v)


def _fmt(v: float) -> str:
    return repr(_num(v))


def read_feature_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Return ``(ids, column_names, values)`` from a feature CSV with an ``id`` column."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if "id" not in header:
            raise ValueError(f"{path}: no 'id' column")
        id_pos = header.index("id")
        names = [h for i, h in enumerate(header) if i != id_pos]
        ids, rows = [], []
        for line in reader:
            if not line:
                continue
            ids.append(line[id_pos])
            rows.append([float(v) for i, v in enumerate(line) if i != id_pos])
    values = np.asarray(rows, dtype=float).reshape(len(rows), len(names))
    return ids, names, values


def extract_tweet_features(tweet: TweetRecord, corpus: Corpus) -> dict[str, float]:
    age = (corpus.reference_time - tweet.created_at).total_seconds() / 3600.0
    parent = corpus.by_id.get(tweet.in_reply_to) if tweet.in_reply_to is not None else None
    return {
        "tweet_age": age,
        "tweet_hour": float(tweet.created_at.astimezone(timezone.utc).hour),
        "is_quote_status": float(tweet.is_quote_status),
        "is_reply": float(tweet.in_reply_to is not None),
        "is_reply_to_hate_tweet": float(parent is not None and parent.is_hate),
        "num_replies": float(corpus.replies_to(tweet)),
    }


def extract_user_features(user: UserRecord, reference_time) -> dict[str, float]:
    return {
        "account_age": (reference_time - user.account_created_at).total_seconds() / 86400.0,
        "len_handle": float(len(user.handle)),
        "len_name": float(len(user.display_name)),
        "num_followers": float(user.follower_count),
        "num_followees": float(user.followee_count),
        "num_times_user_was_listed": float(user.listed_count),
        "num_posted_tweets": float(user.statuses_count),
        "num_favorited_tweets": float(user.favourites_count),
    }


def _case_class(token: str) -> str | None:
    letters = [ch for ch in token if ch.isalpha()]
    if not letters:
        return None
    if len(letters) >= 2 and all(ch.isupper() for ch in letters):
        return "upper"
    if all(ch.islower() for ch in letters):
        return "lower"
    return "mixed"


def _lexicon_key(token: str) -> str:
    token = token.lower().lstrip("@#")
    end = len(token)
    while end and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[:end]


def extract_content_features(tweet: TweetRecord, lexicons: LexiconSet) -> dict[str, float]:
    """Surface, case and lexicon features of the raw tweet text.

    Tokens are whitespace-separated. Uppercase tokens need at least two
    letters, all uppercase; lowercase tokens have only lowercase letters;
    any other token with letters is mixed-case, including a lone ``I``.
    Case is judged on letters only, so ``#mkr`` is lowercase.
    """
    text = tweet.text
    tokens = text.split()
    n = len(tokens)
    mentions = sum(tok.startswith("@") for tok in tokens)
    hashtags = sum(tok.startswith("#") for tok in tokens)
    urls = sum(tok.startswith(("http://", "https://")) for tok in tokens)
    cases = [_case_class(tok) for tok in tokens]
    upper, lower, mixed = cases.count("upper"), cases.count("lower"), cases.count("mixed")
    keys = [_lexicon_key(tok) for tok in tokens]

    def ratio(count):
        return count / n if n else 0.0

    black = sum(k in lexicons.blacklist for k in keys)
    neg = sum(k in lexicons.negative for k in keys)
    pos = sum(k in lexicons.positive for k in keys)
    subj = sum(k in lexicons.subjective for k in keys)
    return {
        "is_hate_tweet": float(bool(tweet.labels & HATE_LABELS)),
        "has_mentions": float(mentions > 0),
        "num_mentions": float(mentions),
        "has_hashtags": float(hashtags > 0),
        "num_hashtags": float(hashtags),
        "has_urls": float(urls > 0),
        "num_urls": float(urls),
        "char_count": float(len(text)),
        "token_count": float(n),
        "has_digits": float(any(ch.isdigit() for ch in text)),
        "has_questionmark": float("?" in text),
        "has_exclamationpoint": float("!" in text),
        "has_fullstop": float("." in text),
        "has_uppercase_token": float(upper > 0),
        "uppercase_token_ratio": ratio(upper),
        "lowercase_token_ratio": ratio(lower),
        "mixedcase_token_ratio": ratio(mixed),
        "blacklist_total": float(black),
        "blacklist_ratio": ratio(black),
        "total_negative_tokens": float(neg),
        "negative_token_ratio": ratio(neg),
        "total_positive_tokens": float(pos),
        "positive_token_ratio": ratio(pos),
        "total_subjective_tokens": float(subj),
        "subjective_token_ratio": ratio(subj),
    }


def build_matrix(corpus: Corpus, lexicons: LexiconSet | None = None,
                 include_groups: Iterable[str] | None = None,
                 include_user_id: bool = False) -> FeatureMatrix:
    """Feature rows in corpus tweet order for the requested groups.

    ``include_user_id`` appends the author id as a numeric ``Meta`` column,
    meant for information-gain tables only. Non-numeric ids are replaced by
    their rank among the sorted distinct ids.
    """
    lexicons = lexicons if lexicons is not None else LexiconSet()
    groups = list(GROUPS) if include_groups is None else list(include_groups)
    unknown = [g for g in groups if g not in GROUPS]
    if unknown:
        raise ValueError(f"unknown feature group(s) {unknown}; expected a subset of {list(GROUPS)}")
    wanted = set(groups)
    columns = [c for g in GROUPS if g in wanted for c in GROUPS[g]]
    group_of = {c: g for g in GROUPS if g in wanted for c in GROUPS[g]}
    rows = []
    for tweet in corpus.tweets:
        feats: dict[str, float] = {}
        if "Tweet" in wanted:
            feats.update(extract_tweet_features(tweet, corpus))
        if "User" in wanted:
            feats.update(extract_user_features(corpus.users[tweet.author_id], corpus.reference_time))
        if "Content" in wanted:
            feats.update(extract_content_features(tweet, lexicons))
        rows.append([feats[c] for c in columns])
    values = np.asarray(rows, dtype=float).reshape(len(rows), len(columns))
    if include_user_id:
        authors = [t.author_id for t in corpus.tweets]
        try:
            ids = np.asarray([float(int(a)) for a in authors])
        except ValueError:
            rank = {a: i for i, a in enumerate(sorted(set(authors)))}
            ids = np.asarray([float(rank[a]) for a in authors])
        values = np.column_stack([values, ids]) if len(rows) else np.zeros((0, len(columns) + 1))
        columns.append(ID_COLUMN)
        group_of[ID_COLUMN] = "Meta"
    return FeatureMatrix(tuple(columns), values, group_of, tuple(t.tweet_id for t in corpus.tweets))


def targets(corpus: Corpus, kind: str, raw_replies: bool = False) -> np.ndarray:
    """Boolean "received at least one interaction" vector in corpus order.

    ``raw_replies`` makes the replied target use the dump's own ``reply_count``
    instead of the in-corpus join; every tweet must then carry one.
    """
    if kind == "replied" and raw_replies:
        missing = [t.tweet_id for t in corpus.tweets if t.raw_reply_count is None]
        if missing:
            raise ValueError(f"raw reply counts requested but {len(missing)} tweet(s) lack "
                             f"reply_count (first: {missing[0]})")
        counts = [t.raw_reply_count for t in corpus.tweets]
    elif kind == "liked":
        counts = [t.like_count for t in corpus.tweets]
    elif kind == "retweeted":
        counts = [t.retweet_count for t in corpus.tweets]
    elif kind == "replied":
        counts = [corpus.replies_to(t) for t in corpus.tweets]
    elif kind == "hate":
        return np.array([t.is_hate for t in corpus.tweets], dtype=bool)
    else:
        raise ValueError(f"unknown target {kind!r}; expected one of {TARGET_KINDS + ('hate',)}")
    return np.asarray(counts, dtype=int).reshape(-1) >= 1


def training_columns(matrix: FeatureMatrix, target: str) -> list[str]:
    """Columns a model may train on for ``target``.

    The id column never qualifies; ``num_replies`` is the replied target
    itself and ``is_hate_tweet`` the hate target itself.
    """
    banned = {ID_COLUMN}
    if target == "replied":
        banned.add("num_replies")
    if target == "hate":
        banned.add("is_hate_tweet")
    return [c for c in matrix.column_names if c not in banned]
