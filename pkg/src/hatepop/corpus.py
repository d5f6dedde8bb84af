"""Annotated tweet corpora: loading, joining and descriptive statistics."""

from __future__ import annotations

import enum
import html
import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Label",
    "HATE_LABELS",
    "TweetRecord",
    "UserRecord",
    "Corpus",
    "InteractionHistogram",
    "RecordError",
    "AnnotationParseError",
    "AnnotationConflictError",
    "CorpusError",
    "load_annotations",
    "load_corpus",
    "label_distribution",
    "availability_deltas",
    "interaction_histogram",
    "classify_users",
    "user_production_histogram",
    "token_share",
    "select_tweets",
    "parse_timestamp",
]

INTERACTION_KINDS = ("likes", "retweets", "replies")
SUBSETS = ("all", "hate", "non-hate", "racism", "sexism")
HISTOGRAM_BINS = ("0", "1", "2", "3", "4", "5+")


class Label(enum.Enum):
    NONE = "none"
    RACISM = "racism"
    SEXISM = "sexism"

    @classmethod
    def parse(cls, text: str) -> "Label":
        return cls(text.strip().lower())


HATE_LABELS = frozenset({Label.RACISM, Label.SEXISM})


class AnnotationParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class AnnotationConflictError(ValueError):
    pass


class CorpusError(RuntimeError):
    pass


@dataclass(frozen=True)
class RecordError:
    tweet_id: str | None
    lineno: int
    message: str


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    handle: str
    display_name: str
    account_created_at: datetime
    follower_count: int = 0
    followee_count: int = 0
    listed_count: int = 0
    statuses_count: int = 0
    favourites_count: int = 0

    def __post_init__(self):
        for name in ("follower_count", "followee_count", "listed_count",
                     "statuses_count", "favourites_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"user {self.user_id}: negative {name}")


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    text: str
    labels: frozenset
    created_at: datetime
    author_id: str
    like_count: int = 0
    retweet_count: int = 0
    in_reply_to: str | None = None
    is_quote_status: bool = False
    # platform-wide reply count when the dump carries one; not the in-corpus join
    raw_reply_count: int | None = None

    def __post_init__(self):
        if not self.labels:
            raise ValueError(f"tweet {self.tweet_id}: empty label set")
        if Label.NONE in self.labels and self.labels & HATE_LABELS:
            raise ValueError(f"tweet {self.tweet_id}: 'none' combined with a hate label")
        if self.like_count < 0 or self.retweet_count < 0 or (self.raw_reply_count or 0) < 0:
            raise ValueError(f"tweet {self.tweet_id}: negative interaction count")

    @property
    def is_hate(self) -> bool:
        return bool(self.labels & HATE_LABELS)


@dataclass(frozen=True)
class Corpus:
    """An immutable, joined view of annotated tweets and their authors.

    ``unavailable`` lists annotated ids that could not be loaded, in
    annotation order; ``record_errors`` explains the ones that were present
    in the input but malformed.
    """

    tweets: tuple
    users: Mapping[str, UserRecord]
    reference_time: datetime
    unavailable: tuple = ()
    unavailable_labels: Mapping[str, frozenset] = field(default_factory=dict)
    record_errors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tweets", tuple(self.tweets))
        object.__setattr__(self, "users", MappingProxyType(dict(self.users)))
        object.__setattr__(self, "unavailable_labels",
                           MappingProxyType(dict(self.unavailable_labels)))
        seen = set()
        for tweet in self.tweets:
            if tweet.tweet_id in seen:
                raise ValueError(f"duplicate tweet id {tweet.tweet_id}")
            seen.add(tweet.tweet_id)
            if tweet.author_id not in self.users:
                raise ValueError(f"tweet {tweet.tweet_id}: unknown author {tweet.author_id}")

    def __len__(self) -> int:
        return len(self.tweets)

    @cached_property
    def by_id(self) -> Mapping[str, TweetRecord]:
        return MappingProxyType({t.tweet_id: t for t in self.tweets})

    @cached_property
    def reply_counts(self) -> Mapping[str, int]:
        """Number of corpus tweets replying to each corpus tweet."""
        ids = self.by_id
        counts = Counter(t.in_reply_to for t in self.tweets
                         if t.in_reply_to is not None and t.in_reply_to in ids)
        return MappingProxyType(dict(counts))

    def replies_to(self, tweet: TweetRecord) -> int:
        return self.reply_counts.get(tweet.tweet_id, 0)


def parse_timestamp(value) -> datetime:
    """Parse ISO-8601 or the classic ``Wed Aug 27 13:08:45 +0000 2008`` form, as UTC."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)):
        dt = datetime.fromtimestamp(value, tz=timezone.utc)
    else:
        text = str(value).strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            dt = datetime.strptime(text, "%a %b %d %H:%M:%S %z %Y")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def load_annotations(path) -> dict[str, frozenset]:
    """Read ``tweet_id<TAB>label`` lines into a mapping of label sets.

    Repeated ids merge their labels. Blank lines and ``#`` comments are
    skipped; any whitespace is accepted as the separator.
    """
    merged: dict[str, set] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 2 or not parts[0].strip():
                raise AnnotationParseError(lineno, f"expected 'tweet_id<TAB>label', got {line!r}")
            tweet_id, label_text = parts[0].strip(), parts[1].strip()
            try:
                label = Label.parse(label_text)
            except ValueError:
                raise AnnotationParseError(lineno, f"unknown label {label_text!r}") from None
            merged.setdefault(tweet_id, set()).add(label)
    for tweet_id, labels in merged.items():
        if Label.NONE in labels and labels & HATE_LABELS:
            raise AnnotationConflictError(f"tweet {tweet_id}: 'none' together with a hate label")
    return {k: frozenset(v) for k, v in merged.items()}


_TWEET_FIELDS = ("id", "text", "created_at", "favorite_count", "retweet_count",
                 "in_reply_to_status_id", "is_quote_status", "user")
_USER_FIELDS = ("id", "screen_name", "name", "created_at", "followers_count",
                "friends_count", "listed_count", "statuses_count", "favourites_count")


def _opaque_id(value) -> str | None:
    if value is None:
        return None
    return str(value)


def _parse_user(obj: dict) -> UserRecord:
    missing = [f for f in _USER_FIELDS if f not in obj]
    if missing:
        raise ValueError(f"user object missing {', '.join(missing)}")
    return UserRecord(
        user_id=_opaque_id(obj.get("id_str", obj["id"])),
        handle=str(obj["screen_name"]),
        display_name=str(obj["name"] or ""),
        account_created_at=parse_timestamp(obj["created_at"]),
        follower_count=int(obj["followers_count"]),
        followee_count=int(obj["friends_count"]),
        listed_count=int(obj["listed_count"]),
        statuses_count=int(obj["statuses_count"]),
        favourites_count=int(obj["favourites_count"]),
    )


def _parse_tweet(obj: dict, labels: frozenset) -> tuple[TweetRecord, UserRecord]:
    missing = [f for f in _TWEET_FIELDS if f not in obj]
    if missing:
        raise ValueError(f"missing field(s) {', '.join(missing)}")
    if not isinstance(obj["user"], dict):
        raise ValueError("'user' is not an object")
    user = _parse_user(obj["user"])
    text = obj.get("full_text") or obj["text"] or ""
    reply_to = obj.get("in_reply_to_status_id_str", obj["in_reply_to_status_id"])
    raw_replies = obj.get("reply_count")
    tweet = TweetRecord(
        tweet_id=_opaque_id(obj.get("id_str", obj["id"])),
        text=str(text),
        labels=labels,
        created_at=parse_timestamp(obj["created_at"]),
        author_id=user.user_id,
        like_count=int(obj["favorite_count"]),
        retweet_count=int(obj["retweet_count"]),
        in_reply_to=_opaque_id(reply_to),
        is_quote_status=bool(obj["is_quote_status"]),
        raw_reply_count=None if raw_replies is None else int(raw_replies),
    )
    return tweet, user


def load_corpus(annotations: Mapping[str, frozenset], tweets_path,
                reference_time=None) -> Corpus:
    """Join annotations with a JSON Lines dump of hydrated tweets.

    Tweets absent from ``annotations`` are ignored. Malformed records are
    skipped and recorded in ``Corpus.record_errors``; their ids count as
    unavailable. The first record wins for duplicated tweet ids, and the
    first occurrence of a user fixes that user's metadata.
    """
    tweets: list[TweetRecord] = []
    users: dict[str, UserRecord] = {}
    errors: list[RecordError] = []
    loaded: set[str] = set()
    with open(tweets_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                errors.append(RecordError(None, lineno, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict) or "id" not in obj and "id_str" not in obj:
                errors.append(RecordError(None, lineno, "record without an id"))
                continue
            tweet_id = _opaque_id(obj.get("id_str", obj.get("id")))
            if tweet_id not in annotations:
                continue
            if tweet_id in loaded:
                errors.append(RecordError(tweet_id, lineno, "duplicate tweet id, kept first"))
                continue
            try:
                tweet, user = _parse_tweet(obj, annotations[tweet_id])
            except (ValueError, TypeError, KeyError) as exc:
                errors.append(RecordError(tweet_id, lineno, str(exc)))
                continue
            loaded.add(tweet_id)
            tweets.append(tweet)
            users.setdefault(user.user_id, user)
    if not tweets:
        raise CorpusError(f"no annotated tweets could be loaded from {tweets_path}")
    unavailable = tuple(tid for tid in annotations if tid not in loaded)
    if reference_time is None:
        ref = max(t.created_at for t in tweets)
    else:
        ref = parse_timestamp(reference_time)
    return Corpus(
        tweets=tuple(tweets),
        users=users,
        reference_time=ref,
        unavailable=unavailable,
        unavailable_labels={tid: annotations[tid] for tid in unavailable},
        record_errors=tuple(errors),
    )


def _count_labels(label_sets: Iterable[frozenset]) -> dict[str, int]:
    counts = {"None": 0, "Hate": 0, "Racism": 0, "Sexism": 0, "Total": 0}
    for labels in label_sets:
        counts["Total"] += 1
        if labels & HATE_LABELS:
            counts["Hate"] += 1
        else:
            counts["None"] += 1
        counts["Racism"] += Label.RACISM in labels
        counts["Sexism"] += Label.SEXISM in labels
    return counts


def label_distribution(corpus: Corpus) -> dict[str, int]:
    """Per-label tweet counts.

    A tweet carrying both hate labels counts once towards ``Hate`` and once
    towards each of ``Racism`` and ``Sexism``.
    """
    if not corpus.tweets:
        raise ValueError("label distribution of an empty corpus")
    return _count_labels(t.labels for t in corpus.tweets)


def availability_deltas(available: Mapping[str, int],
                        reference: Mapping[str, int]) -> dict[str, dict]:
    """Compare available label counts with reference (originally published) counts."""
    rows = {}
    for key in ("None", "Hate", "Racism", "Sexism", "Total"):
        if key not in reference:
            continue
        ref = int(reference[key])
        got = int(available.get(key, 0))
        deleted = ref - got
        rows[key] = {
            "original": ref,
            "available": got,
            "deleted": deleted,
            "percent": round(100.0 * deleted / ref, 2) if ref else 0.0,
        }
    return rows


def select_tweets(corpus: Corpus, subset: str) -> list[TweetRecord]:
    if subset == "all":
        return list(corpus.tweets)
    if subset == "hate":
        return [t for t in corpus.tweets if t.is_hate]
    if subset == "non-hate":
        return [t for t in corpus.tweets if not t.is_hate]
    if subset == "racism":
        return [t for t in corpus.tweets if Label.RACISM in t.labels]
    if subset == "sexism":
        return [t for t in corpus.tweets if Label.SEXISM in t.labels]
    raise ValueError(f"unknown subset {subset!r}; expected one of {SUBSETS}")


@dataclass(frozen=True)
class InteractionHistogram:
    kind: str
    subset: str
    bins: tuple
    full: Mapping[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.bins)


def interaction_count(corpus: Corpus, tweet: TweetRecord, kind: str) -> int:
    if kind == "likes":
        return tweet.like_count
    if kind == "retweets":
        return tweet.retweet_count
    if kind == "replies":
        return corpus.replies_to(tweet)
    raise ValueError(f"unknown interaction kind {kind!r}; expected one of {INTERACTION_KINDS}")


def interaction_histogram(corpus: Corpus, kind: str, subset: str = "all") -> InteractionHistogram:
    """Bin interaction counts into 0, 1, 2, 3, 4 and 5+.

    Replies are counted within the corpus only, by joining ``in_reply_to``.
    """
    if kind not in INTERACTION_KINDS:
        raise ValueError(f"unknown interaction kind {kind!r}; expected one of {INTERACTION_KINDS}")
    full = Counter(interaction_count(corpus, t, kind) for t in select_tweets(corpus, subset))
    bins = [0] * 6
    for value, n in full.items():
        bins[min(value, 5)] += n
    return InteractionHistogram(kind, subset, tuple(bins), dict(sorted(full.items())))


def _hate_counts_by_user(corpus: Corpus) -> tuple[Counter, Counter]:
    racism, sexism = Counter(), Counter()
    for tweet in corpus.tweets:
        if Label.RACISM in tweet.labels:
            racism[tweet.author_id] += 1
        if Label.SEXISM in tweet.labels:
            sexism[tweet.author_id] += 1
    return racism, sexism


def classify_users(corpus: Corpus) -> dict[str, int]:
    """Split authors into non-hate users and racist/sexist/both hate users."""
    racism, sexism = _hate_counts_by_user(corpus)
    authors = {t.author_id for t in corpus.tweets}
    out = {"Non-hate": 0, "Hate": 0, "Racist": 0, "Sexist": 0,
           "Racist-and-sexist": 0, "Total": len(authors)}
    for user_id in authors:
        r, s = racism[user_id] > 0, sexism[user_id] > 0
        if r and s:
            out["Racist-and-sexist"] += 1
        elif r:
            out["Racist"] += 1
        elif s:
            out["Sexist"] += 1
        else:
            out["Non-hate"] += 1
    out["Hate"] = out["Racist"] + out["Sexist"] + out["Racist-and-sexist"]
    return out


def user_production_histogram(corpus: Corpus) -> list[tuple[str, int]]:
    """Hate tweets per author, largest producers first (ties by user id)."""
    counts = Counter(t.author_id for t in corpus.tweets if t.is_hate)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def _strip_trailing_punct(token: str) -> str:
    end = len(token)
    while end and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[:end]


def token_share(corpus: Corpus, subset: str, patterns, case_sensitive: bool = True,
                strip_punctuation: bool = False) -> float:
    """Fraction of tweets in ``subset`` containing any of ``patterns`` as a whole token.

    Tokens are whitespace-delimited. ``strip_punctuation`` drops trailing
    punctuation from tokens first, so ``#MKR!`` matches ``#MKR``.
    """
    if isinstance(patterns, str):
        patterns = [patterns]
    wanted = set(patterns) if case_sensitive else {p.casefold() for p in patterns}
    tweets = select_tweets(corpus, subset)
    if not tweets:
        return 0.0
    hits = 0
    for tweet in tweets:
        tokens = tweet.text.split()
        if strip_punctuation:
            tokens = [_strip_trailing_punct(tok) for tok in tokens]
        if not case_sensitive:
            tokens = [tok.casefold() for tok in tokens]
        if wanted.intersection(tokens):
            hits += 1
    return hits / len(tweets)


def corpus_to_records(corpus: Corpus) -> list[dict]:
    """Serialise tweets back into the hydrated-tweet JSON Lines schema."""
    records = []
    for tweet in corpus.tweets:
        user = corpus.users[tweet.author_id]
        records.append({
            "id": tweet.tweet_id,
            "text": tweet.text,
            "created_at": tweet.created_at.isoformat().replace("+00:00", "Z"),
            "favorite_count": tweet.like_count,
            "retweet_count": tweet.retweet_count,
            "in_reply_to_status_id": tweet.in_reply_to,
            "is_quote_status": tweet.is_quote_status,
            **({} if tweet.raw_reply_count is None else {"reply_count": tweet.raw_reply_count}),
            "user": {
                "id": user.user_id,
                "screen_name": user.handle,
                "name": user.display_name,
                "created_at": user.account_created_at.isoformat().replace("+00:00", "Z"),
                "followers_count": user.follower_count,
                "friends_count": user.followee_count,
                "listed_count": user.listed_count,
                "statuses_count": user.statuses_count,
                "favourites_count": user.favourites_count,
            },
        })
    return records


def write_corpus(corpus: Corpus, annotations_path, tweets_path,
                 extra_annotations: Mapping[str, frozenset] | None = None) -> None:
    """Write an annotation file and a JSON Lines tweet dump that reload to ``corpus``."""
    order = [Label.NONE, Label.RACISM, Label.SEXISM]
    with open(annotations_path, "w", encoding="utf-8", newline="\n") as fh:
        items = [(t.tweet_id, t.labels) for t in corpus.tweets]
        items += list((extra_annotations or {}).items())
        for tweet_id, labels in items:
            for label in order:
                if label in labels:
                    fh.write(f"{tweet_id}\t{label.value}\n")
    with open(tweets_path, "w", encoding="utf-8", newline="\n") as fh:
        for record in corpus_to_records(corpus):
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def production_svg(production: Sequence[tuple[str, int]], width: int = 800,
                   height: int = 300) -> str:
    """Bar chart of hate tweets per user with a log10 y axis."""
    margin = 40
    n = max(len(production), 1)
    peak = max((c for _, c in production), default=1)
    top = math.log10(peak) if peak > 1 else 1.0
    bar_w = (width - 2 * margin) / n
    plot_h = height - 2 * margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for decade in range(int(math.floor(top)) + 1):
        y = height - margin - plot_h * decade / top
        parts.append(f'<text x="{margin - 4}" y="{y:.2f}" font-size="10" '
                     f'text-anchor="end">{10 ** decade}</text>')
    for i, (user_id, count) in enumerate(production):
        # log10(1) == 0, so single-tweet users get a visible sliver
        h = max(plot_h * math.log10(count) / top, 1.0)
        x = margin + i * bar_w
        parts.append(f'<rect x="{x:.3f}" y="{height - margin - h:.3f}" width="{bar_w:.3f}" '
                     f'height="{h:.3f}" fill="steelblue"><title>{html.escape(user_id)}: {count}</title></rect>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
