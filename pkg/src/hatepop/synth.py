"""Deterministic synthetic corpora used as fixtures.

Two generators live here. ``synth_corpus`` plants discriminative character
sequences into hate tweets so that the detection pipeline has a known,
recoverable signal. ``published_marginals_corpus`` builds a corpus whose
label, user and interaction counts equal the published corpus tables
exactly, so the statistics pipeline can be checked without the original
(no longer hydratable) tweets.
"""

from __future__ import annotations

import string
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .corpus import Corpus, Label, TweetRecord, UserRecord

__all__ = [
    "SynthSpec",
    "DETECT_SPEC",
    "synth_corpus",
    "published_marginals_corpus",
    "PUBLISHED_TABLES",
]

_EPOCH = datetime(2016, 1, 1, tzinfo=timezone.utc)
_ACCOUNT_EPOCH = datetime(2008, 1, 1, tzinfo=timezone.utc)
# letters kept out of generated words so planted sequences cannot occur by chance
_WORD_LETTERS = "abcdefghijklmnoprstuvwy"


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & (2**64 - 1))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a planted-signal corpus.

    Rates are probabilities; ``like_rate``/``retweet_rate`` are the chances a
    tweet receives at least one interaction, as ``(non_hate, hate)`` pairs,
    and ``tail`` is the geometric continuation probability beyond one.
    """

    n_non_hate: int = 1000
    n_racism: int = 150
    n_sexism: int = 350
    n_users: int = 60
    planted_rate: float = 0.9
    planted_tokens: tuple = ("qzxq", "#xqz", "zzqx")
    topic_rate: float = 0.3
    rt_rate: float = 0.3
    like_rate: tuple = (0.15, 0.07)
    retweet_rate: tuple = (0.08, 0.08)
    tail: float = 0.35
    reply_rate: float = 0.05
    external_reply_rate: float = 0.1
    quote_rate: float = 0.05

    def validate(self):
        for name in ("n_non_hate", "n_racism", "n_sexism"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        rates = [self.planted_rate, self.topic_rate, self.rt_rate, self.tail,
                 self.reply_rate, self.external_reply_rate, self.quote_rate,
                 *self.like_rate, *self.retweet_rate]
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("all rates must lie in [0, 1]")
        if self.tail >= 1.0:
            raise ValueError("tail must be < 1")
        if self.reply_rate + self.external_reply_rate > 1.0:
            raise ValueError("reply_rate + external_reply_rate must not exceed 1")
        if not self.planted_tokens or any(not t or t.split() != [t] for t in self.planted_tokens):
            raise ValueError("planted_tokens must be non-empty whitespace-free strings")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


DETECT_SPEC = SynthSpec()


class _TextMaker:
    def __init__(self, rng: np.random.Generator, n_shared=400, n_topic=60):
        self.rng = rng
        self.shared = self._words(n_shared)
        self.topics = {"none": self._words(n_topic), "hate": self._words(n_topic)}

    def _words(self, n):
        words = set()
        while len(words) < n:
            length = int(self.rng.integers(3, 9))
            words.add("".join(self.rng.choice(list(_WORD_LETTERS), size=length)))
        return sorted(words)

    def make(self, topic, topic_rate, planted=(), handles=()):
        rng = self.rng
        n_words = int(rng.integers(5, 15))
        words = []
        for _ in range(n_words):
            pool = self.topics[topic] if rng.random() < topic_rate else self.shared
            word = pool[int(rng.integers(len(pool)))]
            u = rng.random()
            if u < 0.05:
                word = word.upper()
            elif u < 0.15:
                word = word.capitalize()
            words.append(word)
        for token in planted:
            words.insert(int(rng.integers(len(words) + 1)), token)
        if handles and rng.random() < 0.3:
            words.insert(0, "@" + handles[int(rng.integers(len(handles)))])
        if rng.random() < 0.2:
            words.append("#" + self.shared[int(rng.integers(len(self.shared)))])
        if rng.random() < 0.15:
            words.append("https://t.co/" + "".join(rng.choice(list(string.ascii_letters), 8)))
        if rng.random() < 0.1:
            words.append(str(int(rng.integers(1, 100))))
        text = " ".join(words)
        u = rng.random()
        if u < 0.3:
            text += "."
        elif u < 0.4:
            text += "!"
        elif u < 0.5:
            text += "?"
        return text


def _make_users(rng, n, pop):
    """Users whose follower/listed/status counts grow with a latent popularity."""
    users = []
    ids = [f"{100000 + i}" for i in range(n)]
    for i, user_id in enumerate(ids):
        z = pop[i]
        created = _ACCOUNT_EPOCH + timedelta(seconds=int(rng.integers(0, 8 * 365 * 86400)))
        handle_len = int(rng.integers(4, 15))
        users.append(UserRecord(
            user_id=user_id,
            handle="".join(rng.choice(list(_WORD_LETTERS), handle_len)),
            display_name=" ".join("".join(rng.choice(list(_WORD_LETTERS), int(rng.integers(2, 8))))
                                  .capitalize() for _ in range(int(rng.integers(1, 3)))),
            account_created_at=created,
            follower_count=int(np.exp(5.0 + 1.5 * z + 0.3 * rng.normal())),
            followee_count=int(np.exp(5.5 + 1.0 * z + 0.3 * rng.normal())),
            listed_count=int(np.exp(1.0 + 1.2 * z + 0.3 * rng.normal())),
            statuses_count=int(np.exp(8.0 + 1.0 * z + 0.3 * rng.normal())),
            favourites_count=int(np.exp(6.0 + 1.0 * z + 0.3 * rng.normal())),
        ))
    return users


def _timestamp(rng, span_days=365):
    return _EPOCH + timedelta(seconds=int(rng.integers(0, span_days * 86400)))


def _geometric_counts(rng, n, rate, tail):
    hit = rng.random(n) < rate
    extra = rng.geometric(1.0 - tail, size=n) if tail > 0 else np.ones(n, dtype=int)
    return np.where(hit, extra, 0).astype(int)


def synth_corpus(spec: SynthSpec = DETECT_SPEC, seed: int = 0) -> Corpus:
    """Generate a planted-signal corpus; identical ``(spec, seed)`` give identical corpora."""
    spec.validate()
    rng = _rng(seed)
    maker = _TextMaker(rng)
    users = _make_users(rng, spec.n_users, rng.normal(size=spec.n_users))
    handles = [u.handle for u in users]
    labels = ([frozenset({Label.NONE})] * spec.n_non_hate
              + [frozenset({Label.RACISM})] * spec.n_racism
              + [frozenset({Label.SEXISM})] * spec.n_sexism)
    order = rng.permutation(len(labels))
    labels = [labels[i] for i in order]
    n = len(labels)
    if n == 0:
        return Corpus(tweets=(), users={}, reference_time=_EPOCH)

    hate = np.array([bool(lab - {Label.NONE}) for lab in labels])
    likes = np.where(hate, _geometric_counts(rng, n, spec.like_rate[1], spec.tail),
                     _geometric_counts(rng, n, spec.like_rate[0], spec.tail))
    rts = np.where(hate, _geometric_counts(rng, n, spec.retweet_rate[1], spec.tail),
                   _geometric_counts(rng, n, spec.retweet_rate[0], spec.tail))
    ids = [f"{7000000 + i}" for i in range(n)]
    u = rng.random(n)
    reply_to: list = [None] * n
    for i in range(n):
        if u[i] < spec.reply_rate and i > 0:
            reply_to[i] = ids[int(rng.integers(0, i))]
        elif u[i] < spec.reply_rate + spec.external_reply_rate:
            reply_to[i] = f"9{int(rng.integers(10**8, 10**9))}"

    tweets = []
    for i in range(n):
        planted = ()
        if hate[i] and rng.random() < spec.planted_rate:
            k = int(rng.integers(1, 3))
            planted = tuple(spec.planted_tokens[int(j)]
                            for j in rng.integers(len(spec.planted_tokens), size=k))
        text = maker.make("hate" if hate[i] else "none", spec.topic_rate, planted, handles)
        if hate[i] and rng.random() < spec.rt_rate:
            text = f"RT @{handles[int(rng.integers(len(handles)))]}: " + text
        tweets.append(TweetRecord(
            tweet_id=ids[i],
            text=text,
            labels=labels[i],
            created_at=_timestamp(rng),
            author_id=users[int(rng.integers(len(users)))].user_id,
            like_count=int(likes[i]),
            retweet_count=int(rts[i]),
            in_reply_to=reply_to[i],
            is_quote_status=bool(rng.random() < spec.quote_rate),
        ))
    used = {t.author_id for t in tweets}
    users_map = {u.user_id: u for u in users if u.user_id in used}
    return Corpus(tweets=tuple(tweets), users=users_map,
                  reference_time=max(t.created_at for t in tweets))


# Counts of the published corpus tables, used as exact generation targets.
PUBLISHED_TABLES = {
    "labels_available": {"None": 11104, "Hate": 5068, "Racism": 1942, "Sexism": 3126,
                         "Total": 16172},
    "labels_original": {"None": 11559, "Hate": 5340, "Racism": 1970, "Sexism": 3378,
                        "Total": 16907},
    "interactions": {
        "non-hate": {"likes": [9393, 1255, 246, 96, 55, 59],
                     "retweets": [10256, 755, 54, 17, 9, 13],
                     "replies": [10304, 790, 7, 3, 0, 0]},
        "hate": {"likes": [4696, 259, 49, 27, 15, 22],
                 "retweets": [4857, 180, 15, 6, 3, 7],
                 "replies": [5049, 17, 2, 0, 0, 0]},
    },
    "users": {"Non-hate": 1334, "Hate": 525, "Racist": 2, "Sexist": 520,
              "Racist-and-sexist": 3, "Total": 1859},
    "top_producers": [1927, 1320, 964],
    "rt_share_hate": 0.30,
    "mkr_share_sexism": 0.136,
}


def _binned_counts(rng, bins, tail=0.8):
    values = []
    for v, n in enumerate(bins[:5]):
        values += [v] * n
    values += list(5 + rng.geometric(1.0 - tail, size=bins[5]) - 1)
    return np.array(sorted(values, reverse=True), dtype=int)


def _assign_ranked(rng, idx, bins, score, noise):
    """Deal a fixed multiset of counts to ``idx``, larger counts to higher scores."""
    counts = _binned_counts(rng, bins)
    key = score[idx] + noise * rng.normal(size=len(idx))
    ranked = idx[np.argsort(-key, kind="stable")]
    out = {}
    for i, c in zip(ranked, counts):
        out[int(i)] = int(c)
    return out


def published_marginals_corpus(seed: int = 0) -> tuple[Corpus, dict]:
    """Build a corpus matching the published label, user and interaction tables.

    Returns ``(corpus, unavailable)`` where ``unavailable`` maps extra
    annotated ids (absent from the corpus) to their labels, so that an
    annotation file written with them reproduces the original annotation
    counts. Likes follow author popularity; retweets are concentrated on
    non-reply tweets.
    """
    rng = _rng(seed)
    tables = PUBLISHED_TABLES
    n_users = tables["users"]["Total"]
    pop = rng.normal(size=n_users)
    users = _make_users(rng, n_users, pop)
    perm = rng.permutation(n_users)
    # role slices over a shuffled user order
    racist_only, both, sexist_top = perm[0:2], perm[2:5], perm[5:7]
    sexist_rest, non_hate = perm[7:525], perm[525:]

    tweet_author: list[int] = []
    tweet_labels: list[frozenset] = []

    def emit(user, label, k):
        tweet_author.extend([int(user)] * k)
        tweet_labels.extend([frozenset({label})] * k)

    for user, k in zip(racist_only, (1927, 5)):
        emit(user, Label.RACISM, k)
    for user, k in zip(both, (4, 3, 3)):
        emit(user, Label.RACISM, k)
        emit(user, Label.SEXISM, 1)
    for user, k in zip(sexist_top, (1320, 964)):
        emit(user, Label.SEXISM, k)
    rest_total = tables["labels_available"]["Sexism"] - 1320 - 964 - 3
    extra = rng.multinomial(rest_total - len(sexist_rest), np.full(len(sexist_rest), 1 / len(sexist_rest)))
    for user, k in zip(sexist_rest, extra + 1):
        emit(user, Label.SEXISM, int(k))
    n_none = tables["labels_available"]["None"]
    for user in non_hate:
        emit(user, Label.NONE, 1)
    weights = np.exp(1.2 * rng.normal(size=n_users))
    extra = rng.multinomial(n_none - len(non_hate), weights / weights.sum())
    for user, k in enumerate(extra):
        if k:
            emit(user, Label.NONE, int(k))

    n = len(tweet_labels)
    order = rng.permutation(n)
    tweet_author = [tweet_author[i] for i in order]
    tweet_labels = [tweet_labels[i] for i in order]
    hate = np.array([bool(lab - {Label.NONE}) for lab in tweet_labels])
    hate_idx, none_idx = np.flatnonzero(hate), np.flatnonzero(~hate)
    ids = [f"{5000000 + i}" for i in range(n)]

    # in-corpus reply structure, exact per-class reply histograms
    targets: list[int] = []
    for cls_idx, cls in ((none_idx, "non-hate"), (hate_idx, "hate")):
        bins = tables["interactions"][cls]["replies"]
        chosen = rng.permutation(cls_idx)
        pos = 0
        for r in range(1, 6):
            for _ in range(bins[r]):
                targets.extend([int(chosen[pos])] * r)
                pos += 1
    is_reply = rng.random(n) < 0.25
    reply_pool = np.flatnonzero(is_reply)
    repliers = rng.permutation(reply_pool)[:len(targets)]
    target_perm = rng.permutation(len(targets))
    reply_to: list = [None] * n
    pairs = [[int(r), targets[j]] for r, j in zip(repliers, target_perm)]
    for k, (r, t) in enumerate(pairs):
        if r == t:
            other = (k + 1) % len(pairs)
            pairs[k][1], pairs[other][1] = pairs[other][1], pairs[k][1]
    for r, t in pairs:
        reply_to[r] = ids[t]
    for i in reply_pool:
        if reply_to[i] is None:
            reply_to[i] = f"9{int(rng.integers(10**8, 10**9))}"

    maker = _TextMaker(rng)
    handles = [u.handle for u in users]
    rt_hate = set(rng.permutation(hate_idx)[:round(tables["rt_share_hate"] * len(hate_idx))].tolist())
    sexism_idx = np.array([i for i in range(n) if Label.SEXISM in tweet_labels[i]])
    mkr = set(rng.permutation(sexism_idx)[:round(tables["mkr_share_sexism"] * len(sexism_idx))].tolist())
    texts = []
    for i in range(n):
        planted = ("#MKR",) if i in mkr or (not hate[i] and rng.random() < 0.1) else ()
        text = maker.make("hate" if hate[i] else "none", 0.3, planted, handles)
        if i in rt_hate or (not hate[i] and rng.random() < 0.2):
            text = f"RT @{handles[int(rng.integers(len(handles)))]}: " + text
        texts.append(text)

    user_pop = pop[np.array(tweet_author)]
    like_count, rt_count = {}, {}
    for cls_idx, cls in ((none_idx, "non-hate"), (hate_idx, "hate")):
        like_count.update(_assign_ranked(rng, cls_idx, tables["interactions"][cls]["likes"],
                                         user_pop, 0.7))
        rt_score = np.where(is_reply, -4.0, 0.0) + 0.3 * user_pop
        rt_count.update(_assign_ranked(rng, cls_idx, tables["interactions"][cls]["retweets"],
                                       rt_score, 1.0))

    tweets = []
    for i in range(n):
        tweets.append(TweetRecord(
            tweet_id=ids[i],
            text=texts[i],
            labels=tweet_labels[i],
            created_at=_timestamp(rng, span_days=2 * 365),
            author_id=users[tweet_author[i]].user_id,
            like_count=like_count[i],
            retweet_count=rt_count[i],
            in_reply_to=reply_to[i],
            is_quote_status=bool(rng.random() < 0.05),
        ))
    corpus = Corpus(tweets=tuple(tweets), users={u.user_id: u for u in users},
                    reference_time=max(t.created_at for t in tweets))

    original, available = tables["labels_original"], tables["labels_available"]
    n_dual = original["Racism"] + original["Sexism"] - original["Hate"]
    missing = (
        [frozenset({Label.NONE})] * (original["None"] - available["None"])
        + [frozenset({Label.RACISM})] * (original["Racism"] - available["Racism"] - n_dual)
        + [frozenset({Label.SEXISM})] * (original["Sexism"] - available["Sexism"] - n_dual)
        + [frozenset({Label.RACISM, Label.SEXISM})] * n_dual
    )
    unavailable = {f"{8000000 + i}": lab for i, lab in enumerate(missing)}
    return corpus, unavailable
