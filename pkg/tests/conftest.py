from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np
import pytest

from hatepop.corpus import Corpus, Label, TweetRecord, UserRecord, write_corpus
from hatepop.features import FeatureMatrix
from hatepop.synth import DETECT_SPEC, published_marginals_corpus, synth_corpus

T0 = datetime(2017, 5, 1, tzinfo=timezone.utc)

LABELS = {"none": frozenset({Label.NONE}), "racism": frozenset({Label.RACISM}),
          "sexism": frozenset({Label.SEXISM}),
          "both": frozenset({Label.RACISM, Label.SEXISM})}


def user(uid="u1", **kw):
    base = dict(user_id=uid, handle=f"h{uid}", display_name=f"Name {uid}", account_created_at=T0)
    base.update(kw)
    return UserRecord(**base)


def tweet(tid, label="none", author="u1", text="hello", **kw):
    base = dict(tweet_id=str(tid), text=text, labels=LABELS[label], created_at=T0,
                author_id=author)
    base.update(kw)
    return TweetRecord(**base)


def corpus_of(tweets, users=None, reference_time=None):
    """Corpus with an auto-created user for every author not in ``users``."""
    users = {u.user_id: u for u in (users or [])}
    for t in tweets:
        users.setdefault(t.author_id, user(t.author_id))
    return Corpus(tweets=tweets, users=users, reference_time=reference_time or T0)


def tweet_json(tid, text="hello", uid="u1", **kw):
    obj = {
        "id": str(tid), "text": text, "created_at": "2017-04-01T12:00:00Z",
        "favorite_count": 0, "retweet_count": 0, "in_reply_to_status_id": None,
        "is_quote_status": False,
        "user": {"id": uid, "screen_name": f"h{uid}", "name": f"N {uid}",
                 "created_at": "2015-01-01T00:00:00Z", "followers_count": 1,
                 "friends_count": 2, "listed_count": 0, "statuses_count": 10,
                 "favourites_count": 3},
    }
    obj.update(kw)
    return obj


def write_jsonl(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def published_dump(tmp_path_factory):
    """The distribution-matched corpus written as annotations + JSON Lines."""
    root = tmp_path_factory.mktemp("published")
    corpus, extra = published_marginals_corpus(0)
    write_corpus(corpus, root / "annotations.tsv", root / "tweets.jsonl", extra)
    return root


@pytest.fixture(scope="session")
def published_corpus():
    return published_marginals_corpus(0)[0]


@pytest.fixture(scope="session")
def detect_corpus():
    return synth_corpus(DETECT_SPEC, 0)


def copied_target_matrix(n=1000, prior=0.7, seed=0):
    """Labels at the given positive rate, one Tweet column equal to them, noise elsewhere."""
    rng = np.random.default_rng(seed)
    y = np.zeros(n, dtype=bool)
    y[rng.permutation(n)[:int(round(prior * n))]] = True
    names = ("copy", "noise_tweet", "noise_user_a", "noise_user_b", "noise_content")
    groups = {"copy": "Tweet", "noise_tweet": "Tweet", "noise_user_a": "User",
              "noise_user_b": "User", "noise_content": "Content"}
    values = np.column_stack([y.astype(float), rng.normal(size=(n, 4))])
    return FeatureMatrix(names, values, groups), y


# acceptance criterion outcomes, printed as one line each at the end of the run
CRITERIA: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    CRITERIA[number] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
