from __future__ import annotations

from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatepop.corpus import label_distribution
from hatepop.features import (
    CONTENT_FEATURES,
    GROUPS,
    TWEET_FEATURES,
    USER_FEATURES,
    FeatureMatrix,
    LexiconSet,
    build_matrix,
    extract_content_features,
    extract_tweet_features,
    extract_user_features,
    read_feature_csv,
    targets,
    training_columns,
)

from conftest import T0, corpus_of, tweet, user

RATIO_PAIRS = (("blacklist_total", "blacklist_ratio"),
               ("total_negative_tokens", "negative_token_ratio"),
               ("total_positive_tokens", "positive_token_ratio"),
               ("total_subjective_tokens", "subjective_token_ratio"))


def test_table_inventory():
    assert (len(TWEET_FEATURES), len(USER_FEATURES), len(CONTENT_FEATURES)) == (6, 8, 25)
    names = TWEET_FEATURES + USER_FEATURES + CONTENT_FEATURES
    assert len(set(names)) == 39


def test_tweet_features():
    c = corpus_of([tweet(1, "sexism"), tweet(2, in_reply_to="1", created_at=T0 - timedelta(hours=5)),
                   tweet(3, in_reply_to="404"), tweet(4, in_reply_to="2")])
    f1 = extract_tweet_features(c.tweets[0], c)
    assert f1["is_reply"] == 0 and f1["is_reply_to_hate_tweet"] == 0
    assert f1["num_replies"] == 1 and f1["tweet_age"] == 0
    f2 = extract_tweet_features(c.tweets[1], c)
    assert f2["is_reply"] == 1 and f2["is_reply_to_hate_tweet"] == 1 and f2["tweet_age"] == 5
    assert f2["tweet_hour"] == 19
    f3 = extract_tweet_features(c.tweets[2], c)
    assert f3["is_reply"] == 1 and f3["is_reply_to_hate_tweet"] == 0
    assert extract_tweet_features(c.tweets[3], c)["is_reply_to_hate_tweet"] == 0


def test_user_features():
    u = user("9", handle="abc", display_name="A B", follower_count=10, followee_count=5,
             listed_count=1, statuses_count=100, favourites_count=7,
             account_created_at=T0 - timedelta(days=3))
    f = extract_user_features(u, T0)
    assert f["len_handle"] == 3 and f["len_name"] == 3 and f["account_age"] == 3
    assert [f[k] for k in ("num_followers", "num_followees", "num_times_user_was_listed",
                           "num_posted_tweets", "num_favorited_tweets")] == [10, 5, 1, 100, 7]
    assert extract_user_features(user("x"), T0)["account_age"] == 0


def test_content_example():
    f = extract_content_features(tweet(1, text="Hello WORLD #mkr @user https://t.co/x"), LexiconSet())
    assert f["token_count"] == 5
    assert (f["num_hashtags"], f["num_mentions"], f["num_urls"]) == (1, 1, 1)
    assert f["has_uppercase_token"] == 1
    assert f["uppercase_token_ratio"] == pytest.approx(0.2)
    assert f["mixedcase_token_ratio"] == pytest.approx(0.2)
    assert f["lowercase_token_ratio"] == pytest.approx(0.6)
    assert f["has_fullstop"] == 1 and f["has_digits"] == 0


def test_content_empty_text():
    f = extract_content_features(tweet(1, text=""), LexiconSet.default())
    assert all(f[k] == 0 for k in CONTENT_FEATURES)


def test_blacklist_counts():
    lex = LexiconSet(blacklist=frozenset({"bad"}))
    f = extract_content_features(tweet(1, text="bad bad ok"), lex)
    assert f["blacklist_total"] == 2
    assert f["blacklist_ratio"] == pytest.approx(2 / 3)
    # lexicon keys: lowercased, leading @/# and trailing punctuation stripped
    g = extract_content_features(tweet(1, text="#BAD! @bad. bad-ish"), lex)
    assert g["blacklist_total"] == 2


def test_case_classes():
    f = extract_content_features(tweet(1, text="I A OK ok Ok 123"), LexiconSet())
    # single letters fail the two-letter uppercase rule and fall into mixed case
    assert f["uppercase_token_ratio"] == pytest.approx(1 / 6)
    assert f["lowercase_token_ratio"] == pytest.approx(1 / 6)
    assert f["mixedcase_token_ratio"] == pytest.approx(3 / 6)


def test_is_hate_tweet():
    assert extract_content_features(tweet(1, "racism"), LexiconSet())["is_hate_tweet"] == 1
    assert extract_content_features(tweet(1), LexiconSet())["is_hate_tweet"] == 0


def test_lexicon_loading(tmp_path):
    (tmp_path / "blacklist.txt").write_text("# comment\nFoo\n\nbar\n")
    lex = LexiconSet.from_dir(tmp_path)
    assert lex.blacklist == {"foo", "bar"} and lex.positive == frozenset()
    (tmp_path / "negative.txt").write_text("two words\n")
    with pytest.raises(ValueError):
        LexiconSet.from_dir(tmp_path)
    d = LexiconSet.default()
    assert d.blacklist and d.positive and d.negative and d.subjective


def test_build_matrix_groups(detect_corpus):
    m = build_matrix(detect_corpus, include_groups={"Tweet"})
    assert m.column_names == TWEET_FEATURES
    full = build_matrix(detect_corpus)
    assert full.shape == (len(detect_corpus), 39)
    assert set(full.groups()) == set(GROUPS)
    with pytest.raises(ValueError):
        build_matrix(detect_corpus, include_groups={"Gender"})


def test_build_matrix_empty_corpus():
    m = build_matrix(corpus_of([]))
    assert m.shape == (0, 39)
    assert targets(corpus_of([]), "liked").shape == (0,)


def test_user_id_column_is_never_trained_on(detect_corpus):
    m = build_matrix(detect_corpus, include_user_id=True)
    assert m.column_names[-1] == "user_id" and m.group_of["user_id"] == "Meta"
    for target in ("liked", "retweeted", "replied", "hate"):
        assert "user_id" not in training_columns(m, target)
    assert "num_replies" not in training_columns(m, "replied")
    assert "num_replies" in training_columns(m, "liked")
    assert "is_hate_tweet" not in training_columns(m, "hate")


def test_targets():
    c = corpus_of([tweet(1, like_count=0), tweet(2, like_count=1), tweet(3, like_count=5)])
    assert targets(c, "liked").tolist() == [False, True, True]
    r = corpus_of([tweet(1), tweet(2, in_reply_to="1")])
    assert targets(r, "replied").tolist() == [True, False]
    with pytest.raises(ValueError):
        targets(c, "quoted")


def test_raw_reply_target():
    c = corpus_of([tweet(1, raw_reply_count=3), tweet(2, raw_reply_count=0)])
    assert targets(c, "replied", raw_replies=True).tolist() == [True, False]
    with pytest.raises(ValueError):
        targets(corpus_of([tweet(1)]), "replied", raw_replies=True)


def test_csv_roundtrip(tmp_path, detect_corpus):
    m = build_matrix(detect_corpus)
    m.to_csv(tmp_path / "f.csv")
    ids, names, values = read_feature_csv(tmp_path / "f.csv")
    assert names == list(m.column_names) and tuple(ids) == m.row_ids
    np.testing.assert_array_equal(values, m.values)
    back = FeatureMatrix.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.values, m.values)


def test_feature_matrix_validation():
    with pytest.raises(ValueError):
        FeatureMatrix(("a", "a"), np.zeros((1, 2)), {"a": "Tweet"})
    with pytest.raises(ValueError):
        FeatureMatrix(("a",), np.zeros((1, 2)), {"a": "Tweet"})


def test_is_hate_column_matches_label_distribution(published_corpus):
    m = build_matrix(published_corpus, include_groups={"Content"})
    assert m.column("is_hate_tweet").sum() == label_distribution(published_corpus)["Hate"]


def test_replied_positives_on_hate_subset(published_corpus):
    # 17 + 2 hate tweets with at least one in-corpus reply
    hate = np.array([t.is_hate for t in published_corpus.tweets])
    assert targets(published_corpus, "replied")[hate].sum() == 19


# ---------------------------------------------------------------- properties

_piece = st.sampled_from(list("aBc XyZ#@!?.1 ") + ["bad", "GOOD", "http://x", " I "])
_text = st.lists(_piece, max_size=25).map("".join)


@settings(max_examples=150, deadline=None)
@given(_text)
def test_content_properties(text):
    lex = LexiconSet(blacklist=frozenset({"bad"}), positive=frozenset({"good"}),
                     negative=frozenset({"bad"}), subjective=frozenset({"good", "bad"}))
    f = extract_content_features(tweet(1, text=text), lex)
    for k in CONTENT_FEATURES:
        if k.endswith("_ratio"):
            assert 0.0 <= f[k] <= 1.0
    n = f["token_count"]
    cased = (f["uppercase_token_ratio"] + f["lowercase_token_ratio"] + f["mixedcase_token_ratio"]) * n
    assert cased <= n + 1e-9
    for total, ratio in RATIO_PAIRS:
        assert f[ratio] * n == pytest.approx(f[total], abs=1e-9)
    assert extract_content_features(tweet(1, text=text), lex) == f


def test_group_union_is_concatenation(detect_corpus):
    a = build_matrix(detect_corpus, include_groups={"Tweet"})
    b = build_matrix(detect_corpus, include_groups={"User", "Content"})
    ab = build_matrix(detect_corpus)
    cat = np.column_stack([a.values, b.values])
    order = [list(a.column_names + b.column_names).index(c) for c in ab.column_names]
    np.testing.assert_array_equal(cat[:, order], ab.values)
    np.testing.assert_array_equal(build_matrix(detect_corpus).values, ab.values)
