from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatepop.corpus import (
    INTERACTION_KINDS,
    AnnotationConflictError,
    AnnotationParseError,
    CorpusError,
    Label,
    availability_deltas,
    classify_users,
    interaction_histogram,
    label_distribution,
    load_annotations,
    load_corpus,
    parse_timestamp,
    production_svg,
    token_share,
    user_production_histogram,
)

from conftest import T0, corpus_of, tweet, tweet_json, write_jsonl


# ---------------------------------------------------------------- annotations

def test_empty_annotation_file(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("")
    assert load_annotations(p) == {}


def test_dual_label_lines_merge(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("1\tracism\n1\tsexism\n")
    assert load_annotations(p) == {"1": frozenset({Label.RACISM, Label.SEXISM})}


def test_unknown_label_reports_line(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("1\tracism\n2\thateful\n")
    with pytest.raises(AnnotationParseError) as exc:
        load_annotations(p)
    assert exc.value.lineno == 2
    assert str(exc.value).startswith("line 2")


def test_comments_case_and_spaces(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("# header\n\n3 NONE\n4\tSexism\n")
    assert load_annotations(p) == {"3": frozenset({Label.NONE}), "4": frozenset({Label.SEXISM})}


def test_none_with_hate_is_conflict(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("5\tnone\n5\tracism\n")
    with pytest.raises(AnnotationConflictError):
        load_annotations(p)


@pytest.mark.parametrize("line", ["7", "7\tracism\textra", "\tracism"])
def test_malformed_lines(tmp_path, line):
    p = tmp_path / "a.tsv"
    p.write_text(line + "\n")
    with pytest.raises(AnnotationParseError):
        load_annotations(p)


# ---------------------------------------------------------------- loading

def test_missing_tweet_is_unavailable(tmp_path):
    ann = {"1": frozenset({Label.NONE}), "2": frozenset({Label.SEXISM})}
    path = write_jsonl(tmp_path / "t.jsonl", [tweet_json(1)])
    c = load_corpus(ann, path)
    assert len(c) == 1
    assert c.unavailable == ("2",)
    assert c.unavailable_labels["2"] == frozenset({Label.SEXISM})


def test_record_without_user_is_skipped(tmp_path):
    bad = tweet_json(2)
    del bad["user"]
    path = write_jsonl(tmp_path / "t.jsonl", [tweet_json(1), bad])
    ann = {"1": frozenset({Label.NONE}), "2": frozenset({Label.NONE})}
    c = load_corpus(ann, path)
    assert [t.tweet_id for t in c.tweets] == ["1"]
    assert c.unavailable == ("2",)
    (err,) = c.record_errors
    assert err.tweet_id == "2" and "user" in err.message


def test_unannotated_tweets_ignored_and_duplicates_keep_first(tmp_path):
    path = write_jsonl(tmp_path / "t.jsonl",
                       [tweet_json(1, text="first"), tweet_json(9), tweet_json(1, text="second")])
    c = load_corpus({"1": frozenset({Label.NONE})}, path)
    assert [t.text for t in c.tweets] == ["first"]
    assert len(c.record_errors) == 1


def test_zero_loadable_tweets_is_fatal(tmp_path):
    path = write_jsonl(tmp_path / "t.jsonl", [tweet_json(9)])
    with pytest.raises(CorpusError):
        load_corpus({"1": frozenset({Label.NONE})}, path)


def test_invalid_json_line_recorded(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps(tweet_json(1)) + "\n{not json\n")
    c = load_corpus({"1": frozenset({Label.NONE})}, path)
    assert c.record_errors[0].lineno == 2


def test_reference_time_default_and_override(tmp_path):
    path = write_jsonl(tmp_path / "t.jsonl", [
        tweet_json(1, created_at="2017-01-01T00:00:00Z"),
        tweet_json(2, created_at="2017-03-01T00:00:00Z")])
    ann = {"1": frozenset({Label.NONE}), "2": frozenset({Label.NONE})}
    assert load_corpus(ann, path).reference_time == parse_timestamp("2017-03-01T00:00:00Z")
    c = load_corpus(ann, path, reference_time="2018-01-01T00:00:00Z")
    assert c.reference_time.year == 2018


def test_twitter_timestamp_format():
    a = parse_timestamp("Wed Aug 27 13:08:45 +0000 2014")
    b = parse_timestamp("2014-08-27T13:08:45Z")
    assert a == b


def test_first_user_occurrence_wins(tmp_path):
    t2 = tweet_json(2)
    t2["user"] = dict(t2["user"], followers_count=999)
    path = write_jsonl(tmp_path / "t.jsonl", [tweet_json(1), t2])
    c = load_corpus({"1": frozenset({Label.NONE}), "2": frozenset({Label.NONE})}, path)
    assert c.users["u1"].follower_count == 1


def test_corpus_is_immutable():
    c = corpus_of([tweet(1)])
    with pytest.raises(Exception):
        c.tweets = ()
    with pytest.raises(TypeError):
        c.users["x"] = None


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        tweet(1, like_count=-1)


# ---------------------------------------------------------------- statistics

def test_label_distribution_small():
    c = corpus_of([tweet(1), tweet(2), tweet(3, "sexism")])
    assert label_distribution(c) == {"None": 2, "Hate": 1, "Racism": 0, "Sexism": 1, "Total": 3}


def test_dual_labeled_tweet_counts_once_for_hate():
    d = label_distribution(corpus_of([tweet(1, "both")]))
    assert (d["Racism"], d["Sexism"], d["Hate"]) == (1, 1, 1)


def test_label_distribution_empty_raises():
    with pytest.raises(ValueError):
        label_distribution(corpus_of([]))


def test_histogram_binning():
    c = corpus_of([tweet(1, like_count=0), tweet(2, like_count=7)])
    h = interaction_histogram(c, "likes")
    assert h.bins == (1, 0, 0, 0, 0, 1)
    assert h.full == {0: 1, 7: 1}


def test_replies_are_counted_inside_corpus():
    c = corpus_of([tweet(1), tweet(2, in_reply_to="1"), tweet(3, in_reply_to="1"),
                   tweet(4, in_reply_to="999")])
    assert interaction_histogram(c, "replies").bins == (3, 0, 1, 0, 0, 0)


def test_unknown_kind():
    with pytest.raises(ValueError):
        interaction_histogram(corpus_of([tweet(1)]), "quotes")


def test_classify_users_cases():
    assert classify_users(corpus_of([tweet(1)]))["Non-hate"] == 1
    both = classify_users(corpus_of([tweet(1, "racism"), tweet(2, "sexism")]))
    assert both["Racist-and-sexist"] == 1 and both["Hate"] == 1


def test_production_sort_contract():
    tweets = [tweet(i, "sexism", author=a) for i, a in enumerate(["b", "b", "a", "a", "c"] + ["c"] * 3)]
    assert user_production_histogram(corpus_of(tweets)) == [("c", 4), ("a", 2), ("b", 2)]
    assert user_production_histogram(corpus_of([tweet(1)])) == []


def test_token_share_rt():
    c = corpus_of([tweet(1, "racism", text="RT @x foo"), tweet(2, "sexism", text="bar")])
    assert token_share(c, "hate", "RT") == 0.5
    assert token_share(c, "non-hate", "RT") == 0.0
    # exact token, case-sensitive
    c2 = corpus_of([tweet(1, "racism", text="rt art RTs"), tweet(2, "racism", text="x RT")])
    assert token_share(c2, "hate", "RT") == 0.5


def test_token_share_pattern_set_and_punctuation():
    c = corpus_of([tweet(1, "sexism", text="omg #MKR."), tweet(2, "sexism", text="#mkr!"),
                   tweet(3, "sexism", text="nothing")])
    pats = ("#MKR", "@MyKitchenRules", "#MyKitchenRules")
    assert token_share(c, "sexism", pats) == 0.0
    assert token_share(c, "sexism", pats, case_sensitive=False, strip_punctuation=True) == \
        pytest.approx(2 / 3)


def test_availability_deltas():
    d = availability_deltas({"None": 90, "Total": 90}, {"None": 100, "Total": 100})
    assert d["None"] == {"original": 100, "available": 90, "deleted": 10, "percent": 10.0}


def test_production_svg_well_formed():
    svg = production_svg([("a<b", 100), ("c", 10), ("d", 1)])
    root = ET.fromstring(svg)
    rects = root.findall("{http://www.w3.org/2000/svg}rect")
    assert len(rects) == 3
    heights = [float(r.get("height")) for r in rects]
    # log scale: 100 is twice as tall as 10
    assert heights[0] == pytest.approx(2 * heights[1])


# ---------------------------------------------------------------- properties

_label = st.sampled_from(["none", "racism", "sexism", "both"])
_tweet_spec = st.tuples(_label, st.integers(0, 4), st.integers(0, 12), st.integers(0, 12),
                        st.one_of(st.none(), st.integers(0, 30)))


@st.composite
def corpora(draw):
    specs = draw(st.lists(_tweet_spec, min_size=1, max_size=30))
    tweets = [tweet(i, lab, author=f"u{a}", like_count=lk, retweet_count=rt,
                    in_reply_to=None if rep is None else str(rep),
                    created_at=T0 - timedelta(hours=i))
              for i, (lab, a, lk, rt, rep) in enumerate(specs)]
    return corpus_of(tweets)


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_corpus_invariants(c):
    for subset, size in (("all", len(c)), ("hate", sum(t.is_hate for t in c.tweets)),
                         ("non-hate", sum(not t.is_hate for t in c.tweets))):
        for kind in INTERACTION_KINDS:
            h = interaction_histogram(c, kind, subset)
            assert sum(h.bins) == size == sum(h.full.values())
    d = label_distribution(c)
    assert d["None"] + d["Hate"] == d["Total"]
    dual = sum(t.labels == frozenset({Label.RACISM, Label.SEXISM}) for t in c.tweets)
    assert d["Racism"] + d["Sexism"] - d["Hate"] == dual
    u = classify_users(c)
    assert u["Racist"] + u["Sexist"] + u["Racist-and-sexist"] == u["Hate"]
    assert u["Hate"] + u["Non-hate"] == u["Total"]
    prod = user_production_histogram(c)
    assert sum(n for _, n in prod) == d["Hate"]
    # purity
    assert label_distribution(c) == d and user_production_histogram(c) == prod
