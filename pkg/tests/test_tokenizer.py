from __future__ import annotations

import random

from bwslab.tokenizer import (
    default_negators,
    is_punctuation_token,
    load_negators,
    mark_negation,
    strip_neg,
    tokenize,
)


def toks(text, **kw):
    return list(tokenize(text, **kw).tokens)


def test_spec_example_contraction_punct_hashtag():
    assert toks("I'm scared!! #terrified") == ["i'm", "scared", "!!", "#terrified"]


def test_empty_text():
    assert toks("") == []


def test_url_kept_whole():
    assert toks("see http://t.co/x now") == ["see", "http://t.co/x", "now"]
    assert toks("WWW.Example.COM rocks")[0] == "www.example.com"


def test_mentions_hashtags_emoticons_single_tokens():
    assert toks("@You #Happy :-) <3") == ["@you", "#happy", ":-)", "<3"]


def test_trailing_punct_split_but_inner_kept():
    assert toks("well, a,b end.") == ["well", ",", "a,b", "end", "."]
    assert toks("wow!!?") == ["wow", "!!?"]


def test_lowercase_flag():
    assert toks("Mad WORLD", lowercase=False) == ["Mad", "WORLD"]


def test_tokenize_idempotent_on_token_stream():
    rng = random.Random(7)
    samples = [
        "I'm scared!! #terrified",
        "no way:( http://x.co/y?a=1 @who #Tag ...",
        "a,b c--d :-P été 'quoted'",
        "!! ?? #x@y",
    ]
    for text in samples:
        first = toks(text)
        assert toks(" ".join(first)) == first
    for _ in range(50):
        words = [rng.choice(["word", "#tag", "@me", ":)", "x!!", "a.b", "hey..."])
                 for _ in range(rng.randint(0, 8))]
        first = toks(" ".join(words))
        assert toks(" ".join(first)) == first


def test_negator_list_has_28_words_including_named_ones():
    negs = load_negators()
    assert len(negs) == 28
    assert {"no", "not", "won't", "never"} <= negs
    assert default_negators() == negs


def test_mark_negation_spec_case():
    seq = tokenize("i am not happy today .")
    assert list(mark_negation(seq).tokens) == ["i", "am", "not", "NEG-happy", "NEG-today", "."]


def test_mark_negation_identity_without_negator():
    seq = tokenize("a perfectly fine day .")
    assert mark_negation(seq).tokens == seq.tokens


def test_mark_negation_scope_ends_at_punctuation():
    seq = tokenize("never . good")
    assert list(mark_negation(seq).tokens) == ["never", ".", "good"]


def test_mark_negation_only_inside_scope():
    seq = tokenize("happy but not sad , calm again")
    got = list(mark_negation(seq).tokens)
    assert got == ["happy", "but", "not", "NEG-sad", ",", "calm", "again"]
    # only tokens strictly after the negator and before punctuation changed
    for before, after in zip(seq.tokens, got):
        assert after in (before, "NEG-" + before)


def test_strip_neg_and_punct_helpers():
    assert strip_neg("NEG-happy") == "happy"
    assert strip_neg("happy") == "happy"
    assert is_punctuation_token("!!")
    assert not is_punctuation_token("#tag")
    assert not is_punctuation_token("word")
