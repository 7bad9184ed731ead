import random

import pytest
from hypothesis import given, strategies as st

from chempat.brat import EntitySpan
from chempat.textproc import decode_bio, encode_bio, resolve_overlaps, tokenize


def spans_of(tokens):
    return [(t.surface, t.start, t.end) for t in tokens]


def test_tokenize_simple():
    assert spans_of(tokenize("2 h")) == [("2", 0, 1), ("h", 2, 3)]


def test_tokenize_digit_symbol():
    assert spans_of(tokenize("61%")) == [("61", 0, 2), ("%", 2, 3)]


def test_tokenize_chemical_string():
    # independent regex check of the letter-run/digit-run/single-symbol rule
    assert spans_of(tokenize("4-(6-Bromo")) == [
        ("4", 0, 1), ("-", 1, 2), ("(", 2, 3), ("6", 3, 4), ("-", 4, 5), ("Bromo", 5, 10),
    ]


@given(st.text(max_size=60))
def test_tokenize_covers_all_non_whitespace(text):
    tokens = tokenize(text)
    rebuilt = list(text)
    for tok in tokens:
        assert text[tok.start:tok.end] == tok.surface
        assert not any(c.isspace() for c in tok.surface)
        for i in range(tok.start, tok.end):
            rebuilt[i] = None  # each char consumed exactly once
    assert all(c is None or c.isspace() for c in rebuilt)


def test_resolve_overlaps_disjoint_unchanged():
    spans = [EntitySpan("A", 0, 3, "xxx"), EntitySpan("B", 5, 8, "yyy")]
    assert resolve_overlaps(spans) == spans


def test_resolve_overlaps_longer_wins():
    a = EntitySpan("A", 0, 10, "x" * 10)
    b = EntitySpan("B", 2, 5, "xxx")
    assert resolve_overlaps([b, a]) == [a]


def test_resolve_overlaps_type_tiebreak():
    a = EntitySpan("A", 0, 5, "xxxxx")
    b = EntitySpan("B", 0, 5, "xxxxx")
    assert resolve_overlaps([b, a]) == [a]


def test_resolve_overlaps_properties():
    rng = random.Random(7)
    text = "x" * 40
    for _ in range(50):
        spans = []
        for _ in range(rng.randrange(10)):
            start = rng.randrange(35)
            end = start + rng.randint(1, 5)
            spans.append(EntitySpan(rng.choice("ABC"), start, end, text[start:end]))
        spans = list(dict.fromkeys(spans))
        kept = resolve_overlaps(spans)
        assert set(kept) <= set(spans)
        ordered = sorted(kept, key=lambda e: e.start)
        for left, right in zip(ordered, ordered[1:]):
            assert left.end <= right.start


def test_encode_bio_snaps_and_aligns():
    tokens = tokenize("at 25 °C")
    labels = encode_bio(tokens, [EntitySpan("temperature", 3, 5, "25")])
    assert labels == ["O", "B-temperature", "O", "O"]


def test_encode_bio_no_entities():
    tokens = tokenize("at 25 °C")
    assert encode_bio(tokens, []) == ["O"] * 4


def test_encode_bio_two_token_entity():
    tokens = tokenize("2 h")
    assert encode_bio(tokens, [EntitySpan("time", 0, 3, "2 h")]) == ["B-time", "I-time"]


def test_decode_bio_merges_run():
    text = "2 h"
    spans = decode_bio(text, tokenize(text), ["B-time", "I-time"])
    assert spans == [EntitySpan("time", 0, 3, "2 h")]


def test_decode_bio_all_o():
    text = "2 h"
    assert decode_bio(text, tokenize(text), ["O", "O"]) == []


def test_decode_bio_repairs_i_after_o():
    text = "2 h"
    tokens = tokenize(text)
    spans = decode_bio(text, tokens, ["O", "I-time"])
    assert spans == [EntitySpan("time", tokens[1].start, tokens[1].end, "h")]


def test_decode_bio_length_mismatch():
    with pytest.raises(ValueError):
        decode_bio("2 h", tokenize("2 h"), ["O"])


def _random_token_aligned_spans(rng, tokens):
    spans = []
    i = 0
    while i < len(tokens):
        if rng.random() < 0.4:
            width = min(rng.randint(1, 3), len(tokens) - i)
            spans.append((i, i + width - 1, rng.choice("ABC")))
            i += width + 1  # gap so B vs I boundaries stay unambiguous
        else:
            i += 1
    return spans


def test_bio_round_trip_random():
    rng = random.Random(11)
    for _ in range(300):
        words = ["".join(rng.choices("abcXYZ019", k=rng.randint(1, 5)))
                 for _ in range(rng.randint(1, 12))]
        text = " ".join(words)
        tokens = tokenize(text)
        entities = []
        for first, last, etype in _random_token_aligned_spans(rng, tokens):
            start, end = tokens[first].start, tokens[last].end
            entities.append(EntitySpan(etype, start, end, text[start:end]))
        decoded = decode_bio(text, tokens, encode_bio(tokens, entities))
        assert set(decoded) == set(entities)
        ordered = sorted(decoded, key=lambda e: e.start)
        for left, right in zip(ordered, ordered[1:]):
            assert left.end <= right.start
