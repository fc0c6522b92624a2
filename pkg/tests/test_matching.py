from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from promptelicit.errors import MatcherError
from promptelicit.matching import (RESIDUAL, match_option, normalize_label,
                                   normalize_value, values_match)


def test_normalize_label_lowercases_and_collapses_whitespace():
    assert normalize_label("  Color   Scheme ") == "color scheme"
    assert normalize_label("MOOD") == "mood"
    assert normalize_label("a\tb\nc") == "a b c"


def test_normalize_label_empty_inputs():
    assert normalize_label("") == ""
    assert normalize_label("   \t ") == ""


def test_normalize_value_preserves_case():
    assert normalize_value("  Dark   Blue ") == "Dark Blue"
    assert normalize_value("golden hour") == "golden hour"


def test_values_match_exact_and_substring():
    assert values_match("dark blue", "Dark Blue")
    assert values_match("dark blue", "a dark blue palette")
    assert values_match("a dark blue palette", "dark blue")
    assert not values_match("dark blue", "vibrant orange")
    assert not values_match("", "dark blue")
    assert not values_match("dark blue", "")


def test_match_option_exact_tier_beats_substring_tier():
    # "blue" is a substring of option 0 but an exact match for option 1
    assert match_option("blue", ["dark blue", "blue"]) == 1


def test_match_option_substring_both_directions():
    assert match_option("a dark blue palette", ["dark blue", "orange"]) == 0
    assert match_option("blue", ["dark blue tones", "orange"]) == 0


def test_match_option_first_in_order_wins_within_tier():
    assert match_option("blue", ["dark blue", "light blue"]) == 0


def test_match_option_residual_fallback():
    assert match_option("paw print", ["dark blue", "orange"]) == RESIDUAL


def test_match_option_without_residual_raises():
    with pytest.raises(MatcherError):
        match_option("paw print", ["dark blue", "orange"], has_residual=False)


def test_match_option_empty_value_goes_residual():
    assert match_option("", ["dark blue"]) == RESIDUAL


def test_residual_sentinel_is_negative_one():
    assert RESIDUAL == -1


@given(st.text(max_size=40))
def test_normalize_label_is_idempotent(text):
    once = normalize_label(text)
    assert normalize_label(once) == once


@given(st.text(max_size=40))
def test_normalize_value_is_idempotent(text):
    once = normalize_value(text)
    assert normalize_value(once) == once


@given(st.text(min_size=1, max_size=20),
       st.lists(st.text(min_size=1, max_size=20), min_size=1, max_size=6))
def test_match_option_returns_valid_index_or_residual(value, labels):
    idx = match_option(value, labels)
    assert idx == RESIDUAL or 0 <= idx < len(labels)


@given(st.lists(st.text(min_size=1, max_size=20).filter(lambda s: normalize_label(s)),
                min_size=1, max_size=6))
def test_match_option_finds_exact_label(labels):
    # any option label must classify onto an option, never the residual
    for i, label in enumerate(labels):
        idx = match_option(label, labels)
        assert idx != RESIDUAL
        assert normalize_label(labels[idx]) and (
            normalize_label(labels[idx]) == normalize_label(label)
            or normalize_label(labels[idx]) in normalize_label(label)
            or normalize_label(label) in normalize_label(labels[idx]))
        assert idx <= i
