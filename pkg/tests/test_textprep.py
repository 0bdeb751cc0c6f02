import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scriptorium.errors import EmptyPage, EmptyPassage, OutOfBounds
from scriptorium.textprep import (
    EditionPassage,
    SourceLine,
    SourcePage,
    map_back,
    prepare_page,
    prepare_passage,
)


def page_of(*lines: str, zones: list[str] | None = None) -> SourcePage:
    zones = zones or ["main"] * len(lines)
    return SourcePage(
        "doc", "page", tuple(SourceLine(t, z) for t, z in zip(lines, zones))
    )


def test_two_ascii_lines_offsets():
    prep = prepare_page(page_of("ab", "cd"))
    assert prep.text == "ab\ncd"
    assert prep.origins == ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1))
    assert sorted(prep.synthetic) == [2]


def test_nasalized_vowel_stays_decomposed():
    prep = prepare_page(page_of("cõsul"))
    assert prep.text == "cõsul"
    # One combining mark more than base characters, same origin as its vowel.
    assert prep.origins[1] == prep.origins[2] == (0, 1)


def test_marginalia_only_page_is_empty():
    with pytest.raises(EmptyPage):
        prepare_page(page_of("nota bene", zones=["margin"]))


def test_zone_filter_keeps_reading_order():
    prep = prepare_page(
        page_of("header", "first", "gloss", "second", zones=["margin", "main", "margin", "main"])
    )
    assert prep.text == "first\nsecond"
    assert prep.origins[0] == (1, 0)
    assert prep.origins[6] == (3, 0)


def test_passage_unchanged_when_already_plain():
    prep = prepare_passage(EditionPassage("w", "w:0", "consul"))
    assert prep.text == "consul"


def test_precomposed_acute_decomposes():
    # Reference check against the Unicode decomposition table for U+00E9.
    reference = unicodedata.decomposition("é").split()
    assert [int(x, 16) for x in reference] == [0x65, 0x0301]
    prep = prepare_passage(EditionPassage("w", "w:0", "café", char_offset=4))
    assert [ord(c) for c in prep.text] == [0x63, 0x61, 0x66, 0x65, 0x301]
    assert prep.origins[-1] == (0, 7)  # the mark keeps its source column


def test_decomposed_input_is_unchanged():
    prep = prepare_passage(EditionPassage("w", "w:0", "c̃"))
    assert prep.text == "c̃"


def test_empty_passage_rejected():
    with pytest.raises(EmptyPassage):
        prepare_passage(EditionPassage("w", "w:0", ""))


def test_map_back_single_line():
    prep = prepare_page(page_of("ab", "cd"))
    assert map_back(prep, 3, 5) == [(1, (0, 2))]


def test_map_back_full_text_covers_all_lines():
    prep = prepare_page(page_of("ab", "cd"))
    assert map_back(prep, 0, 5) == [(0, (0, 2)), (1, (0, 2))]


def test_map_back_straddles_newline():
    prep = prepare_page(page_of("ab", "cd"))
    # Span "b\nc": the synthetic newline contributes nothing.
    assert map_back(prep, 1, 4) == [(0, (1, 2)), (1, (0, 1))]


def test_map_back_out_of_bounds():
    prep = prepare_page(page_of("ab"))
    with pytest.raises(OutOfBounds):
        map_back(prep, 0, 10)


# -- properties ---------------------------------------------------------------

text_strategy = st.text(
    alphabet=st.sampled_from(
        "abcdefgh éõ̃́ꝯꝰł⁊æḍ"
    ),
    min_size=1,
    max_size=60,
)


@settings(max_examples=200)
@given(text_strategy)
def test_prepared_text_is_nfd(text):
    prep = prepare_passage(EditionPassage("w", "w:0", text))
    assert prep.text == unicodedata.normalize("NFD", text)


@settings(max_examples=200)
@given(text_strategy)
def test_preparation_is_idempotent(text):
    once = prepare_passage(EditionPassage("w", "w:0", text))
    twice = prepare_passage(EditionPassage("w", "w:1", once.text))
    assert twice.text == once.text


@settings(max_examples=200)
@given(text_strategy)
def test_base_character_count_preserved(text):
    prep = prepare_passage(EditionPassage("w", "w:0", text))
    bases_in = sum(1 for ch in text if not unicodedata.combining(ch))
    bases_out = sum(1 for ch in prep.text if not unicodedata.combining(ch))
    assert bases_in == bases_out


@settings(max_examples=200)
@given(st.lists(st.text(alphabet="ab éõ", min_size=1, max_size=12), min_size=1, max_size=5))
def test_offsets_total_and_monotone(lines):
    prep = prepare_page(page_of(*lines))
    assert len(prep.origins) == len(prep.text)
    assert list(prep.origins) == sorted(prep.origins)


@settings(max_examples=150)
@given(
    st.lists(st.text(alphabet="abcõéd ", min_size=1, max_size=10), min_size=1, max_size=4),
    st.data(),
)
def test_round_trip_through_map_back(lines, data):
    page = page_of(*lines)
    prep = prepare_page(page)
    start = data.draw(st.integers(0, len(prep.text)))
    end = data.draw(st.integers(start, len(prep.text)))
    # Snap to source-character boundaries: a span that splits one source
    # character's decomposition cannot round-trip below character level.
    while 0 < start < len(prep.text) and prep.origins[start - 1] == prep.origins[start]:
        start -= 1
    while 0 < end < len(prep.text) and prep.origins[end - 1] == prep.origins[end]:
        end += 1
    pieces = []
    for line_idx, (c0, c1) in map_back(prep, start, end):
        pieces.append(page.lines[line_idx].text[c0:c1])
    rebuilt = unicodedata.normalize("NFD", "".join(pieces))
    span = "".join(
        ch for i, ch in enumerate(prep.text[start:end]) if (start + i) not in prep.synthetic
    )
    assert rebuilt == span
