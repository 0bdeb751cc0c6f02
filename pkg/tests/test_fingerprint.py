import io
import random
import string
import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scriptorium.fingerprint import (
    GramIndex,
    build_index,
    candidates,
    extract_grams,
    fnv1a64,
)
from scriptorium.textprep import EditionPassage, prepare_passage


def prep(text: str, ref: str = "p"):
    return ref, prepare_passage(EditionPassage("w-" + ref, ref, text))


def brute_force_grams(text: str, n: int) -> list[tuple[str, int]]:
    """Independent reference: scan, filter, window."""
    kept = [
        (ch, i)
        for i, ch in enumerate(text)
        if not ch.isspace() and not unicodedata.category(ch).startswith("P")
    ]
    return [
        ("".join(c for c, _ in kept[k : k + n]), kept[k][1])
        for k in range(len(kept) - n + 1)
    ]


def test_too_short_text_yields_nothing():
    assert extract_grams("abcdefghi", 10) == []  # 9 filterable chars


def test_twelve_letters_three_grams():
    grams = extract_grams("abcdefghijkl", 10)
    assert len(grams) == 3
    assert [pos for _, pos in grams] == [0, 1, 2]


def test_positions_map_into_spaced_text():
    text = "ab cd, ef gh ij kl!"
    got = extract_grams(text, 10)
    want = brute_force_grams(text, 10)
    assert [(h, p) for h, p in got] == [
        (fnv1a64(g.encode("utf-8")), p) for g, p in want
    ]


def test_combining_marks_stay_inside_grams():
    plain = extract_grams("abcdefghij", 10)
    marked = extract_grams("ãbcdefghij", 10)
    assert plain[0][0] != marked[0][0]


def test_gram_length_validation():
    with pytest.raises(ValueError):
        extract_grams("abc", 1)


def _corpus_with_shared_gram(n_passages: int):
    shared = "abcdefghij"
    out = []
    for k in range(n_passages):
        filler = f"{k:04d}" + string.ascii_uppercase
        out.append(prep(shared + filler, ref=f"p{k}"))
    return out


def test_doc_freq_cap_boundary_excludes_at_cap():
    # A gram present in exactly 100 passages is dropped ("fewer than 100").
    index = build_index(_corpus_with_shared_gram(100), n=10, doc_freq_cap=100)
    h = fnv1a64(b"abcdefghij")
    assert h not in index.postings


def test_doc_freq_cap_boundary_keeps_below_cap():
    index = build_index(_corpus_with_shared_gram(99), n=10, doc_freq_cap=100)
    h = fnv1a64(b"abcdefghij")
    assert h in index.postings
    assert len({ref for ref, _ in index.postings[h]}) == 99


def test_empty_corpus_empty_index():
    index = build_index([], n=10, doc_freq_cap=100)
    assert index.postings == {}


def test_identical_page_shares_all_windows():
    # 60 distinct filterable characters -> 51 distinct grams, all shared.
    symbols = string.ascii_letters + string.digits
    text = symbols[:60]
    ref, passage = prep(text, "edition")
    index = build_index([(ref, passage)], n=10, doc_freq_cap=100)
    _, page = prep(text, "page")
    found = candidates("page", page, index, min_shared=5)
    assert len(found) == 1
    assert found[0].shared_grams == 51


def test_four_shared_grams_not_a_candidate():
    symbols = string.ascii_letters + string.digits
    shared_run = symbols[:13]  # 13 distinct chars -> 4 ten-grams
    ref, passage = prep(shared_run + "!@#$. " + "uvwxyzUVWXYZ0123", "e")
    index = build_index([(ref, passage)], n=10, doc_freq_cap=100)
    _, page = prep(shared_run, "page")
    assert extract_grams(page.text, 10).__len__() == 4
    assert candidates("page", page, index, min_shared=5) == []
    assert len(candidates("page", page, index, min_shared=4)) == 1


def test_unrelated_text_no_candidates():
    ref, passage = prep("abcdefghij" * 6, "e")
    index = build_index([(ref, passage)], n=10, doc_freq_cap=100)
    _, page = prep("KLMNOPQRST" * 6, "page")
    assert candidates("page", page, index, min_shared=1) == []


def test_candidates_sorted_by_shared_desc():
    a = prep(string.ascii_lowercase, "a")
    b = prep(string.ascii_lowercase[:15] + "0123456789XYZ", "b")
    index = build_index([a, b], n=10, doc_freq_cap=100)
    _, page = prep(string.ascii_lowercase, "page")
    found = candidates("page", page, index, min_shared=1)
    assert [c.passage_ref for c in found] == ["a", "b"]
    assert found[0].shared_grams > found[1].shared_grams


def test_save_load_round_trip():
    corpus = _corpus_with_shared_gram(7)
    index = build_index(corpus, n=10, doc_freq_cap=100)
    buf = io.BytesIO()
    index.save(buf)
    buf.seek(0)
    loaded = GramIndex.load(buf)
    assert loaded.n == index.n
    assert loaded.doc_freq_cap == index.doc_freq_cap
    assert {h: sorted(p) for h, p in loaded.postings.items()} == {
        h: sorted(p) for h, p in index.postings.items()
    }


def test_load_rejects_garbage():
    with pytest.raises(ValueError):
        GramIndex.load(io.BytesIO(b"not an index"))


# -- properties ---------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_determinism_over_random_corpora(seed):
    rng = random.Random(seed)
    texts = [
        "".join(rng.choice("abcdef ghi") for _ in range(rng.randint(0, 80)))
        for _ in range(rng.randint(0, 8))
    ]
    corpus = [prep(t, f"p{k}") for k, t in enumerate(texts) if t.strip()]
    i1 = build_index(corpus, n=4, doc_freq_cap=50)
    i2 = build_index(corpus, n=4, doc_freq_cap=50)
    assert i1.postings == i2.postings
    if corpus:
        _, page = prep(texts[0] or "x", "page")
        c1 = candidates("page", page, i1, min_shared=2)
        c2 = candidates("page", page, i2, min_shared=2)
        assert c1 == c2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_min_shared_threshold_never_violated(seed):
    rng = random.Random(seed)
    corpus = [
        prep(
            "".join(rng.choice("abcdefgh ij") for _ in range(rng.randint(20, 120))),
            f"p{k}",
        )
        for k in range(6)
    ]
    index = build_index(corpus, n=5, doc_freq_cap=100)
    _, page = prep("".join(rng.choice("abcdefgh ij") for _ in range(100)), "page")
    min_shared = rng.randint(1, 8)
    for cand in candidates("page", page, index, min_shared=min_shared):
        assert cand.shared_grams >= min_shared


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(5, 9))
def test_recall_floor_verbatim_copy_is_candidate(seed, min_shared):
    # A passage containing >= (min_shared + n - 1) consecutive filterable
    # characters of the page verbatim must always be proposed.
    rng = random.Random(seed)
    n = 6
    run_len = min_shared + n - 1
    # All-distinct characters keep the run's windows distinct, which the
    # floor needs under distinct-hash counting.
    symbols = string.ascii_lowercase + string.digits
    offset = rng.randrange(len(symbols))
    run = (symbols * 2)[offset : offset + run_len]
    passage_text = (
        "".join(rng.choice("qrstuvwxyz") for _ in range(rng.randint(0, 40)))
        + run
        + "".join(rng.choice("qrstuvwxyz") for _ in range(rng.randint(0, 40)))
    )
    page_text = (
        "".join(rng.choice("QRSTUVWXYZ") for _ in range(rng.randint(0, 30)))
        + run
        + "".join(rng.choice("QRSTUVWXYZ") for _ in range(rng.randint(0, 30)))
    )
    ref, passage = prep(passage_text, "edition")
    index = build_index([(ref, passage)], n=n, doc_freq_cap=1000)
    _, page = prep(page_text, "page")
    found = candidates("page", page, index, min_shared=min_shared)
    assert any(c.passage_ref == "edition" for c in found)
