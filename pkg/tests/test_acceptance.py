"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (see conftest).  Timings are asserted
inside the tests themselves.
"""

import random
import time
import unicodedata
from collections import Counter

import pytest

from scriptorium.aligner import AlignParams, align, align_exhaustive
from scriptorium.abbrev import MarkerTable, substitution_stats
from scriptorium.config import PipelineConfig
from scriptorium.io import read_jsonl, write_jsonl
from scriptorium.metrics import bow, cer, wer
from scriptorium.normalize import normalize_rules, validate_against_task
from scriptorium.pipeline import run_stage
from scriptorium.review import ReviewStore
from test_metrics import brute_force_bow, brute_force_levenshtein
from test_review import make_pair

from synth import make_corpus, make_substitution_pairs


def test_metric_exactness_against_brute_force():
    """cer/wer equal a brute-force DP oracle on 1,000 random pairs
    (lengths 0-200); bow matches direct counting on 1,000 random label
    sequences; all inside 30 seconds."""
    started = time.monotonic()
    rng = random.Random(20250810)
    for k in range(1000):
        a = "".join(rng.choice("abcdef ") for _ in range(rng.randint(0, 200)))
        b = "".join(rng.choice("abcdef ") for _ in range(rng.randint(1, 200)))
        assert cer(a, b) == brute_force_levenshtein(a, b) / len(b)
        if k % 4 == 0:
            gold_tokens = b.split()
            if gold_tokens:
                expected = brute_force_levenshtein(a.split(), gold_tokens) / len(gold_tokens)
                assert wer(a, b) == expected
    for _ in range(1000):
        gold = [rng.choice("abcde") for _ in range(rng.randint(0, 60))]
        pred = [rng.choice("abcde") for _ in range(rng.randint(0, 60))]
        report = bow(gold, pred)
        tp, precision, recall = brute_force_bow(gold, pred)
        assert report.tp == tp
        assert report.precision == pytest.approx(precision)
        assert report.recall == pytest.approx(recall)
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"metric exactness took {elapsed:.1f}s"


def test_bow_worked_example():
    """G=[a,a,b], P=[a,b,b]: precision = recall = 2/3 exactly."""
    report = bow(["a", "a", "b"], ["a", "b", "b"])
    assert report.tp == 2
    assert report.precision == 2 / 3
    assert report.recall == 2 / 3


def test_aligner_oracle_equivalence_500_pairs():
    """Beam score equals the exhaustive optimum on 500 random pairs of up
    to 200 characters with beam_width >= target length; under 2 minutes."""
    started = time.monotonic()
    rng = random.Random(99)
    agreements = 0
    for _ in range(500):
        src = "".join(rng.choice("abcdefg ") for _ in range(rng.randint(1, 200)))
        tgt = "".join(rng.choice("abcdefg ") for _ in range(rng.randint(1, 200)))
        params = AlignParams(beam_width=len(tgt) + 1, min_align_chars=1)
        beam = align(src, tgt, params)
        oracle = align_exhaustive(src, tgt, params)
        if beam is not None and abs(beam.score - oracle.score) < 1e-9:
            agreements += 1
    elapsed = time.monotonic() - started
    assert agreements == 500, f"only {agreements}/500 agreed with the oracle"
    assert elapsed < 120.0, f"oracle equivalence took {elapsed:.1f}s"


def test_synthetic_recovery_full_pipeline(tmp_path):
    """Planted 10%-noise excerpts of 200 editions in 500 pages: the
    index->candidates->align->pairs pipeline links >= 95% of pages to their
    source edition, links none to a wrong edition, and every emitted pair
    stays within [300, 1000] source bytes; under 5 minutes."""
    started = time.monotonic()
    corpus = make_corpus(n_editions=200, n_pages=500, noise=0.10, swap_prob=0.3, seed=42)
    write_jsonl(tmp_path / "pages.jsonl", corpus.pages)
    write_jsonl(tmp_path / "editions.jsonl", corpus.editions)
    config = PipelineConfig(
        pages=str(tmp_path / "pages.jsonl"),
        editions=str(tmp_path / "editions.jsonl"),
        workdir=str(tmp_path / "work"),
        seed=1,
    ).validate()
    for stage in ("prep", "index", "candidates", "align", "pairs"):
        run_stage(stage, config)

    pairs = list(read_jsonl(config.stage_dir("pairs") / "pairs.jsonl"))
    assert pairs, "pipeline emitted no pairs"

    bounds_ok = all(300 <= p["src_bytes"] <= 1000 for p in pairs)
    assert bounds_ok, "a pair violated the byte bounds"

    linked: dict[str, set[str]] = {}
    for p in pairs:
        ref = f"{p['lineage']['doc_id']}/{p['lineage']['page_id']}"
        linked.setdefault(ref, set()).add(p["lineage"]["work_id"])
    recovered = sum(
        1 for ref, works in linked.items() if corpus.truth[ref] in works
    )
    recall = recovered / len(corpus.truth)
    false_links = sum(
        1 for ref, works in linked.items() for w in works if w != corpus.truth[ref]
    )
    match_rates_ok = all(p["match_rate"] >= 0.0 for p in pairs)
    elapsed = time.monotonic() - started
    assert recall >= 0.95, f"recovered only {recall:.1%} of planted links"
    assert false_links == 0, f"{false_links} false page-edition links"
    assert match_rates_ok
    assert elapsed < 300.0, f"synthetic recovery took {elapsed:.1f}s"


def test_overnormalization_rates_within_one_point():
    """Planted marker-free substitution rates of 10/30/50% are reported
    within one percentage point per language."""
    for planted in (0.10, 0.30, 0.50):
        pairs = make_substitution_pairs(
            rate=planted, n_pairs=120, tokens_per_pair=80, seed=int(planted * 100)
        )
        stats = substitution_stats((p, None) for p in pairs)
        mean = stats.to_record()["by_language"]["lat"]["mean"]
        assert abs(mean - planted) <= 0.01, (
            f"planted {planted:.0%}, reported {mean:.2%}"
        )


NORMALIZER_TABLE = [
    ("cõsul", "consul"),
    ("młt", "molt"),
    ("voꝰ", "vous"),
    ("uie", "vie"),
    ("q̃", "que"),
]

_MARKER_SEED_ALPHABET = (
    "abcdefgilmnopqrstu " + "̃̄ꝯꝰł⁊ꝛ" + ".,;:!?"
)


def test_rule_normalizer_table_and_invariants():
    """The five reference expansions are exact; punctuation multiset
    invariance and idempotence hold on 10,000 random marker-seeded strings."""
    for source, expected in NORMALIZER_TABLE:
        got = normalize_rules(source).text
        assert got == expected, f"{source!r} -> {got!r}, wanted {expected!r}"

    markers = MarkerTable.default()

    def punct_multiset(s: str) -> Counter:
        return Counter(
            ch
            for ch in s
            if unicodedata.category(ch).startswith("P") and not markers.is_marker(ch)
        )

    rng = random.Random(8)
    for k in range(10_000):
        text = "".join(
            rng.choice(_MARKER_SEED_ALPHABET) for _ in range(rng.randint(0, 40))
        )
        result = normalize_rules(text)
        decomposed = unicodedata.normalize("NFD", text)
        assert punct_multiset(result.text) == punct_multiset(decomposed), repr(text)
        assert normalize_rules(result.text).text == result.text, repr(text)


def test_task_violation_detector():
    """Initial expansion and numeral alteration are flagged; identity
    outputs raise nothing."""
    kinds = {v.kind for v in validate_against_task("Stephanus Parisiensis", "S. Parisiensis")}
    assert "initial-expanded" in kinds

    kinds = {v.kind for v in validate_against_task("14 testes adsunt", "xiiij testes adsunt")}
    assert "numeral" in kinds

    rng = random.Random(9)
    for _ in range(500):
        text = "".join(
            rng.choice(_MARKER_SEED_ALPHABET + "SGX.") for _ in range(rng.randint(1, 60))
        )
        assert validate_against_task(text, text) == [], repr(text)


def test_review_store_replay_after_1000_decisions(tmp_path):
    """State rebuilt from the decision log matches live state exactly."""
    store = ReviewStore(tmp_path / "store")
    store.add_pairs([make_pair(f"p{k}", work=f"w{k % 7}") for k in range(120)])
    rng = random.Random(10)
    for _ in range(1000):
        pid = f"p{rng.randrange(120)}"
        status = rng.choice(["accepted", "rejected", "edited", "pending"])
        kwargs = {}
        if status == "edited":
            if rng.random() < 0.5:
                kwargs["corrected_target"] = f"t-{rng.random():.6f}"
            else:
                kwargs["corrected_source"] = f"s-{rng.random():.6f}"
        if rng.random() < 0.2:
            kwargs["notes"] = "checked against the facsimile"
        store.decide(pid, status, annotator=f"ann{rng.randrange(4)}", **kwargs)
    rebuilt = store.replay()
    assert rebuilt.statuses() == store.statuses()
    assert rebuilt.stats() == store.stats()
    assert [rebuilt.view(f"p{k}") for k in range(120)] == [
        store.view(f"p{k}") for k in range(120)
    ]
