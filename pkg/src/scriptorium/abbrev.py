"""Token-level alignment inside a pair and over-normalization statistics.

Each whitespace token of the graphemic source is projected through the
character alignment onto the normalized target and classified: identical,
abbreviation resolution (the token differs and carries an abbreviation
marker), substitution (differs with no marker present: the over-
normalization signal), or an indel.  Corpus-level statistics aggregate the
per-pair substitution fraction by language.
"""

from __future__ import annotations

import importlib.resources
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from statistics import mean, median
from typing import Iterable

from .aligner import AlignParams, CharAlignment, align
from .pairbuilder import AlignedPair

IDENTICAL = "identical"
ABBREV = "abbrev_resolution"
SUBSTITUTION = "substitution"
INSERTION = "insertion"
DELETION = "deletion"

_TOKEN_RE = re.compile(r"\S+")


class MarkerTable:
    """Code points that signal an abbreviation (combining marks, sigla).

    Loaded from a versioned TSV so the list can be extended without code
    changes.  Entries must not overlap.
    """

    def __init__(self, entries: list[tuple[int, int]], version: str = "unversioned"):
        spans = sorted(entries)
        for (a1, b1), (a2, _) in zip(spans, spans[1:]):
            if a2 <= b1:
                raise ValueError(
                    f"marker entries overlap: {a1:04X}..{b1:04X} and {a2:04X}.."
                )
        self.entries = spans
        self.version = version
        self._singles = {a for a, b in spans if a == b}
        self._ranges = [(a, b) for a, b in spans if a != b]

    def is_marker(self, ch: str) -> bool:
        cp = ord(ch)
        if cp in self._singles:
            return True
        return any(a <= cp <= b for a, b in self._ranges)

    def has_marker(self, token: str) -> bool:
        return any(self.is_marker(ch) for ch in token)

    @classmethod
    def parse(cls, text: str) -> "MarkerTable":
        version = "unversioned"
        entries: list[tuple[int, int]] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.search(r"version\s+(\S+)", line)
                if m:
                    version = m.group(1)
                continue
            kind, codepoints, *_ = line.split("\t")
            if kind == "range":
                lo, hi = codepoints.split("..")
                entries.append((int(lo, 16), int(hi, 16)))
            elif kind == "char":
                cp = int(codepoints, 16)
                entries.append((cp, cp))
            else:
                raise ValueError(f"unknown marker entry kind {kind!r}")
        return cls(entries, version=version)

    @classmethod
    def default(cls) -> "MarkerTable":
        data = (
            importlib.resources.files("scriptorium")
            .joinpath("data/markers.tsv")
            .read_text(encoding="utf-8")
        )
        return cls.parse(data)

    def to_record(self) -> dict:
        return {
            "version": self.version,
            "entries": [
                {"from": f"{a:04X}", "to": f"{b:04X}"} for a, b in self.entries
            ],
        }


@dataclass(frozen=True)
class TokenAlignmentRecord:
    src_token: str
    tgt_token: str
    cls: str

    def to_record(self) -> dict:
        return {"src": self.src_token, "tgt": self.tgt_token, "class": self.cls}


def _tokens_with_spans(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _strip_punct(token: str) -> str:
    chars = list(token)
    while chars and unicodedata.category(chars[0]).startswith("P"):
        chars.pop(0)
    while chars and unicodedata.category(chars[-1]).startswith("P"):
        chars.pop()
    return "".join(chars)


def _char_map(alignment: CharAlignment) -> dict[int, int]:
    """Source index -> target index for Match/Sub ops."""
    mapping: dict[int, int] = {}
    for seg in alignment.segments:
        i, j = seg.src_start, seg.tgt_start
        for op in seg.ops:
            if op in "MS":
                mapping[i] = j
            if op in "MSD":
                i += 1
            if op in "MSI":
                j += 1
    return mapping


def align_tokens(
    pair: AlignedPair,
    char_alignment: CharAlignment | None = None,
    markers: MarkerTable | None = None,
    case_fold: bool = False,
) -> list[TokenAlignmentRecord]:
    """Project source tokens onto target tokens and classify each one.

    Target spans snap outward to whole target tokens.  Source tokens mapping
    to nothing become deletions; target tokens claimed by no source token
    become insertions.  Comparison strips outer punctuation; the recorded
    tokens keep it.
    """
    markers = markers or MarkerTable.default()
    if char_alignment is None:
        char_alignment = align(
            pair.src, pair.tgt, AlignParams(beam_width=200, min_align_chars=1)
        )
        if char_alignment is None:  # pragma: no cover - min_align_chars=1
            return []

    src_tokens = _tokens_with_spans(pair.src)
    tgt_tokens = _tokens_with_spans(pair.tgt)
    mapping = _char_map(char_alignment)

    # Which target token owns each target character.
    tgt_owner: dict[int, int] = {}
    for t_idx, (_, a, b) in enumerate(tgt_tokens):
        for k in range(a, b):
            tgt_owner[k] = t_idx

    records: list[TokenAlignmentRecord] = []
    record_tgt_start: list[int | None] = []
    claimed: set[int] = set()
    for tok, a, b in src_tokens:
        hit_tokens = sorted(
            {
                tgt_owner[mapping[i]]
                for i in range(a, b)
                if i in mapping and mapping[i] in tgt_owner
            }
        )
        if not hit_tokens:
            records.append(TokenAlignmentRecord(tok, "", DELETION))
            record_tgt_start.append(None)
            continue
        claimed.update(hit_tokens)
        tgt_text = " ".join(tgt_tokens[t][0] for t in hit_tokens)
        cmp_src = _strip_punct(tok)
        cmp_tgt = _strip_punct(tgt_text)
        if case_fold:
            cmp_src, cmp_tgt = cmp_src.casefold(), cmp_tgt.casefold()
        if cmp_src == cmp_tgt:
            cls = IDENTICAL
        elif markers.has_marker(tok):
            cls = ABBREV
        else:
            cls = SUBSTITUTION
        records.append(TokenAlignmentRecord(tok, tgt_text, cls))
        record_tgt_start.append(tgt_tokens[hit_tokens[0]][1])

    # Weave unclaimed target tokens in as insertions, by target order.
    for t_idx, (tok, a, _) in enumerate(tgt_tokens):
        if t_idx in claimed:
            continue
        pos = len(records)
        for r_idx, start in enumerate(record_tgt_start):
            if start is not None and start > a:
                pos = r_idx
                break
        records.insert(pos, TokenAlignmentRecord("", tok, INSERTION))
        record_tgt_start.insert(pos, a)
    return records


@dataclass
class LanguageStats:
    fractions: list[float] = field(default_factory=list)

    def merge(self, other: "LanguageStats") -> None:
        self.fractions.extend(other.fractions)

    def summary(self, bins: int = 10) -> dict:
        if not self.fractions:
            return {"pairs": 0, "mean": None, "median": None, "histogram": []}
        edges = [i / bins for i in range(bins + 1)]
        counts = [0] * bins
        for f in self.fractions:
            slot = min(int(f * bins), bins - 1)
            counts[slot] += 1
        return {
            "pairs": len(self.fractions),
            "mean": mean(self.fractions),
            "median": median(self.fractions),
            "histogram": [
                {"lo": edges[i], "hi": edges[i + 1], "count": counts[i]}
                for i in range(bins)
            ],
        }


@dataclass
class SubstitutionStats:
    """Per-pair substitution fractions aggregated overall and by language."""

    by_language: dict[str, LanguageStats] = field(default_factory=dict)
    overall: LanguageStats = field(default_factory=LanguageStats)
    class_counts: Counter = field(default_factory=Counter)

    def add(self, language: str, fraction: float, classes: Counter | None = None) -> None:
        self.overall.fractions.append(fraction)
        self.by_language.setdefault(language, LanguageStats()).fractions.append(fraction)
        if classes:
            self.class_counts.update(classes)

    def merge(self, other: "SubstitutionStats") -> None:
        self.overall.merge(other.overall)
        for lang, stats in other.by_language.items():
            self.by_language.setdefault(lang, LanguageStats()).merge(stats)
        self.class_counts.update(other.class_counts)

    def to_record(self, bins: int = 10) -> dict:
        return {
            "overall": self.overall.summary(bins),
            "by_language": {
                lang: st.summary(bins) for lang, st in sorted(self.by_language.items())
            },
            "class_counts": dict(sorted(self.class_counts.items())),
        }


def substitution_stats(
    pairs: Iterable[tuple[AlignedPair, CharAlignment | None]],
    markers: MarkerTable | None = None,
    case_fold: bool = False,
) -> SubstitutionStats:
    """Fraction of marker-free differing tokens per pair, aggregated.

    The fraction's denominator is the source token count.  Pairs may carry a
    precomputed character alignment; otherwise one is computed on the fly.
    """
    markers = markers or MarkerTable.default()
    stats = SubstitutionStats()
    for pair, alignment in pairs:
        records = align_tokens(pair, alignment, markers, case_fold)
        n_src = sum(1 for r in records if r.cls != INSERTION)
        if n_src == 0:
            continue
        n_sub = sum(1 for r in records if r.cls == SUBSTITUTION)
        stats.add(
            pair.language,
            n_sub / n_src,
            Counter(r.cls for r in records),
        )
    return stats
