"""Hashed character n-gram index over edition passages.

The index is the recall stage of the pipeline: it proposes (page, passage)
candidate pairs cheaply so that the expensive character aligner only runs on
plausible matches.  Grams are drawn from text with whitespace and punctuation
removed; combining marks stay inside grams because abbreviation diacritics
carry matching signal.  Grams occurring in too many passages are dropped as
non-discriminative.

Hash function: 64-bit FNV-1a over the UTF-8 bytes of the gram.  Collisions
are tolerated; the aligner verifies every candidate.

On-disk layout (single binary file, little-endian):

    magic          4 bytes  b"SGIX"
    version        u16      currently 1
    n              u16      gram length
    doc_freq_cap   u32
    ref count      u32      number of passage refs
    refs           ref count x (u16 length + UTF-8 bytes)
    posting count  u64      number of distinct gram hashes
    postings       count x (u64 hash, u32 entries,
                            entries x (u32 ref index, u32 position))
"""

from __future__ import annotations

import struct
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

from .textprep import PreparedText

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_MAGIC = b"SGIX"
_VERSION = 1

# Medieval punctuation not covered by general category P (punctus elevatus
# and friends live in Supplemental Punctuation and are P* already; this list
# exists for corpus-specific extensions).
DEFAULT_EXTRA_PUNCTUATION: frozenset[str] = frozenset()

_N_SHARDS = 8


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def _is_filtered(ch: str, extra_punctuation: frozenset[str]) -> bool:
    if ch.isspace() or ch in extra_punctuation:
        return True
    return unicodedata.category(ch).startswith("P")


def extract_grams(
    text: str,
    n: int,
    extra_punctuation: frozenset[str] = DEFAULT_EXTRA_PUNCTUATION,
) -> list[tuple[int, int]]:
    """Hash every window of n consecutive filterable characters.

    Whitespace and punctuation are skipped; positions refer to the window's
    first kept character in the original, unstripped text.  Texts with fewer
    than n filterable characters yield an empty list.
    """
    if n < 2:
        raise ValueError("gram length must be >= 2")
    kept: list[tuple[str, int]] = [
        (ch, i) for i, ch in enumerate(text) if not _is_filtered(ch, extra_punctuation)
    ]
    grams: list[tuple[int, int]] = []
    for start in range(len(kept) - n + 1):
        window = "".join(ch for ch, _ in kept[start : start + n])
        grams.append((fnv1a64(window.encode("utf-8")), kept[start][1]))
    return grams


@dataclass
class GramIndex:
    """Postings from gram hash to (passage ref, position) pairs."""

    n: int = 10
    doc_freq_cap: int = 100
    postings: dict[int, list[tuple[str, int]]] = field(default_factory=dict)

    def save(self, fp: BinaryIO) -> None:
        refs: list[str] = sorted({ref for plist in self.postings.values() for ref, _ in plist})
        ref_ids = {ref: i for i, ref in enumerate(refs)}
        fp.write(_MAGIC)
        fp.write(struct.pack("<HHII", _VERSION, self.n, self.doc_freq_cap, len(refs)))
        for ref in refs:
            raw = ref.encode("utf-8")
            fp.write(struct.pack("<H", len(raw)))
            fp.write(raw)
        fp.write(struct.pack("<Q", len(self.postings)))
        for h in sorted(self.postings):
            plist = self.postings[h]
            fp.write(struct.pack("<QI", h, len(plist)))
            for ref, pos in plist:
                fp.write(struct.pack("<II", ref_ids[ref], pos))

    @staticmethod
    def load(fp: BinaryIO) -> "GramIndex":
        magic = fp.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a gram index file (magic {magic!r})")
        version, n, cap, ref_count = struct.unpack("<HHII", fp.read(12))
        if version != _VERSION:
            raise ValueError(f"unsupported index version {version}")
        refs = []
        for _ in range(ref_count):
            (length,) = struct.unpack("<H", fp.read(2))
            refs.append(fp.read(length).decode("utf-8"))
        (count,) = struct.unpack("<Q", fp.read(8))
        postings: dict[int, list[tuple[str, int]]] = {}
        for _ in range(count):
            h, entries = struct.unpack("<QI", fp.read(12))
            plist = []
            for _ in range(entries):
                ref_id, pos = struct.unpack("<II", fp.read(8))
                plist.append((refs[ref_id], pos))
            postings[h] = plist
        return GramIndex(n=n, doc_freq_cap=cap, postings=postings)


def build_index(
    passages: Iterable[tuple[str, PreparedText]],
    n: int = 10,
    doc_freq_cap: int = 100,
    extra_punctuation: frozenset[str] = DEFAULT_EXTRA_PUNCTUATION,
) -> GramIndex:
    """Index passages by hashed character n-grams.

    Built shard-by-shard over hash ranges, then merged; the document
    frequency cap is applied after the merge, dropping every gram whose
    distinct-passage count reaches ``doc_freq_cap``.
    """
    shards: list[dict[int, list[tuple[str, int]]]] = [defaultdict(list) for _ in range(_N_SHARDS)]
    doc_freq: dict[int, set[str]] = defaultdict(set)
    for ref, prepared in passages:
        for h, pos in extract_grams(prepared.text, n, extra_punctuation):
            shards[h >> 61][h].append((ref, pos))
            doc_freq[h].add(ref)
    postings: dict[int, list[tuple[str, int]]] = {}
    for shard in shards:
        for h, plist in shard.items():
            if len(doc_freq[h]) >= doc_freq_cap:
                continue
            postings[h] = plist
    return GramIndex(n=n, doc_freq_cap=doc_freq_cap, postings=postings)


@dataclass(frozen=True)
class CandidatePair:
    page_ref: str
    passage_ref: str
    shared_grams: int


def candidates(
    page_ref: str,
    page: PreparedText,
    index: GramIndex,
    min_shared: int = 5,
    extra_punctuation: frozenset[str] = DEFAULT_EXTRA_PUNCTUATION,
) -> list[CandidatePair]:
    """Passages sharing at least ``min_shared`` distinct gram hashes with the page.

    Sorted by shared count descending, then passage ref for determinism.
    """
    page_hashes = {h for h, _ in extract_grams(page.text, index.n, extra_punctuation)}
    shared: dict[str, set[int]] = defaultdict(set)
    for h in page_hashes:
        for ref, _ in index.postings.get(h, ()):
            shared[ref].add(h)
    pairs = [
        CandidatePair(page_ref=page_ref, passage_ref=ref, shared_grams=len(hashes))
        for ref, hashes in shared.items()
        if len(hashes) >= min_shared
    ]
    pairs.sort(key=lambda p: (-p.shared_grams, p.passage_ref))
    return pairs
