"""Filtering of raw alignments and re-chunking into bounded training pairs.

An alignment survives only if it shows enough continuously aligned page
lines, a sufficient match rate, and a single source work.  Surviving
alignments are re-cut into pairs whose source side stays within configured
byte bounds, cutting only at whitespace aligned on both sides so no token is
ever split.  Finally a training manifest can be built with per-language
upsampling factors and a recorded shuffle seed.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from .aligner import CharAlignment
from .errors import Unchunkable
from .textprep import EditionPassage, PreparedText, SourcePage

CHUNK_MIN_BYTES = 300
CHUNK_MAX_BYTES = 1000


@dataclass(frozen=True)
class FilterPolicy:
    min_continuous_lines: int = 5
    min_match_rate: float = 0.60
    line_coverage_threshold: float = 0.50
    require_same_work: bool = True

    def __post_init__(self):
        for name in ("min_match_rate", "line_coverage_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")


@dataclass(frozen=True)
class FilterDecision:
    accepted: bool
    reason: str | None = None  # "match_rate" | "work" | "lines"

    def __bool__(self) -> bool:
        return self.accepted


@dataclass(frozen=True)
class AlignedPair:
    pair_id: str
    src: str
    tgt: str
    src_bytes: int
    match_rate: float
    language: str
    lineage: dict

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "src": self.src,
            "tgt": self.tgt,
            "src_bytes": self.src_bytes,
            "match_rate": round(self.match_rate, 6),
            "language": self.language,
            "lineage": self.lineage,
        }

    @staticmethod
    def from_record(rec: dict) -> "AlignedPair":
        return AlignedPair(
            pair_id=rec["pair_id"],
            src=rec["src"],
            tgt=rec["tgt"],
            src_bytes=rec["src_bytes"],
            match_rate=rec["match_rate"],
            language=rec["language"],
            lineage=rec["lineage"],
        )


def covered_src_positions(alignment: CharAlignment) -> set[int]:
    """Source character indices consumed by Match or Sub ops."""
    covered: set[int] = set()
    for seg in alignment.segments:
        i = seg.src_start
        for op in seg.ops:
            if op in "MS":
                covered.add(i)
            if op in "MSD":
                i += 1
    return covered


def filter_alignment(
    alignment: CharAlignment,
    page: PreparedText,
    policy: FilterPolicy = FilterPolicy(),
    segment_works: list[str] | None = None,
) -> FilterDecision:
    """Accept or reject an alignment against the quality policy.

    The line criterion requires ``min_continuous_lines`` consecutive kept
    page lines whose non-space characters are covered by Match/Sub ops at a
    rate of at least ``line_coverage_threshold``.  ``segment_works`` gives
    the work id behind each segment when the caller aligned against stitched
    passages; a single-passage alignment may omit it.
    """
    if alignment.match_rate < policy.min_match_rate:
        return FilterDecision(False, "match_rate")

    if policy.require_same_work and segment_works and len(set(segment_works)) > 1:
        return FilterDecision(False, "work")

    covered = covered_src_positions(alignment)
    totals: dict[int, int] = {}
    hits: dict[int, int] = {}
    line_order: list[int] = []
    for i, ch in enumerate(page.text):
        if i in page.synthetic or ch.isspace():
            continue
        line = page.origins[i][0]
        if line not in totals:
            totals[line] = 0
            hits[line] = 0
            line_order.append(line)
        totals[line] += 1
        if i in covered:
            hits[line] += 1

    run = best = 0
    for line in line_order:
        ok = totals[line] > 0 and hits[line] / totals[line] >= policy.line_coverage_threshold
        run = run + 1 if ok else 0
        best = max(best, run)
    if best < policy.min_continuous_lines:
        return FilterDecision(False, "lines")
    return FilterDecision(True)


def _pair_id(doc_id: str, page_id: str, work_id: str, src_span: tuple[int, int]) -> str:
    raw = f"{doc_id}\x00{page_id}\x00{work_id}\x00{src_span[0]}\x00{src_span[1]}"
    return hashlib.sha1(raw.encode("utf-8")).hexdigest()[:16]


@dataclass
class ChunkLog:
    """What chunking dropped and why; kept beside the emitted pairs."""

    dropped_bytes: int = 0
    dropped_regions: int = 0
    empty_target_chunks: int = 0


def chunk(
    alignment: CharAlignment,
    page: PreparedText,
    passage: PreparedText,
    min_bytes: int = CHUNK_MIN_BYTES,
    max_bytes: int = CHUNK_MAX_BYTES,
    target_bytes: int | None = None,
    log: ChunkLog | None = None,
) -> list[AlignedPair]:
    """Cut an accepted alignment into pairs with bounded source-byte sizes.

    Each jump-free segment is chunked independently (it is contiguous on
    both sides).  Cuts happen only at whitespace characters aligned to
    whitespace, choosing the cut closest to the midpoint target size; a
    trailing remainder below ``min_bytes`` merges into the previous chunk
    when that stays within ``max_bytes`` and is dropped otherwise.

    Raises:
        Unchunkable: when the entire alignment holds fewer source bytes
            than ``min_bytes``.
    """
    if target_bytes is None:
        target_bytes = (min_bytes + max_bytes) // 2
    log = log if log is not None else ChunkLog()

    page_src = page.origin if isinstance(page.origin, SourcePage) else None
    passage_src = passage.origin if isinstance(passage.origin, EditionPassage) else None
    doc_id = page_src.doc_id if page_src else ""
    page_id = page_src.page_id if page_src else ""
    work_id = passage_src.work_id if passage_src else ""
    passage_id = passage_src.passage_id if passage_src else ""
    language = (
        (passage_src.language if passage_src else None)
        or (page_src.language_hint if page_src else None)
        or "und"
    )

    total_bytes = sum(
        len(page.text[seg.src_start : seg.src_end].encode("utf-8"))
        for seg in alignment.segments
    )
    if total_bytes < min_bytes:
        raise Unchunkable(
            f"accepted region holds {total_bytes} bytes, below the {min_bytes}-byte minimum"
        )

    pairs: list[AlignedPair] = []
    for seg in alignment.segments:
        emitted = _chunk_segment(
            seg_ops=seg.ops,
            src_start=seg.src_start,
            tgt_start=seg.tgt_start,
            page_text=page.text,
            passage_text=passage.text,
            min_bytes=min_bytes,
            max_bytes=max_bytes,
            target_bytes=target_bytes,
            log=log,
        )
        for src_span, tgt_span, matched, src_chars in emitted:
            src = page.text[src_span[0] : src_span[1]]
            tgt = passage.text[tgt_span[0] : tgt_span[1]]
            if not tgt.strip():
                log.empty_target_chunks += 1
                continue
            pairs.append(
                AlignedPair(
                    pair_id=_pair_id(doc_id, page_id, work_id, src_span),
                    src=src,
                    tgt=tgt,
                    src_bytes=len(src.encode("utf-8")),
                    match_rate=matched / src_chars if src_chars else 0.0,
                    language=language,
                    lineage={
                        "doc_id": doc_id,
                        "page_id": page_id,
                        "work_id": work_id,
                        "passage_id": passage_id,
                        "src_span": list(src_span),
                        "tgt_span": list(tgt_span),
                    },
                )
            )
    return pairs


def _chunk_segment(
    seg_ops: str,
    src_start: int,
    tgt_start: int,
    page_text: str,
    passage_text: str,
    min_bytes: int,
    max_bytes: int,
    target_bytes: int,
    log: ChunkLog,
) -> list[tuple[tuple[int, int], tuple[int, int], int, int]]:
    """Chunk one segment; yields (src_span, tgt_span, matched, src_chars)."""
    # Per-op bookkeeping: source position, target position, source byte width.
    ops: list[tuple[str, int, int]] = []  # (op, src_idx or -1, tgt_idx or -1)
    cuts: list[int] = []  # indices into ops where a dual-whitespace cut may fall
    i, j = src_start, tgt_start
    for k, op in enumerate(seg_ops):
        si = i if op in "MSD" else -1
        tj = j if op in "MSI" else -1
        ops.append((op, si, tj))
        if op in "MS" and page_text[i].isspace() and passage_text[j].isspace():
            cuts.append(k)
        if op in "MSD":
            i += 1
        if op in "MSI":
            j += 1

    src_bytes_at: list[int] = []  # cumulative source bytes after op k
    total = 0
    for op, si, _ in ops:
        if si >= 0:
            total += len(page_text[si].encode("utf-8"))
        src_bytes_at.append(total)

    if total < min_bytes:
        log.dropped_regions += 1
        log.dropped_bytes += total
        return []

    out: list[tuple[tuple[int, int], tuple[int, int], int, int]] = []

    def emit(op_lo: int, op_hi: int) -> None:
        span_ops = ops[op_lo:op_hi]
        src_idx = [si for _, si, _ in span_ops if si >= 0]
        tgt_idx = [tj for _, _, tj in span_ops if tj >= 0]
        matched = sum(1 for op, _, _ in span_ops if op == "M")
        if not src_idx:
            return
        src_span = (src_idx[0], src_idx[-1] + 1)
        tgt_span = (tgt_idx[0], tgt_idx[-1] + 1) if tgt_idx else (0, 0)
        out.append((src_span, tgt_span, matched, len(src_idx)))

    start_op = 0
    start_bytes = 0
    cut_pos = 0  # index into cuts
    while True:
        remaining = total - start_bytes
        if remaining <= max_bytes:
            if remaining >= min_bytes:
                emit(start_op, len(ops))
            elif out:
                # Trailing remainder: merge into the previous chunk if the
                # merge stays within bounds, otherwise drop it.
                prev_lo = _op_index_of_src(ops, out[-1][0][0])
                merged_bytes = total - src_bytes_at[prev_lo - 1] if prev_lo > 0 else total
                if merged_bytes <= max_bytes:
                    out.pop()
                    emit(prev_lo, len(ops))
                else:
                    log.dropped_bytes += remaining
            else:
                log.dropped_bytes += remaining
            break

        best_k = None
        best_dist = None
        for c in range(cut_pos, len(cuts)):
            k = cuts[c]
            if k < start_op:
                cut_pos = c + 1
                continue
            size = src_bytes_at[k] - start_bytes
            if size < min_bytes:
                continue
            if size > max_bytes:
                break
            dist = abs(size - target_bytes)
            if best_dist is None or dist < best_dist:
                best_k = k
                best_dist = dist
        if best_k is None:
            # No legal cut ahead: the rest of this segment cannot be split
            # without breaking a token.
            log.dropped_regions += 1
            log.dropped_bytes += remaining
            break
        emit(start_op, best_k + 1)
        start_op = best_k + 1
        start_bytes = src_bytes_at[best_k]
    return out


def _op_index_of_src(ops: list[tuple[str, int, int]], src_idx: int) -> int:
    for k, (_, si, _) in enumerate(ops):
        if si == src_idx:
            return k
    return 0


@dataclass
class Manifest:
    seed: int
    entries: list[str] = field(default_factory=list)

    def dump(self) -> str:
        lines = [json.dumps({"seed": self.seed}, sort_keys=True)]
        lines.extend(self.entries)
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse(text: str) -> "Manifest":
        lines = text.splitlines()
        header = json.loads(lines[0])
        return Manifest(seed=header["seed"], entries=[ln for ln in lines[1:] if ln])


def build_manifest(
    pairs: list[AlignedPair] | list[dict],
    upsample: dict[str, int] | None = None,
    seed: int = 0,
) -> Manifest:
    """Repeat each pair id by its language's upsampling factor and shuffle.

    Factors must be integers >= 1; languages without a factor default to 1.
    The shuffle seed is recorded in the manifest header.
    """
    upsample = upsample or {}
    for lang, factor in upsample.items():
        if not isinstance(factor, int) or factor < 1:
            raise ValueError(f"upsample factor for {lang!r} must be an integer >= 1")
    entries: list[str] = []
    for p in pairs:
        if isinstance(p, AlignedPair):
            pid, lang = p.pair_id, p.language
        else:
            pid, lang = p["pair_id"], p["language"]
        entries.extend([pid] * upsample.get(lang, 1))
    random.Random(seed).shuffle(entries)
    return Manifest(seed=seed, entries=entries)
