"""Text preparation: canonical decomposition with offset maps back to source lines.

Pages and edition passages are decomposed into canonical form (NFD) before
indexing and alignment, so that diacritic-bearing abbreviation glyphs line up
character by character with their plain counterparts.  Every prepared
character keeps a pointer to the source line and column it came from, which
later stages use to reason about line coverage and to report lineage.

Canonical (not compatibility) decomposition is used on purpose: compatibility
folding would destroy medievalist code points such as U+A76F that carry
abbreviation meaning.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

from .errors import EmptyPage, EmptyPassage, OutOfBounds

DEFAULT_MAIN_ZONES = frozenset({"main", "maintext", "body", "default"})


@dataclass(frozen=True)
class SourceLine:
    text: str
    zone: str = "main"


@dataclass(frozen=True)
class SourcePage:
    """One ATR page: ordered transcription lines tagged with layout zones."""

    doc_id: str
    page_id: str
    lines: tuple[SourceLine, ...]
    language_hint: str | None = None

    @staticmethod
    def from_record(record: dict) -> "SourcePage":
        lines = tuple(
            SourceLine(text=ln["text"], zone=ln.get("zone", "main"))
            for ln in record["lines"]
        )
        return SourcePage(
            doc_id=record["doc_id"],
            page_id=record["page_id"],
            lines=lines,
            language_hint=record.get("language"),
        )


@dataclass(frozen=True)
class EditionPassage:
    """A chunk of a digital edition, offset into the full work text."""

    work_id: str
    passage_id: str
    text: str
    char_offset: int = 0
    language: str | None = None

    def __post_init__(self):
        if self.char_offset < 0:
            raise ValueError("char_offset must be >= 0")


@dataclass
class PreparedText:
    """Canonically decomposed text plus a per-character origin map.

    ``origins[i]`` is the ``(line, column)`` of the source character that
    produced prepared character ``i``.  Joining newlines inserted between page
    lines map to the end of the preceding source line and are flagged in
    ``synthetic`` so round-trips can skip them.
    """

    text: str
    origins: tuple[tuple[int, int], ...]
    origin: SourcePage | EditionPassage | None = None
    synthetic: frozenset[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.text)

    def line_of(self, index: int) -> int:
        return self.origins[index][0]


def _decompose_with_origins(
    chars: list[tuple[str, tuple[int, int]]],
) -> list[tuple[str, tuple[int, int]]]:
    """Fully decompose tagged characters, preserving origin bindings.

    Decomposition is applied per source character (each produced character
    inherits the source origin), then the canonical reordering pass sorts
    runs of combining marks by combining class, carrying origins along.  The
    resulting string is byte-identical to decomposing the concatenated text
    in one go.
    """
    out: list[tuple[str, tuple[int, int]]] = []
    for ch, origin in chars:
        for piece in unicodedata.normalize("NFD", ch):
            out.append((piece, origin))
    # Canonical ordering: bubble adjacent marks whose combining classes are
    # out of order. Runs of marks are short, so this converges immediately.
    changed = True
    while changed:
        changed = False
        for i in range(len(out) - 1):
            ca = unicodedata.combining(out[i][0])
            cb = unicodedata.combining(out[i + 1][0])
            if ca > cb > 0:
                out[i], out[i + 1] = out[i + 1], out[i]
                changed = True
    return out


def _clamp_monotone(
    pieces: list[tuple[str, tuple[int, int]]],
) -> list[tuple[str, tuple[int, int]]]:
    # Mark reordering across source-character boundaries can only happen when
    # the source itself was not canonically ordered; clamp so the offset map
    # stays non-decreasing even then.
    result: list[tuple[str, tuple[int, int]]] = []
    prev = (0, 0)
    for ch, origin in pieces:
        if origin < prev:
            origin = prev
        result.append((ch, origin))
        prev = origin
    return result


def prepare_page(
    page: SourcePage, zone_filter: frozenset[str] | set[str] = DEFAULT_MAIN_ZONES
) -> PreparedText:
    """Assemble the main text of a page in reading order and decompose it.

    Lines whose zone is not in ``zone_filter`` (headers, marginalia,
    interlinear notes) are dropped.  Kept lines are joined by single newlines;
    each newline maps to the end of the preceding source line.

    Raises:
        EmptyPage: if no line survives filtering.
    """
    tagged: list[tuple[str, tuple[int, int]]] = []
    kept_any = False
    last_kept: int | None = None
    for line_idx, line in enumerate(page.lines):
        if line.zone not in zone_filter:
            continue
        if kept_any:
            tagged.append(("\n", (last_kept, len(page.lines[last_kept].text))))
        for col, ch in enumerate(line.text):
            tagged.append((ch, (line_idx, col)))
        kept_any = True
        last_kept = line_idx
    if not kept_any:
        raise EmptyPage(f"page {page.doc_id}/{page.page_id}: no main-text line")

    pieces = _clamp_monotone(_decompose_with_origins(tagged))
    # Joining newlines are the ones whose origin column sits past the end of
    # their source line; a literal newline inside a line keeps its column.
    syn = frozenset(
        i
        for i, (ch, origin) in enumerate(pieces)
        if ch == "\n" and origin[1] >= len(page.lines[origin[0]].text)
    )
    return PreparedText(
        text="".join(ch for ch, _ in pieces),
        origins=tuple(origin for _, origin in pieces),
        origin=page,
        synthetic=syn,
    )


def prepare_passage(passage: EditionPassage) -> PreparedText:
    """Decompose an edition passage; offsets use the (0, char_offset + i) convention.

    Raises:
        EmptyPassage: on empty input text.
    """
    if not passage.text:
        raise EmptyPassage(f"passage {passage.work_id}/{passage.passage_id} is empty")
    tagged = [
        (ch, (0, passage.char_offset + i)) for i, ch in enumerate(passage.text)
    ]
    pieces = _clamp_monotone(_decompose_with_origins(tagged))
    return PreparedText(
        text="".join(ch for ch, _ in pieces),
        origins=tuple(origin for _, origin in pieces),
        origin=passage,
    )


def map_back(
    prepared: PreparedText, start: int, end: int
) -> list[tuple[int, tuple[int, int]]]:
    """Map a prepared-text span back to source ``(line, (col_start, col_end))`` ranges.

    Ranges are half-open over source columns, emitted in order, one entry per
    source line touched.  Synthetic newlines contribute nothing.

    Raises:
        OutOfBounds: if the span exceeds the prepared text.
    """
    if start < 0 or end > len(prepared.text) or start > end:
        raise OutOfBounds(f"span [{start}, {end}) outside text of length {len(prepared.text)}")
    ranges: list[tuple[int, tuple[int, int]]] = []
    for i in range(start, end):
        if i in prepared.synthetic:
            continue
        line, col = prepared.origins[i]
        if ranges and ranges[-1][0] == line:
            prev_line, (c0, c1) = ranges[-1]
            ranges[-1] = (prev_line, (c0, max(c1, col + 1)))
        else:
            ranges.append((line, (col, col + 1)))
    return ranges
