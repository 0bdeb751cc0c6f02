"""Character-level alignment between an ATR page and an edition passage.

The model consumes the whole page left to right.  Each page character is
matched to, substituted for, or deleted against the passage; passage
characters may be inserted; and a jump transition repositions the passage
cursor anywhere, which makes the aligner robust to passages appearing in a
different order on the page than in the edition.  The initial and final
passage positions are free, so a page aligning to the middle of a passage
pays nothing for the unused flanks.

Costs are additive log-domain penalties (lower is better).  Decoding is a
beam search over source positions: each source row is relaxed densely with
vectorized operations and then pruned to the ``beam_width`` cheapest states,
ties broken toward lower target positions.  State collapses to (source
position, target position) because no cost depends on the previous
operation.

``align_exhaustive`` is the same cost model decoded by full dynamic
programming in plain Python, deliberately sharing no code with the beam:
it exists as an oracle for testing the beam.

Quality gating happens downstream: the aligner reports a match rate and the
pair-building filters decide what survives.  The only gate applied here is
the minimum number of covered source characters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import TooLarge

_EXHAUSTIVE_CELL_CAP = 1_000_000

# Move codes in traceback matrices.
_START, _M, _S, _D, _I, _J = 0, 1, 2, 3, 4, 5


@dataclass(frozen=True)
class AlignParams:
    beam_width: int = 200
    min_align_chars: int = 50
    match: float = 0.0
    substitute: float = 2.0
    insert: float = 3.0
    delete: float = 3.0
    jump_open: float = 10.0
    jump_per_char: float = 0.0

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.min_align_chars < 1:
            raise ValueError("min_align_chars must be >= 1")
        if not (self.match <= self.substitute <= min(self.insert, self.delete)):
            raise ValueError("costs must satisfy match <= substitute <= indels")
        if self.jump_per_char > self.insert:
            # Keeps the within-row relaxation exact (a jump is then never
            # cheaper to split around an insertion run).
            raise ValueError("jump_per_char must not exceed the insert cost")
        if min(self.match, self.substitute, self.insert, self.delete, self.jump_open) < 0:
            raise ValueError("costs must be non-negative")


@dataclass(frozen=True)
class Segment:
    """A jump-free run: contiguous in source and in target."""

    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int
    ops: str  # one of M, S, D, I per consumed character

    def to_record(self) -> dict:
        return {
            "src": [self.src_start, self.src_end],
            "tgt": [self.tgt_start, self.tgt_end],
            "ops": rle_encode(self.ops),
        }

    @staticmethod
    def from_record(rec: dict) -> "Segment":
        return Segment(
            src_start=rec["src"][0],
            src_end=rec["src"][1],
            tgt_start=rec["tgt"][0],
            tgt_end=rec["tgt"][1],
            ops=rle_decode(rec["ops"]),
        )


@dataclass
class CharAlignment:
    segments: list[Segment]
    score: float
    matched_chars: int
    match_rate: float
    src_len: int
    tgt_len: int

    @property
    def covered_src_chars(self) -> int:
        return sum(s.src_end - s.src_start for s in self.segments)

    def to_record(self) -> dict:
        return {
            "score": round(self.score, 6),
            "match_rate": round(self.match_rate, 6),
            "matched_chars": self.matched_chars,
            "src_len": self.src_len,
            "tgt_len": self.tgt_len,
            "segments": [s.to_record() for s in self.segments],
        }

    @staticmethod
    def from_record(rec: dict) -> "CharAlignment":
        return CharAlignment(
            segments=[Segment.from_record(s) for s in rec["segments"]],
            score=rec["score"],
            matched_chars=rec["matched_chars"],
            match_rate=rec["match_rate"],
            src_len=rec["src_len"],
            tgt_len=rec["tgt_len"],
        )


def rle_encode(ops: str) -> str:
    out = []
    for m in re.finditer(r"(.)\1*", ops):
        run = m.group(0)
        out.append(f"{len(run)}{run[0]}")
    return "".join(out)


def rle_decode(encoded: str) -> str:
    return "".join(
        ch * int(count) for count, ch in re.findall(r"(\d+)([MSDI])", encoded)
    )


def _segments_from_ops(ops: list[tuple[int, int, int]]) -> tuple[list[Segment], int]:
    """Turn a time-ordered (move, i, j) trace into segments; returns matched count.

    ``i``/``j`` are the state AFTER the move, so a Match arriving at (i, j)
    consumed src[i-1] and tgt[j-1].
    """
    segments: list[Segment] = []
    matched = 0
    cur_ops: list[str] = []
    src_a = src_b = tgt_a = tgt_b = None

    def flush():
        nonlocal cur_ops, src_a, src_b, tgt_a, tgt_b
        if cur_ops:
            segments.append(
                Segment(
                    src_start=src_a if src_a is not None else 0,
                    src_end=src_b if src_b is not None else (src_a or 0),
                    tgt_start=tgt_a if tgt_a is not None else 0,
                    tgt_end=tgt_b if tgt_b is not None else (tgt_a or 0),
                    ops="".join(cur_ops),
                )
            )
        cur_ops = []
        src_a = src_b = tgt_a = tgt_b = None

    for mv, i, j in ops:
        if mv == _J:
            flush()
            continue
        name = {_M: "M", _S: "S", _D: "D", _I: "I"}[mv]
        if mv == _M:
            matched += 1
        if mv in (_M, _S, _D):
            if src_a is None:
                src_a = i - 1
            src_b = i
        if mv in (_M, _S, _I):
            if tgt_a is None:
                tgt_a = j - 1
            tgt_b = j
        cur_ops.append(name)
    flush()
    # A segment of pure deletions has no target span; anchor it at the cursor.
    fixed = []
    cursor = 0
    for seg in segments:
        if "M" not in seg.ops and "S" not in seg.ops and "I" not in seg.ops:
            seg = Segment(seg.src_start, seg.src_end, cursor, cursor, seg.ops)
        cursor = seg.tgt_end
        fixed.append(seg)
    return fixed, matched


def _finish(
    ops: list[tuple[int, int, int]], score: float, m: int, n: int
) -> CharAlignment:
    segments, matched = _segments_from_ops(ops)
    covered = sum(s.src_end - s.src_start for s in segments)
    rate = matched / covered if covered else 0.0
    return CharAlignment(
        segments=segments,
        score=float(score),
        matched_chars=matched,
        match_rate=rate,
        src_len=m,
        tgt_len=n,
    )


# ---------------------------------------------------------------------------
# Beam decoder (vectorized rows, pruned to beam_width states per source row)
# ---------------------------------------------------------------------------


def align(src: str, tgt: str, params: AlignParams = AlignParams()) -> CharAlignment | None:
    """Best alignment of the whole page ``src`` against passage ``tgt``.

    Returns None when fewer than ``params.min_align_chars`` source characters
    would be covered; absence is a value, not an error.
    """
    if not src or not tgt:
        raise ValueError("both texts must be non-empty")
    m, n = len(src), len(tgt)
    if m < params.min_align_chars:
        return None

    tgt_codes = np.frombuffer(tgt.encode("utf-32-le"), dtype=np.uint32)
    idx = np.arange(n + 1, dtype=np.float64)
    inf = np.inf

    cost = np.zeros(n + 1, dtype=np.float64)  # row 0: free initial position
    mv_final = np.zeros((m + 1, n + 1), dtype=np.uint8)
    mv_cross = np.zeros((m + 1, n + 1), dtype=np.uint8)
    jump_src = np.zeros((m + 1, n + 1), dtype=np.int32)

    for i in range(1, m + 1):
        # Relax the previous row in place: jumps land densely from the kept
        # states (never themselves pruned, so a narrow beam keeps its
        # long-range re-entry), then insert chains left to right.
        mvf = mv_final[i - 1]
        jsr = jump_src[i - 1]
        if params.jump_per_char == 0.0:
            base = float(cost.min())
            arg = int(cost.argmin())
            jump_val = np.full(n + 1, base + params.jump_open)
            jump_arg = np.full(n + 1, arg, dtype=np.int32)
        else:
            jump_val, jump_arg = _slope_min(cost, idx, params.jump_per_char)
            jump_val = jump_val + params.jump_open
        take_j = jump_val < cost
        cost = np.where(take_j, jump_val, cost)
        mvf[take_j] = _J
        jsr[take_j] = jump_arg[take_j]

        ins_val, _ = _slope_min(cost, idx, params.insert, backward=False)
        take_i = ins_val < cost
        cost = np.where(take_i, ins_val, cost)
        mvf[take_i] = _I

        # Cross-row moves; ties prefer Match/Sub over Del.
        src_code = ord(src[i - 1])
        is_match = tgt_codes == src_code
        step = np.where(is_match, params.match, params.substitute)
        new = cost + params.delete
        mvc = np.full(n + 1, _D, dtype=np.uint8)
        diag = cost[:-1] + step
        take = diag <= new[1:]
        new[1:] = np.where(take, diag, new[1:])
        mvc[1:] = np.where(take, np.where(is_match, _M, _S), mvc[1:])

        # Beam prune: keep the beam_width cheapest states, lower j first.
        if params.beam_width < n + 1:
            order = np.lexsort((idx, new))
            new[order[params.beam_width :]] = inf

        mv_cross[i] = mvc
        mv_final[i] = mvc
        cost = new

    end_j = int(np.lexsort((idx, cost))[0])
    score = float(cost[end_j])
    ops = _traceback(mv_final, mv_cross, jump_src, m, end_j)
    alignment = _finish(ops, score, m, n)
    if alignment.covered_src_chars < params.min_align_chars:
        return None
    return alignment


def _slope_min(
    values: np.ndarray, idx: np.ndarray, slope: float, backward: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """min_k values[k] + slope * |j - k| per j, with the achieving k.

    With ``backward`` False only k <= j is considered (insert chains move
    right).  Ties resolve to the lowest k.
    """

    def one_way(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        shifted = vals - slope * idx
        run = np.minimum.accumulate(shifted)
        fresh = np.empty(len(vals), dtype=bool)
        fresh[0] = True
        fresh[1:] = run[1:] < run[:-1]
        args = np.maximum.accumulate(np.where(fresh, np.arange(len(vals)), 0))
        return run + slope * idx, args

    fwd_val, fwd_arg = one_way(values)
    if not backward:
        return fwd_val, fwd_arg
    rev_val, rev_arg = one_way(values[::-1])
    bwd_val = rev_val[::-1]
    bwd_arg = (len(values) - 1) - rev_arg[::-1]
    use_bwd = bwd_val < fwd_val
    return np.where(use_bwd, bwd_val, fwd_val), np.where(use_bwd, bwd_arg, fwd_arg)


def _traceback(
    mv_final: np.ndarray,
    mv_cross: np.ndarray,
    jump_src: np.ndarray,
    m: int,
    end_j: int,
) -> list[tuple[int, int, int]]:
    ops: list[tuple[int, int, int]] = []
    i, j = m, end_j
    use_cross = False
    while i > 0:
        mv = int(mv_cross[i, j] if use_cross else mv_final[i, j])
        use_cross = False
        if mv in (_M, _S):
            ops.append((mv, i, j))
            i, j = i - 1, j - 1
        elif mv == _D:
            ops.append((mv, i, j))
            i -= 1
        elif mv == _I:
            ops.append((mv, i, j))
            j -= 1
        elif mv == _J:
            ops.append((mv, i, j))
            j = int(jump_src[i, j])
            use_cross = True  # jump sources were taken before within-row relaxation
        else:  # START only occurs at row 0
            break
    ops.reverse()
    return ops


# ---------------------------------------------------------------------------
# Exhaustive oracle (plain dynamic programming, no pruning, no numpy)
# ---------------------------------------------------------------------------


def align_exhaustive(
    src: str, tgt: str, params: AlignParams = AlignParams()
) -> CharAlignment:
    """Globally optimal alignment by full DP; for small instances and tests.

    Raises:
        TooLarge: when len(src) * len(tgt) exceeds one million cells.
    """
    if not src or not tgt:
        raise ValueError("both texts must be non-empty")
    m, n = len(src), len(tgt)
    if m * n > _EXHAUSTIVE_CELL_CAP:
        raise TooLarge(f"{m} x {n} exceeds the exhaustive-alignment cap")

    inf = float("inf")
    prev = [0.0] * (n + 1)  # free initial target position
    mv_final = [[_START] * (n + 1) for _ in range(m + 1)]
    mv_cross = [[_START] * (n + 1) for _ in range(m + 1)]
    jump_src = [[0] * (n + 1) for _ in range(m + 1)]

    for i in range(1, m + 1):
        s = src[i - 1]
        cur = [inf] * (n + 1)
        mvc = mv_cross[i]
        mvf = mv_final[i]
        jsr = jump_src[i]
        cur[0] = prev[0] + params.delete
        mvc[0] = _D
        for j in range(1, n + 1):
            d = prev[j] + params.delete
            if tgt[j - 1] == s:
                diag = prev[j - 1] + params.match
                diag_mv = _M
            else:
                diag = prev[j - 1] + params.substitute
                diag_mv = _S
            if diag <= d:
                cur[j] = diag
                mvc[j] = diag_mv
            else:
                cur[j] = d
                mvc[j] = _D
        for j in range(n + 1):
            mvf[j] = mvc[j]

        # Jump: land anywhere from the cheapest post-cross state.
        if params.jump_per_char == 0.0:
            best = min(cur)
            arg = cur.index(best)
            jump_to = best + params.jump_open
            for j in range(n + 1):
                if jump_to < cur[j]:
                    cur[j] = jump_to
                    mvf[j] = _J
                    jsr[j] = arg
        else:
            lo_val, lo_arg = _slope_min_py(cur, params.jump_per_char)
            for j in range(n + 1):
                v = lo_val[j] + params.jump_open
                if v < cur[j]:
                    cur[j] = v
                    mvf[j] = _J
                    jsr[j] = lo_arg[j]

        # Insert chains.
        for j in range(1, n + 1):
            v = cur[j - 1] + params.insert
            if v < cur[j]:
                cur[j] = v
                mvf[j] = _I
        prev = cur

    score = min(prev)
    end_j = prev.index(score)
    ops = _traceback_py(mv_final, mv_cross, jump_src, m, end_j)
    return _finish(ops, score, m, n)


def _slope_min_py(values: list[float], slope: float) -> tuple[list[float], list[int]]:
    n = len(values)
    fwd = [0.0] * n
    fwd_arg = [0] * n
    inf_ = float("inf")
    best, arg = inf_, 0
    for j in range(n):
        cand = values[j] - slope * j
        if cand < best:
            best, arg = cand, j
        fwd[j] = best + slope * j
        fwd_arg[j] = arg
    out = list(fwd)
    out_arg = list(fwd_arg)
    best = inf_
    arg = n - 1
    for j in range(n - 1, -1, -1):
        cand = values[j] + slope * j
        if cand < best:
            best, arg = cand, j
        back = best - slope * j
        if back < out[j]:
            out[j] = back
            out_arg[j] = arg
    return out, out_arg


def _traceback_py(
    mv_final: list[list[int]],
    mv_cross: list[list[int]],
    jump_src: list[list[int]],
    m: int,
    end_j: int,
) -> list[tuple[int, int, int]]:
    ops: list[tuple[int, int, int]] = []
    i, j = m, end_j
    use_cross = False
    while i > 0:
        mv = mv_cross[i][j] if use_cross else mv_final[i][j]
        use_cross = False
        if mv in (_M, _S):
            ops.append((mv, i, j))
            i, j = i - 1, j - 1
        elif mv == _D:
            ops.append((mv, i, j))
            i -= 1
        elif mv == _I:
            ops.append((mv, i, j))
            j -= 1
        elif mv == _J:
            ops.append((mv, i, j))
            j = jump_src[i][j]
            use_cross = True
        else:
            break
    ops.reverse()
    return ops
