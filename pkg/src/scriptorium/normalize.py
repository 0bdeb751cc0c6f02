"""Normalizers: a deterministic rule-based baseline and an external adapter.

The rule-based baseline covers the context-free part of pre-editorial
normalization: ramist letters (u/v, i/j) by positional heuristic, marker
expansions from a plain-text rule table, and capitalization after strong
punctuation.  It deliberately refuses the context-sensitive cases: numerals,
single-letter initials and tokens it cannot interpret pass through
unchanged.  Punctuation is never touched.

Context-sensitive normalization (morphosyntax-aware expansion) belongs to
external normalizers, reachable through a line-based subprocess protocol or
a small HTTP protocol; their output is taken verbatim and flagged opaque.

``validate_against_task`` mechanically checks any normalizer's output for
task violations: altered punctuation, altered numerals, expanded initials,
and runaway output length.
"""

from __future__ import annotations

import json
import re
import subprocess
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

import httpx

from .abbrev import MarkerTable
from .errors import EndpointFailure, EndpointTimeout, RuleConflict

_TOKEN_RE = re.compile(r"\S+")


def _sigla() -> frozenset[str]:
    """Abbreviation signs that Unicode categorizes as punctuation (e.g. the
    tironian et): they are words, not punctuation, for every check here."""
    chars = set()
    for lo, hi in MarkerTable.default().entries:
        for cp in range(lo, hi + 1):
            if unicodedata.category(chr(cp)).startswith("P"):
                chars.add(chr(cp))
    return frozenset(chars)


_SIGLA = _sigla()
_VOWELS = "aeiouy"
_ROMAN_VALUES = {"i": 1, "j": 1, "v": 5, "x": 10, "l": 50, "c": 100, "d": 500, "m": 1000}
_ROMAN_STRICT = re.compile(
    r"^m{0,4}(cm|cd|d?c{0,3})(xc|xl|l?x{0,3})(ix|iv|v?i{0,3})$", re.IGNORECASE
)


@dataclass(frozen=True)
class NormalizationRule:
    rule_id: str
    pattern: str
    replacement: str
    where: str = "any"  # any | initial | final
    before: str | None = None  # None | @letter | @vowel | @none | literal chars
    language: str = "any"
    priority: int = 50

    def applies_to(self, language: str) -> bool:
        return self.language == "any" or self.language == language


def _decode_field(raw: str) -> str:
    if "\\u" not in raw and "\\x" not in raw:
        return raw
    return raw.encode("raw_unicode_escape").decode("unicode_escape")


class RuleSet:
    """Ordered, validated normalization rules.

    Order is (priority, longer pattern first, id); at most one rule fires
    per position.  Loading rejects equal-priority rules that could fire on
    the same position with overlapping language scope.
    """

    def __init__(self, rules: list[NormalizationRule]):
        self._check_conflicts(rules)
        self.rules = sorted(
            rules, key=lambda r: (r.priority, -len(r.pattern), r.rule_id)
        )

    @staticmethod
    def _check_conflicts(rules: list[NormalizationRule]) -> None:
        seen: dict[tuple, NormalizationRule] = {}
        for r in rules:
            if any(_is_punct(ch) for ch in r.pattern):
                raise RuleConflict(f"rule {r.rule_id} would rewrite punctuation")
            key = (r.priority, r.pattern, r.where, r.before)
            other = seen.get(key)
            if other and (
                r.language == other.language
                or "any" in (r.language, other.language)
            ):
                raise RuleConflict(
                    f"rules {other.rule_id} and {r.rule_id} overlap at priority {r.priority}"
                )
            seen[key] = r

    @classmethod
    def parse(cls, text: str) -> "RuleSet":
        rules = []
        for line in text.splitlines():
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 7:
                raise ValueError(f"malformed rule line: {line!r}")
            rule_id, pattern, replacement, where, before, language, priority = parts[:7]
            rules.append(
                NormalizationRule(
                    rule_id=rule_id,
                    pattern=_decode_field(pattern),
                    replacement=_decode_field(replacement),
                    where=where,
                    before=None if before == "-" else before,
                    language=language,
                    priority=int(priority),
                )
            )
        return cls(rules)

    @classmethod
    def default(cls) -> "RuleSet":
        data = (
            resources.files("scriptorium")
            .joinpath("data/rules.tsv")
            .read_text(encoding="utf-8")
        )
        return cls.parse(data)


@dataclass
class NormalizerResult:
    text: str
    spans: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)
    applied_rules: list[dict] = field(default_factory=list)
    opaque: bool = False
    warnings: list[str] = field(default_factory=list)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P") and ch not in _SIGLA


def _base_positions(token: str) -> list[int]:
    return [i for i, ch in enumerate(token) if not unicodedata.combining(ch)]


def _is_roman_numeral(word: str) -> bool:
    if not word or any(ch.lower() not in _ROMAN_VALUES for ch in word):
        return False
    if _ROMAN_STRICT.match(word.replace("j", "i").replace("J", "I")):
        return True
    # Medieval additive forms (iiij, xiiij): values never increase.
    vals = [_ROMAN_VALUES[ch.lower()] for ch in word]
    return all(a >= b for a, b in zip(vals, vals[1:]))


_MARKERS = MarkerTable.default()


def _token_guard(token: str) -> bool:
    """True when a token must pass through untouched."""
    core = "".join(ch for ch in token if not _is_punct(ch))
    if not core:
        return True
    if all(ch.isdigit() for ch in core):
        return True  # Arabic numeral
    if len(core) == 1 and not _MARKERS.is_marker(core):
        return True  # single letters and initials like "S." stay as they are
    if _is_roman_numeral(core):
        return True
    return False


def _ramist_pass(chars: list[str], bases: list[int], i_to_j: bool) -> list[str]:
    """One right-to-left resolution sweep over the working characters.

    A position's right context is already decided within the sweep; the
    left context reads the current working letters.  Returns rule ids that
    changed something.
    """
    fired: list[str] = []
    for bi in range(len(bases) - 1, -1, -1):
        pos = bases[bi]
        ch = chars[pos]
        low = ch.lower()
        if low not in "uvij":
            continue
        prev = chars[bases[bi - 1]] if bi > 0 else None
        nxt = chars[bases[bi + 1]] if bi + 1 < len(bases) else None
        if prev is not None and not prev.isalpha():
            prev = None  # punctuation interrupts the word
        if nxt is not None and not nxt.isalpha():
            nxt = None
        prev_vowel = prev is not None and prev.lower() in _VOWELS
        next_vowel = nxt is not None and nxt.lower() in _VOWELS
        word_initial = prev is None

        if low in "uv":
            if prev is not None and prev.lower() == "q":
                consonantal = False  # qu digraph
            else:
                consonantal = (word_initial and next_vowel) or (prev_vowel and next_vowel)
            new = "v" if consonantal else "u"
            rule = "ramist.u-cons" if consonantal else "ramist.v-voc"
        else:
            consonantal = word_initial and next_vowel
            if consonantal:
                new = "j" if i_to_j else low
                rule = "ramist.i-cons"
            else:
                new = "i"
                rule = "ramist.j-voc"
        if new != low:
            chars[pos] = new.upper() if ch.isupper() else new
            fired.append(rule)
    return fired


_RAMIST_MAX_SWEEPS = 8


def _ramist(token: str, language: str, i_to_j: bool) -> tuple[str, list[str]]:
    """Resolve u/v and i/j by position.

    Neighboring ramist letters constrain each other in both directions, so
    single sweeps oscillate on runs like "uuu"; sweeping until nothing
    changes lands on a fixed point, which makes normalization idempotent.
    """
    chars = list(token)
    bases = _base_positions(token)
    fired: list[str] = []
    for _ in range(_RAMIST_MAX_SWEEPS):
        changed = _ramist_pass(chars, bases, i_to_j)
        fired.extend(changed)
        if not changed:
            break
    return "".join(chars), fired


def _next_base(token: str, pos: int) -> str | None:
    for k in range(pos, len(token)):
        if not unicodedata.combining(token[k]):
            return token[k]
    return None


def _context_ok(rule: NormalizationRule, token: str, pos: int) -> bool:
    end = pos + len(rule.pattern)
    if rule.where == "initial":
        if any(not _is_punct(c) for c in token[:pos]):
            return False
    elif rule.where == "final":
        if any(not _is_punct(c) and not unicodedata.combining(c) for c in token[end:]):
            return False
    if rule.before is not None:
        nxt = _next_base(token, end)
        if rule.before == "@none":
            return nxt is None
        if nxt is None:
            return False
        if rule.before == "@letter":
            return nxt.isalpha()
        if rule.before == "@vowel":
            return nxt.lower() in _VOWELS
        return nxt.lower() in rule.before
    return True


def _expand_markers(
    token: str, rules: RuleSet, language: str
) -> tuple[str, list[str]]:
    out: list[str] = []
    fired: list[str] = []
    pos = 0
    while pos < len(token):
        hit = None
        for rule in rules.rules:
            if not rule.applies_to(language):
                continue
            if token.startswith(rule.pattern, pos) and _context_ok(rule, token, pos):
                hit = rule
                break
        if hit is None:
            out.append(token[pos])
            pos += 1
        else:
            out.append(hit.replacement)
            fired.append(hit.rule_id)
            pos += len(hit.pattern)
    return "".join(out), fired


def normalize_rules(
    text: str,
    rules: RuleSet | None = None,
    language: str = "lat",
    proper_names: frozenset[str] = frozenset(),
    i_to_j_languages: frozenset[str] = frozenset({"fro"}),
) -> NormalizerResult:
    """Apply the rule-based baseline: marker expansion, ramist letters,
    capitalization after strong punctuation and for listed proper names.

    Works on the canonical decomposition of the input; spans relate the
    (decomposed) input to the output, token by token, and cover both texts
    completely.  The whole map is a fixed point: running it on its own
    output changes nothing.
    """
    rules = rules or RuleSet.default()
    decomposed = unicodedata.normalize("NFD", text)
    warnings: list[str] = []
    if decomposed != text:
        warnings.append("input-decomposed")

    out_parts: list[str] = []
    spans: list[tuple[tuple[int, int], tuple[int, int]]] = []
    applied: list[dict] = []
    out_len = 0
    cursor = 0
    i_to_j = language in i_to_j_languages

    def emit(in_lo: int, in_hi: int, piece: str) -> None:
        nonlocal out_len
        out_parts.append(piece)
        spans.append(((in_lo, in_hi), (out_len, out_len + len(piece))))
        out_len += len(piece)

    for m in _TOKEN_RE.finditer(decomposed):
        if m.start() > cursor:
            emit(cursor, m.start(), decomposed[cursor : m.start()])
        token = m.group(0)
        if _token_guard(token):
            emit(m.start(), m.end(), token)
        else:
            # Markers first: expansions introduce letters (ꝰ -> us) whose
            # ramist shape must be decided in the same pass, otherwise
            # normalizing twice would not be a fixed point.
            fired: list[str] = []
            shaped, marker_rules = _expand_markers(token, rules, language)
            fired.extend(marker_rules)
            shaped, ramist_rules = _ramist(shaped, language, i_to_j)
            fired.extend(ramist_rules)
            emit(m.start(), m.end(), shaped)
            if fired:
                applied.append(
                    {"token_span": [m.start(), m.end()], "rules": fired}
                )
        cursor = m.end()
    if cursor < len(decomposed):
        emit(cursor, len(decomposed), decomposed[cursor:])

    result = "".join(out_parts)
    result = _capitalize(result, proper_names)
    return NormalizerResult(
        text=result, spans=spans, applied_rules=applied, warnings=warnings
    )


def _capitalize(text: str, proper_names: frozenset[str]) -> str:
    """Uppercase the letter starting a sentence and listed proper names.

    Length-preserving by construction; characters whose uppercase form is
    longer are left alone.
    """
    chars = list(text)
    after_strong = False
    for m in _TOKEN_RE.finditer(text):
        token = m.group(0)
        first_letter = next((k for k, ch in enumerate(token) if ch.isalpha()), None)
        bare = "".join(ch for ch in token if not _is_punct(ch))
        if first_letter is not None and (after_strong or bare.lower() in proper_names):
            up = token[first_letter].upper()
            if len(up) == 1:
                chars[m.start() + first_letter] = up
        if first_letter is None:
            # Pure punctuation keeps or sets the sentence boundary.
            after_strong = after_strong or any(ch in ".!?" for ch in token)
        else:
            tail = token[len(token.rstrip(".!?")):]
            after_strong = bool(tail)
    return "".join(chars)


@dataclass(frozen=True)
class Violation:
    kind: str  # punctuation | numeral | initial-expanded | length-ratio
    detail: str

    def to_record(self) -> dict:
        return {"kind": self.kind, "detail": self.detail}


def validate_against_task(
    result: NormalizerResult | str,
    source: str,
    length_ratio_cap: float = 3.0,
) -> list[Violation]:
    """Mechanically detectable task violations in a normalizer's output."""
    output = result.text if isinstance(result, NormalizerResult) else result
    violations: list[Violation] = []

    src_punct = Counter(ch for ch in source if _is_punct(ch))
    out_punct = Counter(ch for ch in output if _is_punct(ch))
    if src_punct != out_punct:
        gained = out_punct - src_punct
        lost = src_punct - out_punct
        violations.append(
            Violation(
                "punctuation",
                f"added {dict(gained) or '{}'}, removed {dict(lost) or '{}'}",
            )
        )

    def numeral_tokens(text: str) -> Counter:
        toks = Counter()
        for m in _TOKEN_RE.finditer(unicodedata.normalize("NFD", text)):
            core = "".join(ch for ch in m.group(0) if not _is_punct(ch))
            if core and (
                all(ch.isdigit() for ch in core) or _is_roman_numeral(core)
            ):
                toks[core] += 1
        return toks

    src_nums = numeral_tokens(source)
    out_nums = numeral_tokens(output)
    if src_nums != out_nums:
        violations.append(
            Violation(
                "numeral",
                f"source numerals {dict(src_nums)} vs output {dict(out_nums)}",
            )
        )

    src_tokens = [m.group(0) for m in _TOKEN_RE.finditer(source)]
    out_counts = Counter(m.group(0) for m in _TOKEN_RE.finditer(output))
    initial_re = re.compile(r"^\W*([^\W\d_])\.\W*$", re.UNICODE)
    for tok, count in Counter(src_tokens).items():
        m = initial_re.match(tok)
        if m and m.group(1).isupper() and out_counts.get(tok, 0) < count:
            violations.append(
                Violation("initial-expanded", f"initial {tok!r} no longer present")
            )

    if source and len(output) / len(source) > length_ratio_cap:
        violations.append(
            Violation(
                "length-ratio",
                f"output/source length {len(output) / len(source):.2f} exceeds {length_ratio_cap}",
            )
        )
    return violations


# ---------------------------------------------------------------------------
# External normalizer adapter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExternalEndpoint:
    """Descriptor for a model-backed normalizer outside this process.

    kind "command": argv started once per batch; one JSON record per line on
    stdin ({id, text, language}), one per line on stdout ({id, text}).
    kind "http": POST the same record, receive {id, text}.
    """

    kind: str  # command | http
    argv: tuple[str, ...] = ()
    url: str = ""
    timeout: float = 30.0
    token: str | None = None


def normalize_external(
    items: list[tuple[str, str]],
    endpoint: ExternalEndpoint,
    language: str = "lat",
) -> list[NormalizerResult]:
    """Send (id, text) items to an external normalizer, preserving order.

    Output spans are opaque (the external process owns the transformation).
    Empty outputs are accepted with a warning.

    Raises:
        EndpointFailure / EndpointTimeout: tagged with the offending id.
    """
    if endpoint.kind == "command":
        answers = _run_command(items, endpoint, language)
    elif endpoint.kind == "http":
        answers = _run_http(items, endpoint, language)
    else:
        raise ValueError(f"unknown endpoint kind {endpoint.kind!r}")

    results = []
    for item_id, _ in items:
        if item_id not in answers:
            raise EndpointFailure("endpoint returned no result", input_id=item_id)
        text = answers[item_id]
        warnings = ["empty-output"] if text == "" else []
        results.append(
            NormalizerResult(text=text, spans=[], opaque=True, warnings=warnings)
        )
    return results


def _run_command(
    items: list[tuple[str, str]], endpoint: ExternalEndpoint, language: str
) -> dict[str, str]:
    payload = "".join(
        json.dumps({"id": i, "text": t, "language": language}) + "\n" for i, t in items
    )
    first_id = items[0][0] if items else None
    try:
        proc = subprocess.run(
            list(endpoint.argv),
            input=payload,
            capture_output=True,
            text=True,
            timeout=endpoint.timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise EndpointTimeout(f"command timed out after {endpoint.timeout}s", first_id) from exc
    except OSError as exc:
        raise EndpointFailure(f"cannot start endpoint: {exc}", first_id) from exc
    if proc.returncode != 0:
        raise EndpointFailure(
            f"endpoint exited {proc.returncode}: {proc.stderr.strip()[:200]}", first_id
        )
    answers: dict[str, str] = {}
    for line in proc.stdout.splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            answers[rec["id"]] = rec["text"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise EndpointFailure(f"bad endpoint output line: {line[:120]!r}", first_id) from exc
    return answers


def _run_http(
    items: list[tuple[str, str]], endpoint: ExternalEndpoint, language: str
) -> dict[str, str]:
    headers = {}
    if endpoint.token:
        headers["X-Auth-Token"] = endpoint.token
    answers: dict[str, str] = {}
    with httpx.Client(timeout=endpoint.timeout) as client:
        for item_id, text in items:
            try:
                resp = client.post(
                    endpoint.url,
                    json={"id": item_id, "text": text, "language": language},
                    headers=headers,
                )
            except httpx.TimeoutException as exc:
                raise EndpointTimeout(str(exc), item_id) from exc
            except httpx.HTTPError as exc:
                raise EndpointFailure(str(exc), item_id) from exc
            if resp.status_code != 200:
                raise EndpointFailure(f"HTTP {resp.status_code}", item_id)
            try:
                rec = resp.json()
                answers[rec["id"]] = rec["text"]
            except (ValueError, KeyError) as exc:
                raise EndpointFailure("malformed endpoint response", item_id) from exc
    return answers
