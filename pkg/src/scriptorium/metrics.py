"""Evaluation: character/word error rates and bag-of-words overlap scores.

Error rates are Levenshtein distances (unit costs, no transpositions)
normalized by the gold length, so values above 1.0 are legal and occur for
badly over-generating systems.  Corpus aggregation is micro-averaged:
total edits over total gold length, not the mean of per-sample rates.

Bag-of-words scores compare label multisets: the true-positive mass for a
label is the smaller of its two counts.  Restricting to the most frequent
gold words mirrors stylometric practice and ignores punctuation.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import EmptyReference

_TOKEN_RE = re.compile(r"\S+")


def _levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Unit-cost edit distance, vectorized row by row."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    symbols = {s: k for k, s in enumerate(dict.fromkeys(list(a) + list(b)))}
    xa = np.fromiter((symbols[s] for s in a), dtype=np.int64, count=len(a))
    xb = np.fromiter((symbols[s] for s in b), dtype=np.int64, count=len(b))
    n = len(xb)
    idx = np.arange(n + 1, dtype=np.float64)
    prev = idx.copy()
    for i in range(1, len(xa) + 1):
        base = np.empty(n + 1)
        base[0] = i
        sub = prev[:-1] + (xb != xa[i - 1])
        base[1:] = np.minimum(prev[1:] + 1, sub)
        # Left-to-right insertion chains via the slope trick.
        run = np.minimum.accumulate(base - idx)
        prev = run + idx
    return int(prev[-1])


def tokenize(text: str, strip_punctuation: bool = False) -> list[str]:
    """Whitespace tokens; optionally with punctuation characters removed."""
    tokens = _TOKEN_RE.findall(text)
    if not strip_punctuation:
        return tokens
    out = []
    for tok in tokens:
        bare = "".join(
            ch for ch in tok if not unicodedata.category(ch).startswith("P")
        )
        if bare:
            out.append(bare)
    return out


def cer(pred: str, gold: str) -> float:
    """Character error rate: edit distance over gold length.

    Raises:
        EmptyReference: when gold is empty.
    """
    if not gold:
        raise EmptyReference("gold text is empty")
    return _levenshtein(pred, gold) / len(gold)


def wer(pred: str, gold: str, tokenizer=tokenize) -> float:
    """Word error rate: token-level edit distance over gold token count."""
    gold_tokens = tokenizer(gold)
    if not gold_tokens:
        raise EmptyReference("gold text has no tokens")
    return _levenshtein(tokenizer(pred), gold_tokens) / len(gold_tokens)


@dataclass(frozen=True)
class BowReport:
    tp: int
    gold_size: int
    pred_size: int

    @property
    def precision(self) -> float:
        return self.tp / self.pred_size if self.pred_size else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.gold_size if self.gold_size else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_record(self) -> dict:
        return {
            "tp": self.tp,
            "gold": self.gold_size,
            "pred": self.pred_size,
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
            "f1": round(self.f1, 4),
        }


def bow(gold_labels: Sequence[Hashable], pred_labels: Sequence[Hashable]) -> BowReport:
    """Multiset overlap: tp is the sum over labels of the smaller count."""
    cg = Counter(gold_labels)
    cp = Counter(pred_labels)
    tp = sum(min(cg[x], cp[x]) for x in cg.keys() & cp.keys())
    return BowReport(tp=tp, gold_size=len(gold_labels), pred_size=len(pred_labels))


def mfw_vocabulary(gold_tokens: Sequence[str], k: int) -> set[str]:
    """The k most frequent gold tokens, ties broken lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(gold_tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {tok for tok, _ in ranked[:k]}


def bow_mfw(gold: Sequence[str] | str, pred: Sequence[str] | str, k: int = 100) -> BowReport:
    """Bag-of-words on the k most frequent gold words, punctuation ignored."""
    gold_tokens = tokenize(gold, strip_punctuation=True) if isinstance(gold, str) else list(gold)
    pred_tokens = tokenize(pred, strip_punctuation=True) if isinstance(pred, str) else list(pred)
    vocab = mfw_vocabulary(gold_tokens, k)
    return bow(
        [t for t in gold_tokens if t in vocab],
        [t for t in pred_tokens if t in vocab],
    )


def label_ngrams(labels: Sequence[Hashable], n: int = 3) -> list[tuple]:
    """Sliding n-gram windows over a label sequence; empty when too short."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [tuple(labels[i : i + n]) for i in range(len(labels) - n + 1)]


@dataclass
class _EditTotals:
    edits: int = 0
    ref_len: int = 0
    samples: int = 0
    rates: list[float] = field(default_factory=list)

    def rate(self, macro: bool = False) -> float | None:
        if macro:
            return sum(self.rates) / len(self.rates) if self.rates else None
        return self.edits / self.ref_len if self.ref_len else None


@dataclass
class EvalReport:
    """Corpus evaluation: micro-averaged CER/WER plus optional BoW layers.

    Samples whose language is not a plain single tag (e.g. mixed content)
    count toward the overall figures but no per-language row.
    """

    cer_totals: dict[str, _EditTotals] = field(default_factory=dict)
    wer_totals: dict[str, _EditTotals] = field(default_factory=dict)
    bow_layers: dict[str, dict[str, list[int]]] = field(default_factory=dict)
    macro: bool = False

    _ALL = "all"

    def add_sample(
        self,
        gold: str,
        pred: str,
        language: str | None = None,
        labels: dict[str, tuple[Sequence, Sequence]] | None = None,
    ) -> None:
        gold_tokens = tokenize(gold)
        if not gold or not gold_tokens:
            raise EmptyReference("gold sample is empty")
        char_edits = _levenshtein(pred, gold)
        word_edits = _levenshtein(tokenize(pred), gold_tokens)
        buckets = [self._ALL]
        if language and "+" not in language and language.lower() != "mixed":
            buckets.append(language)
        for bucket in buckets:
            ct = self.cer_totals.setdefault(bucket, _EditTotals())
            ct.edits += char_edits
            ct.ref_len += len(gold)
            ct.samples += 1
            ct.rates.append(char_edits / len(gold))
            wt = self.wer_totals.setdefault(bucket, _EditTotals())
            wt.edits += word_edits
            wt.ref_len += len(gold_tokens)
            wt.samples += 1
            wt.rates.append(word_edits / len(gold_tokens))
        for layer, (gold_labels, pred_labels) in (labels or {}).items():
            rep = bow(list(gold_labels), list(pred_labels))
            agg = self.bow_layers.setdefault(layer, {}).setdefault(
                self._ALL, [0, 0, 0]
            )
            agg[0] += rep.tp
            agg[1] += rep.gold_size
            agg[2] += rep.pred_size

    def to_record(self) -> dict:
        def fmt(totals: dict[str, _EditTotals]) -> dict:
            return {
                bucket: {
                    "rate": round(t.rate(self.macro), 4),
                    "percent": round(100 * t.rate(self.macro), 1),
                    "samples": t.samples,
                }
                for bucket, t in sorted(totals.items())
                if t.rate(self.macro) is not None
            }

        rec = {"cer": fmt(self.cer_totals), "wer": fmt(self.wer_totals)}
        if self.bow_layers:
            rec["bow"] = {
                layer: {
                    bucket: BowReport(*vals).to_record()
                    for bucket, vals in buckets.items()
                }
                for layer, buckets in self.bow_layers.items()
            }
        return rec


def evaluate_records(records: Iterable[dict], macro: bool = False) -> EvalReport:
    """Evaluate {id, gold, pred, language?, labels?} records.

    ``labels`` may carry gold/pred sequences per layer, e.g.
    ``{"pos": {"gold": [...], "pred": [...]}}``; a POS layer automatically
    adds a 3-gram layer.
    """
    report = EvalReport(macro=macro)
    for rec in records:
        layers: dict[str, tuple[Sequence, Sequence]] = {}
        for layer, sides in (rec.get("labels") or {}).items():
            layers[layer] = (sides["gold"], sides["pred"])
            if layer == "pos":
                layers["pos-3gram"] = (
                    label_ngrams(sides["gold"], 3),
                    label_ngrams(sides["pred"], 3),
                )
        report.add_sample(
            gold=rec["gold"],
            pred=rec["pred"],
            language=rec.get("language"),
            labels=layers,
        )
    return report
