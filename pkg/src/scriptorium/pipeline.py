"""Pipeline stages: prep, index, candidates, align, pairs, analyze,
normalize, eval.

Each stage reads the previous stage's output from a content-addressed
directory under the work directory and writes its own.  Outputs are
deterministic given the same inputs and seed; reports carry counts,
rejection tallies and wall time.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import abbrev, fingerprint, metrics
from .aligner import AlignParams, CharAlignment, align
from .config import PipelineConfig
from .errors import EmptyPage, MissingInput, Unchunkable
from .io import read_jsonl, write_jsonl
from .normalize import ExternalEndpoint, RuleSet, normalize_external, normalize_rules
from .pairbuilder import (
    AlignedPair,
    ChunkLog,
    FilterPolicy,
    build_manifest,
    chunk,
    filter_alignment,
)
from .textprep import EditionPassage, PreparedText, SourcePage, prepare_page, prepare_passage

STAGES = ("prep", "index", "candidates", "align", "pairs", "analyze", "normalize", "eval")


@dataclass
class StageReport:
    stage: str
    config_hash: str
    counts: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_record(self) -> dict:
        return {
            "stage": self.stage,
            "config_hash": self.config_hash,
            "counts": self.counts,
            "outputs": self.outputs,
            "wall_time_s": round(self.wall_time_s, 3),
        }


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise MissingInput(f"{what} not found: {path}")
    return path


def _align_params(config: PipelineConfig) -> AlignParams:
    return AlignParams(
        beam_width=config.beam_width,
        min_align_chars=config.min_align_chars,
        match=config.cost_match,
        substitute=config.cost_substitute,
        insert=config.cost_insert,
        delete=config.cost_delete,
        jump_open=config.cost_jump_open,
        jump_per_char=config.cost_jump_per_char,
    )


def _filter_policy(config: PipelineConfig) -> FilterPolicy:
    return FilterPolicy(
        min_continuous_lines=config.min_continuous_lines,
        min_match_rate=config.min_match_rate,
        line_coverage_threshold=config.line_coverage_threshold,
        require_same_work=config.require_same_work,
    )


def split_passages(work_id: str, text: str, language: str | None, chars: int, stride: int):
    """Overlapping windows over a work so pages never straddle all of them."""
    if len(text) <= chars:
        yield EditionPassage(work_id, f"{work_id}:0", text, 0, language)
        return
    start = 0
    index = 0
    while start < len(text):
        window = text[start : start + chars]
        if window.strip():
            yield EditionPassage(work_id, f"{work_id}:{index}", window, start, language)
            index += 1
        if start + chars >= len(text):
            break
        start += stride


def _load_prepared_pages(config: PipelineConfig) -> dict[str, PreparedText]:
    path = _require(config.stage_dir("prep") / "pages.jsonl", "prep output")
    zone_filter = frozenset(config.zone_filter)
    pages = {}
    for rec in read_jsonl(path):
        page = SourcePage.from_record(rec["page"])
        pages[rec["ref"]] = prepare_page(page, zone_filter)
    return pages


def _load_prepared_passages(config: PipelineConfig) -> dict[str, PreparedText]:
    path = _require(config.stage_dir("prep") / "passages.jsonl", "prep output")
    passages = {}
    for rec in read_jsonl(path):
        passage = EditionPassage(
            work_id=rec["work_id"],
            passage_id=rec["passage_id"],
            text=rec["text"],
            char_offset=rec["char_offset"],
            language=rec.get("language"),
        )
        passages[rec["ref"]] = prepare_passage(passage)
    return passages


# -- stages ------------------------------------------------------------------


def stage_prep(config: PipelineConfig) -> StageReport:
    t0 = time.monotonic()
    out_dir = config.stage_dir("prep")
    zone_filter = frozenset(config.zone_filter)

    page_records = []
    empty_pages = 0
    for rec in read_jsonl(_require(Path(config.pages), "pages input")):
        page = SourcePage.from_record(rec)
        try:
            prepared = prepare_page(page, zone_filter)
        except EmptyPage:
            empty_pages += 1
            continue
        page_records.append(
            {
                "ref": f"{page.doc_id}/{page.page_id}",
                "page": {
                    "doc_id": page.doc_id,
                    "page_id": page.page_id,
                    "language": page.language_hint,
                    "lines": [{"text": ln.text, "zone": ln.zone} for ln in page.lines],
                },
                "text": prepared.text,
            }
        )

    passage_records = []
    works = 0
    for rec in read_jsonl(_require(Path(config.editions), "editions input")):
        works += 1
        language = (rec.get("metadata") or {}).get("language") or rec.get("language")
        for passage in split_passages(
            rec["work_id"], rec["text"], language, config.passage_chars, config.passage_stride
        ):
            passage_records.append(
                {
                    "ref": passage.passage_id,
                    "work_id": passage.work_id,
                    "passage_id": passage.passage_id,
                    "char_offset": passage.char_offset,
                    "language": passage.language,
                    "text": passage.text,
                }
            )

    n_pages = write_jsonl(out_dir / "pages.jsonl", page_records)
    n_passages = write_jsonl(out_dir / "passages.jsonl", passage_records)
    return StageReport(
        stage="prep",
        config_hash=config.config_hash(),
        counts={
            "pages": n_pages,
            "pages_empty": empty_pages,
            "works": works,
            "passages": n_passages,
        },
        outputs=[str(out_dir / "pages.jsonl"), str(out_dir / "passages.jsonl")],
        wall_time_s=time.monotonic() - t0,
    )


def stage_index(config: PipelineConfig) -> StageReport:
    t0 = time.monotonic()
    out_dir = config.stage_dir("index")
    passages = _load_prepared_passages(config)
    index = fingerprint.build_index(
        passages.items(), n=config.gram_n, doc_freq_cap=config.doc_freq_cap
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "grams.idx"
    with open(out_path, "wb") as fp:
        index.save(fp)
    return StageReport(
        stage="index",
        config_hash=config.config_hash(),
        counts={"passages": len(passages), "grams": len(index.postings)},
        outputs=[str(out_path)],
        wall_time_s=time.monotonic() - t0,
    )


def stage_candidates(config: PipelineConfig) -> StageReport:
    t0 = time.monotonic()
    out_dir = config.stage_dir("candidates")
    index_path = _require(config.stage_dir("index") / "grams.idx", "index output")
    with open(index_path, "rb") as fp:
        index = fingerprint.GramIndex.load(fp)
    pages = _load_prepared_pages(config)

    records = []
    for ref in sorted(pages):
        for cand in fingerprint.candidates(
            ref, pages[ref], index, min_shared=config.min_shared_grams
        ):
            records.append(
                {
                    "page_ref": cand.page_ref,
                    "passage_ref": cand.passage_ref,
                    "shared_grams": cand.shared_grams,
                }
            )
    n = write_jsonl(out_dir / "candidates.jsonl", records)
    return StageReport(
        stage="candidates",
        config_hash=config.config_hash(),
        counts={"pages": len(pages), "candidates": n},
        outputs=[str(out_dir / "candidates.jsonl")],
        wall_time_s=time.monotonic() - t0,
    )


def stage_align(config: PipelineConfig) -> StageReport:
    t0 = time.monotonic()
    out_dir = config.stage_dir("align")
    cand_path = _require(
        config.stage_dir("candidates") / "candidates.jsonl", "candidates output"
    )
    pages = _load_prepared_pages(config)
    passages = _load_prepared_passages(config)
    params = _align_params(config)

    by_page: dict[str, list[dict]] = {}
    for rec in read_jsonl(cand_path):
        by_page.setdefault(rec["page_ref"], []).append(rec)

    records = []
    dropped_short = 0
    for page_ref in sorted(by_page):
        cands = sorted(
            by_page[page_ref], key=lambda r: (-r["shared_grams"], r["passage_ref"])
        )[: config.max_candidates_per_page]
        for cand in cands:
            passage_ref = cand["passage_ref"]
            alignment = align(pages[page_ref].text, passages[passage_ref].text, params)
            if alignment is None:
                dropped_short += 1
                continue
            origin = passages[passage_ref].origin
            records.append(
                {
                    "page_ref": page_ref,
                    "passage_ref": passage_ref,
                    "work_id": origin.work_id if isinstance(origin, EditionPassage) else "",
                    "alignment": alignment.to_record(),
                }
            )
    n = write_jsonl(out_dir / "alignments.jsonl", records)
    return StageReport(
        stage="align",
        config_hash=config.config_hash(),
        counts={
            "pages_with_candidates": len(by_page),
            "alignments": n,
            "dropped_below_min_chars": dropped_short,
        },
        outputs=[str(out_dir / "alignments.jsonl")],
        wall_time_s=time.monotonic() - t0,
    )


def stage_pairs(config: PipelineConfig) -> StageReport:
    t0 = time.monotonic()
    out_dir = config.stage_dir("pairs")
    align_path = _require(
        config.stage_dir("align") / "alignments.jsonl", "align output"
    )
    pages = _load_prepared_pages(config)
    passages = _load_prepared_passages(config)
    policy = _filter_policy(config)

    # Keep only the best accepted alignment per (page, work): overlapping
    # passage windows would otherwise emit near-duplicate pairs.
    best: dict[tuple[str, str], tuple[float, dict]] = {}
    rejections: Counter = Counter()
    for rec in read_jsonl(align_path):
        alignment = CharAlignment.from_record(rec["alignment"])
        decision = filter_alignment(alignment, pages[rec["page_ref"]], policy)
        if not decision:
            rejections[decision.reason] += 1
            continue
        key = (rec["page_ref"], rec["work_id"])
        score = alignment.matched_chars
        if key not in best or score > best[key][0]:
            best[key] = (score, rec)

    chunk_log = ChunkLog()
    pairs: list[AlignedPair] = []
    unchunkable = 0
    for _, rec in sorted(best.items(), key=lambda kv: kv[0]):
        alignment = CharAlignment.from_record(rec[1]["alignment"])
        try:
            pairs.extend(
                chunk(
                    alignment,
                    pages[rec[1]["page_ref"]],
                    passages[rec[1]["passage_ref"]],
                    min_bytes=config.chunk_min_bytes,
                    max_bytes=config.chunk_max_bytes,
                    log=chunk_log,
                )
            )
        except Unchunkable:
            unchunkable += 1

    n = write_jsonl(out_dir / "pairs.jsonl", [p.to_record() for p in pairs])
    manifest = build_manifest(pairs, upsample=config.upsample, seed=config.seed)
    manifest_path = out_dir / "manifest.txt"
    manifest_path.write_text(manifest.dump(), encoding="utf-8")
    return StageReport(
        stage="pairs",
        config_hash=config.config_hash(),
        counts={
            "alignments_accepted": len(best),
            "rejections": dict(rejections),
            "pairs": n,
            "manifest_entries": len(manifest.entries),
            "unchunkable": unchunkable,
            "dropped_bytes": chunk_log.dropped_bytes,
            "dropped_regions": chunk_log.dropped_regions,
        },
        outputs=[str(out_dir / "pairs.jsonl"), str(manifest_path)],
        wall_time_s=time.monotonic() - t0,
    )


def stage_analyze(config: PipelineConfig, sidecar: bool = False) -> StageReport:
    t0 = time.monotonic()
    out_dir = config.stage_dir("analyze")
    pairs_path = _require(config.stage_dir("pairs") / "pairs.jsonl", "pairs output")
    markers = abbrev.MarkerTable.default()

    pair_stream = (
        (AlignedPair.from_record(rec), None) for rec in read_jsonl(pairs_path)
    )
    sidecar_records = []
    if sidecar:
        stats = abbrev.SubstitutionStats()
        for pair, _ in pair_stream:
            records = abbrev.align_tokens(pair, None, markers)
            n_src = sum(1 for r in records if r.cls != abbrev.INSERTION)
            if n_src == 0:
                continue
            n_sub = sum(1 for r in records if r.cls == abbrev.SUBSTITUTION)
            stats.add(
                pair.language,
                n_sub / n_src,
                Counter(r.cls for r in records),
            )
            sidecar_records.append(
                {
                    "pair_id": pair.pair_id,
                    "tokens": [r.to_record() for r in records],
                }
            )
    else:
        stats = abbrev.substitution_stats(pair_stream, markers)

    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "substitutions.json"
    report_path.write_text(
        json.dumps(stats.to_record(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    outputs = [str(report_path)]
    if sidecar:
        sidecar_path = out_dir / "tokens.jsonl"
        write_jsonl(sidecar_path, sidecar_records)
        outputs.append(str(sidecar_path))
    return StageReport(
        stage="analyze",
        config_hash=config.config_hash(),
        counts={
            "pairs": stats.to_record()["overall"]["pairs"],
            "languages": len(stats.by_language),
        },
        outputs=outputs,
        wall_time_s=time.monotonic() - t0,
    )


def stage_normalize(
    config: PipelineConfig,
    endpoint: ExternalEndpoint | None = None,
    input_path: str | None = None,
    rules: RuleSet | None = None,
) -> StageReport:
    """Normalize pair sources (default) or arbitrary {id, text} records.

    With an endpoint, texts go to the external normalizer; otherwise the
    rule-based baseline runs.
    """
    t0 = time.monotonic()
    out_dir = config.stage_dir("normalize")

    items: list[dict] = []
    if input_path:
        for rec in read_jsonl(_require(Path(input_path), "normalize input")):
            items.append(
                {
                    "id": rec["id"],
                    "text": rec["text"],
                    "language": rec.get("language", config.default_language),
                    "gold": rec.get("gold"),
                }
            )
    else:
        pairs_path = _require(config.stage_dir("pairs") / "pairs.jsonl", "pairs output")
        for rec in read_jsonl(pairs_path):
            items.append(
                {
                    "id": rec["pair_id"],
                    "text": rec["src"],
                    "language": rec.get("language", config.default_language),
                    "gold": rec["tgt"],
                }
            )

    out_records = []
    if endpoint is not None:
        by_language: dict[str, list[dict]] = {}
        for item in items:
            by_language.setdefault(item["language"], []).append(item)
        answers: dict[str, tuple[str, list[str]]] = {}
        for language, group in sorted(by_language.items()):
            results = normalize_external(
                [(it["id"], it["text"]) for it in group], endpoint, language
            )
            for it, res in zip(group, results):
                answers[it["id"]] = (res.text, res.warnings)
        for item in items:
            text, warnings = answers[item["id"]]
            out_records.append(_normalize_record(item, text, warnings))
    else:
        ruleset = rules or RuleSet.default()
        for item in items:
            res = normalize_rules(item["text"], ruleset, item["language"])
            out_records.append(_normalize_record(item, res.text, res.warnings))

    n = write_jsonl(out_dir / "normalized.jsonl", out_records)
    return StageReport(
        stage="normalize",
        config_hash=config.config_hash(),
        counts={"records": n, "external": endpoint is not None},
        outputs=[str(out_dir / "normalized.jsonl")],
        wall_time_s=time.monotonic() - t0,
    )


def _normalize_record(item: dict, text: str, warnings: list[str]) -> dict:
    rec = {
        "id": item["id"],
        "language": item["language"],
        "source": item["text"],
        "pred": text,
    }
    if item.get("gold") is not None:
        rec["gold"] = item["gold"]
    if warnings:
        rec["warnings"] = warnings
    return rec


def stage_eval(
    config: PipelineConfig,
    input_path: str | None = None,
    gold_path: str | None = None,
    pred_path: str | None = None,
    macro: bool = False,
) -> StageReport:
    """Score {id, gold, pred, language, labels?} records.

    Input is either one records file (default: the normalize stage's
    output) or a pair of line-aligned plain-text files.
    """
    t0 = time.monotonic()
    out_dir = config.stage_dir("eval")
    if gold_path or pred_path:
        if not (gold_path and pred_path):
            raise MissingInput("paired evaluation needs both gold and pred files")
        gold_lines = _require(Path(gold_path), "gold file").read_text(encoding="utf-8").splitlines()
        pred_lines = _require(Path(pred_path), "pred file").read_text(encoding="utf-8").splitlines()
        if len(gold_lines) != len(pred_lines):
            raise MissingInput(
                f"paired files differ in length: {len(gold_lines)} vs {len(pred_lines)}"
            )
        records = [
            {"id": str(k), "gold": g, "pred": p, "language": config.default_language}
            for k, (g, p) in enumerate(zip(gold_lines, pred_lines))
            if g.strip()
        ]
    else:
        path = (
            Path(input_path)
            if input_path
            else config.stage_dir("normalize") / "normalized.jsonl"
        )
        records = [rec for rec in read_jsonl(_require(path, "eval input")) if rec.get("gold")]
    report = metrics.evaluate_records(records, macro=macro)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "eval.json"
    report_path.write_text(
        json.dumps(report.to_record(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return StageReport(
        stage="eval",
        config_hash=config.config_hash(),
        counts={"samples": len(records)},
        outputs=[str(report_path)],
        wall_time_s=time.monotonic() - t0,
    )


def run_stage(stage: str, config: PipelineConfig, **kwargs) -> StageReport:
    runners = {
        "prep": stage_prep,
        "index": stage_index,
        "candidates": stage_candidates,
        "align": stage_align,
        "pairs": stage_pairs,
        "analyze": stage_analyze,
        "normalize": stage_normalize,
        "eval": stage_eval,
    }
    if stage not in runners:
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
    report = runners[stage](config, **kwargs)
    report_path = config.stage_dir(stage) / "report.json"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(
        json.dumps(report.to_record(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return report
