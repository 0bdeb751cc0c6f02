"""Command-line interface: pipeline stages, gold sampling, review service.

Stage subcommands read/write content-addressed directories under the work
directory; `sample-gold` fills a review store; `review-serve` starts the
HTTP service the curation UI talks to.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import PipelineConfig
from .errors import ScriptoriumError
from .io import read_jsonl
from .normalize import ExternalEndpoint
from .pipeline import run_stage
from .review import ReviewStore, sample_gold

_STAGE_COMMANDS = ("prep", "index", "candidates", "align", "pairs", "analyze", "normalize", "eval")

_OVERRIDE_FIELDS = [
    ("--pages", "pages", str, "pages JSONL (one page per line)"),
    ("--editions", "editions", str, "editions JSONL (one work per line)"),
    ("--workdir", "workdir", str, "work directory for stage outputs"),
    ("--seed", "seed", int, "seed for shuffling and sampling"),
    ("--gram-n", "gram_n", int, "character n-gram length"),
    ("--doc-freq-cap", "doc_freq_cap", int, "drop grams in at least this many passages"),
    ("--min-shared-grams", "min_shared_grams", int, "candidate threshold"),
    ("--max-candidates-per-page", "max_candidates_per_page", int, "alignments tried per page"),
    ("--beam-width", "beam_width", int, "beam width for alignment"),
    ("--min-align-chars", "min_align_chars", int, "drop alignments covering fewer source chars"),
    ("--passage-chars", "passage_chars", int, "passage window size"),
    ("--passage-stride", "passage_stride", int, "passage window stride"),
    ("--min-continuous-lines", "min_continuous_lines", int, "continuity filter"),
    ("--min-match-rate", "min_match_rate", float, "match-rate filter"),
    ("--line-coverage-threshold", "line_coverage_threshold", float, "per-line coverage"),
    ("--chunk-min-bytes", "chunk_min_bytes", int, "minimum pair size"),
    ("--chunk-max-bytes", "chunk_max_bytes", int, "maximum pair size"),
    ("--default-language", "default_language", str, "language tag fallback"),
]


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", help="JSON config file")
    for flag, _, typ, help_text in _OVERRIDE_FIELDS:
        parser.add_argument(flag, type=typ, help=help_text, default=None)
    parser.add_argument(
        "--require-same-work",
        dest="require_same_work",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="require all alignment segments to come from one work",
    )
    parser.add_argument(
        "--upsample",
        action="append",
        default=None,
        metavar="LANG=FACTOR",
        help="manifest upsampling factor, repeatable",
    )


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    for _, field, _, _ in _OVERRIDE_FIELDS:
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "require_same_work", None) is not None:
        overrides["require_same_work"] = args.require_same_work
    if getattr(args, "upsample", None):
        factors = {}
        for spec in args.upsample:
            lang, _, factor = spec.partition("=")
            factors[lang] = int(factor)
        overrides["upsample"] = factors
    if args.config:
        return PipelineConfig.load(args.config, **overrides)
    return PipelineConfig.from_dict(overrides)


def _cmd_stage(stage: str, args: argparse.Namespace) -> int:
    config = _build_config(args)
    kwargs = {}
    if stage == "normalize":
        if args.command:
            kwargs["endpoint"] = ExternalEndpoint(
                kind="command", argv=tuple(args.command.split()), timeout=args.timeout
            )
        elif args.http:
            kwargs["endpoint"] = ExternalEndpoint(
                kind="http", url=args.http, timeout=args.timeout, token=args.token
            )
        if args.input:
            kwargs["input_path"] = args.input
    elif stage == "eval":
        if args.input:
            kwargs["input_path"] = args.input
        if args.gold or args.pred:
            kwargs["gold_path"] = args.gold
            kwargs["pred_path"] = args.pred
        kwargs["macro"] = args.macro
    elif stage == "analyze":
        kwargs["sidecar"] = args.sidecar
    report = run_stage(stage, config, **kwargs)
    print(json.dumps(report.to_record(), indent=2, sort_keys=True))
    return 0


def _cmd_sample_gold(args: argparse.Namespace) -> int:
    if args.pairs:
        pairs_path = Path(args.pairs)
        seed = args.seed if args.seed is not None else 0
    else:
        config = _build_config(args)
        pairs_path = config.stage_dir("pairs") / "pairs.jsonl"
        seed = config.seed
    if not pairs_path.exists():
        print(f"pairs file not found: {pairs_path}", file=sys.stderr)
        return 2
    sampled = sample_gold(read_jsonl(pairs_path), cap_per_stratum=args.cap, seed=seed)
    store = ReviewStore(args.store)
    added = store.add_pairs(sampled)
    print(json.dumps({"sampled": len(sampled), "added": added, "store": args.store}))
    return 0


def _cmd_review_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    store = ReviewStore(args.store)
    app = create_app(store, token=args.token, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scriptorium",
        description="Align manuscript transcriptions with editions and build normalization data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in _STAGE_COMMANDS:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_config_arguments(p)
        if stage == "normalize":
            p.add_argument("--input", help="records {id, text, language} instead of pipeline pairs")
            p.add_argument("--command", help="external normalizer argv (line protocol)")
            p.add_argument("--http", help="external normalizer URL")
            p.add_argument("--token", help="X-Auth-Token for the HTTP endpoint")
            p.add_argument("--timeout", type=float, default=30.0)
        elif stage == "eval":
            p.add_argument("--input", help="records {id, gold, pred, language, labels?}")
            p.add_argument("--gold", help="plain-text gold file (line-aligned with --pred)")
            p.add_argument("--pred", help="plain-text prediction file")
            p.add_argument("--macro", action="store_true", help="macro-average instead of micro")
        elif stage == "analyze":
            p.add_argument("--sidecar", action="store_true", help="write per-pair token records")
        p.set_defaults(func=lambda a, s=stage: _cmd_stage(s, a))

    p = sub.add_parser("sample-gold", help="stratified sample into a review store")
    _add_config_arguments(p)
    p.add_argument("--pairs", help="pairs JSONL (defaults to the pairs stage output)")
    p.add_argument("--store", required=True, help="review store directory")
    p.add_argument("--cap", type=int, required=True, help="max pairs per work")
    p.set_defaults(func=_cmd_sample_gold)

    p = sub.add_parser("review-serve", help="serve the review API (and UI if built)")
    p.add_argument("--store", required=True, help="review store directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--token", help="shared token required in X-Auth-Token")
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.set_defaults(func=_cmd_review_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScriptoriumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
