"""Pipeline configuration: one dataclass, validated on load.

Every knob of the pipeline lives here with its default, so a config file
only needs the paths plus whatever deviates.  The configuration hash keys
the content-addressed stage directories inside the work directory:
parameter sweeps never overwrite each other.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass
class PipelineConfig:
    pages: str = ""
    editions: str = ""
    workdir: str = "work"

    zone_filter: list[str] = field(
        default_factory=lambda: ["main", "maintext", "body", "default"]
    )
    passage_chars: int = 4000
    passage_stride: int = 2000

    gram_n: int = 10
    doc_freq_cap: int = 100
    min_shared_grams: int = 5
    max_candidates_per_page: int = 5

    beam_width: int = 200
    min_align_chars: int = 50
    cost_match: float = 0.0
    cost_substitute: float = 2.0
    cost_insert: float = 3.0
    cost_delete: float = 3.0
    cost_jump_open: float = 10.0
    cost_jump_per_char: float = 0.0

    min_continuous_lines: int = 5
    min_match_rate: float = 0.60
    line_coverage_threshold: float = 0.50
    require_same_work: bool = True

    chunk_min_bytes: int = 300
    chunk_max_bytes: int = 1000

    upsample: dict[str, int] = field(default_factory=dict)
    default_language: str = "lat"
    seed: int = 0

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.gram_n >= 2, "gram_n must be >= 2"),
            (self.doc_freq_cap >= 1, "doc_freq_cap must be >= 1"),
            (self.min_shared_grams >= 1, "min_shared_grams must be >= 1"),
            (self.beam_width >= 1, "beam_width must be >= 1"),
            (self.min_align_chars >= 1, "min_align_chars must be >= 1"),
            (0 <= self.min_match_rate <= 1, "min_match_rate must be in [0, 1]"),
            (
                0 <= self.line_coverage_threshold <= 1,
                "line_coverage_threshold must be in [0, 1]",
            ),
            (
                0 < self.chunk_min_bytes <= self.chunk_max_bytes,
                "chunk byte bounds must satisfy 0 < min <= max",
            ),
            (self.passage_chars >= 1, "passage_chars must be >= 1"),
            (
                1 <= self.passage_stride <= self.passage_chars,
                "passage_stride must be in [1, passage_chars]",
            ),
            (self.min_continuous_lines >= 1, "min_continuous_lines must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        for lang, factor in self.upsample.items():
            if not isinstance(factor, int) or factor < 1:
                raise ConfigError(f"upsample[{lang!r}] must be an integer >= 1")
        return self

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict({**raw, **overrides})

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw).validate()

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha1(canon.encode("utf-8")).hexdigest()[:10]

    def stage_dir(self, stage: str) -> Path:
        return Path(self.workdir) / f"{stage}-{self.config_hash()}"
