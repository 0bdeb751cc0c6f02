"""Durable review store for gold-set curation.

The store is a directory holding the immutable sampled pairs
(``pairs.jsonl``) and an append-only decision log (``decisions.log``), both
line-delimited JSON so philologists can audit them with standard tools.
The live state of a pair is simply the last decision about it; rebuilding
state from the log is the invariant the tests enforce.  Decision writes are
serialized and fsynced before being acknowledged.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable

from .errors import StoreCorruption
from .io import dumps
from .pairbuilder import AlignedPair

PENDING = "pending"
STATUSES = (PENDING, "accepted", "rejected", "edited")


class ReviewStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.pairs_path = self.root / "pairs.jsonl"
        self.log_path = self.root / "decisions.log"
        self._lock = threading.Lock()
        self._pairs: dict[str, dict] = {}
        self._order: list[str] = []
        self._state: dict[str, dict] = {}
        self._decision_count = 0
        self._load()

    # -- loading -----------------------------------------------------------

    def _load(self) -> None:
        if self.pairs_path.exists():
            for lineno, line in enumerate(
                self.pairs_path.read_text(encoding="utf-8").splitlines(), 1
            ):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    pid = rec["pair_id"]
                except (json.JSONDecodeError, KeyError) as exc:
                    raise StoreCorruption(f"pairs.jsonl line {lineno}: {exc}") from exc
                if pid not in self._pairs:
                    self._order.append(pid)
                self._pairs[pid] = rec
        if self.log_path.exists():
            for lineno, line in enumerate(
                self.log_path.read_text(encoding="utf-8").splitlines(), 1
            ):
                if not line.strip():
                    continue
                try:
                    decision = json.loads(line)
                    self._apply(decision)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise StoreCorruption(f"decisions.log line {lineno}: {exc}") from exc

    def _apply(self, decision: dict) -> None:
        pid = decision["pair_id"]
        if pid not in self._pairs:
            raise ValueError(f"decision about unknown pair {pid}")
        if decision["status"] not in STATUSES:
            raise ValueError(f"unknown status {decision['status']!r}")
        self._state[pid] = decision
        self._decision_count += 1

    # -- writing -----------------------------------------------------------

    def add_pairs(self, pairs: Iterable[AlignedPair | dict]) -> int:
        """Append new pairs as pending; already-known ids are skipped."""
        added = 0
        with self._lock:
            with open(self.pairs_path, "a", encoding="utf-8") as fp:
                for p in pairs:
                    rec = p.to_record() if isinstance(p, AlignedPair) else dict(p)
                    pid = rec["pair_id"]
                    if pid in self._pairs:
                        continue
                    fp.write(dumps(rec) + "\n")
                    self._pairs[pid] = rec
                    self._order.append(pid)
                    added += 1
                fp.flush()
                os.fsync(fp.fileno())
        return added

    def decide(
        self,
        pair_id: str,
        status: str,
        annotator: str,
        corrected_source: str | None = None,
        corrected_target: str | None = None,
        notes: str | None = None,
    ) -> dict:
        """Append a decision; durable before this returns."""
        if status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}")
        if pair_id not in self._pairs:
            raise KeyError(pair_id)
        decision = {
            "pair_id": pair_id,
            "status": status,
            "annotator": annotator,
            "timestamp": time.time(),
        }
        if corrected_source is not None:
            decision["corrected_source"] = corrected_source
        if corrected_target is not None:
            decision["corrected_target"] = corrected_target
        if notes is not None:
            decision["notes"] = notes
        with self._lock:
            with open(self.log_path, "a", encoding="utf-8") as fp:
                fp.write(dumps(decision) + "\n")
                fp.flush()
                os.fsync(fp.fileno())
            self._apply(decision)
        return decision

    # -- reading -----------------------------------------------------------

    def view(self, pair_id: str) -> dict:
        """Pair payload with its current status and any corrected texts."""
        pair = self._pairs[pair_id]
        decision = self._state.get(pair_id)
        status = decision["status"] if decision else PENDING
        return {
            "pair_id": pair_id,
            "source": (decision or {}).get("corrected_source", pair["src"]),
            "target": (decision or {}).get("corrected_target", pair["tgt"]),
            "original_source": pair["src"],
            "original_target": pair["tgt"],
            "status": status,
            "language": pair.get("language", "und"),
            "match_rate": pair.get("match_rate"),
            "lineage": pair.get("lineage", {}),
            "notes": (decision or {}).get("notes"),
            "annotator": (decision or {}).get("annotator"),
            "decided_at": (decision or {}).get("timestamp"),
        }

    def list_pairs(self, status: str | None = None) -> list[dict]:
        views = (self.view(pid) for pid in self._order)
        if status is None:
            return list(views)
        return [v for v in views if v["status"] == status]

    def stats(self) -> dict:
        counts = Counter(
            self._state[pid]["status"] if pid in self._state else PENDING
            for pid in self._order
        )
        return {
            "total": len(self._order),
            "decisions": self._decision_count,
            "by_status": {s: counts.get(s, 0) for s in STATUSES},
        }

    def statuses(self) -> dict[str, str]:
        return {
            pid: self._state[pid]["status"] if pid in self._state else PENDING
            for pid in self._order
        }

    def replay(self) -> "ReviewStore":
        """A fresh store rebuilt from the on-disk files alone."""
        return ReviewStore(self.root)


def sample_gold(
    pairs: Iterable[AlignedPair | dict],
    cap_per_stratum: int | dict[str, int],
    seed: int = 0,
    stratum_of=lambda rec: rec.get("lineage", {}).get("work_id", ""),
) -> list[dict]:
    """Stratified sample: at most the cap from each stratum (source work).

    A cap larger than a stratum takes the whole stratum.  Selection within a
    stratum is a seeded shuffle, so samples are reproducible.
    """
    by_stratum: dict[str, list[dict]] = defaultdict(list)
    for p in pairs:
        rec = p.to_record() if isinstance(p, AlignedPair) else dict(p)
        by_stratum[stratum_of(rec)].append(rec)
    rng = random.Random(seed)
    sampled: list[dict] = []
    for stratum in sorted(by_stratum):
        bucket = by_stratum[stratum]
        cap = (
            cap_per_stratum.get(stratum, 0)
            if isinstance(cap_per_stratum, dict)
            else cap_per_stratum
        )
        if len(bucket) <= cap:
            sampled.extend(bucket)
        else:
            sampled.extend(rng.sample(bucket, cap))
    return sampled
