"""Append-only NDJSON persistence with an in-memory index.

Records are one JSON object per line in numbered segment files. A crash can
leave at most one torn final line; opening a store scans each segment,
indexes every complete record, and truncates a torn tail so the on-disk
bytes are always a valid NDJSON prefix of what was ingested.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

SEGMENT_PREFIX = "segment-"
SEGMENT_SUFFIX = ".ndjson"
DEFAULT_SEGMENT_MAX_BYTES = 256 << 20


@dataclass(frozen=True)
class Record:
    transfer_id: str
    testbed_id: str
    t: int
    profile: str
    metrics: dict[str, float]

    def to_json(self) -> str:
        # Key order follows dict insertion order (catalog order), which is
        # already deterministic; skipping sort_keys keeps the writer fast.
        return json.dumps(
            {
                "transfer_id": self.transfer_id,
                "testbed_id": self.testbed_id,
                "t": self.t,
                "profile": self.profile,
                "metrics": self.metrics,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_obj(cls, obj: dict) -> "Record":
        return cls(
            transfer_id=obj["transfer_id"],
            testbed_id=obj["testbed_id"],
            t=int(obj["t"]),
            profile=obj["profile"],
            metrics=obj["metrics"],
        )


class SegmentStore:
    """Single-writer segmented NDJSON store with per-transfer indexing."""

    def __init__(self, directory: str | Path, segment_max_bytes: int = DEFAULT_SEGMENT_MAX_BYTES):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.segment_max_bytes = segment_max_bytes
        self._lock = threading.Lock()
        # transfer_id -> t -> (segment index, byte offset)
        self._index: dict[str, dict[int, tuple[int, int]]] = {}
        self._segments: list[Path] = []
        self._open_fh = None
        self._open_size = 0
        self._recover()
        self._open_segment()

    # ------------------------------------------------------------------
    def _segment_path(self, idx: int) -> Path:
        return self.directory / f"{SEGMENT_PREFIX}{idx:05d}{SEGMENT_SUFFIX}"

    def _recover(self) -> None:
        self._segments = sorted(self.directory.glob(f"{SEGMENT_PREFIX}*{SEGMENT_SUFFIX}"))
        for seg_idx, path in enumerate(self._segments):
            valid_end = 0
            offset = 0
            with path.open("rb") as fh:
                for raw in fh:
                    if not raw.endswith(b"\n"):
                        break  # torn tail
                    try:
                        obj = json.loads(raw)
                        rec = Record.from_obj(obj)
                    except (ValueError, KeyError):
                        break  # corrupt line; nothing after it is trusted
                    self._index.setdefault(rec.transfer_id, {})[rec.t] = (seg_idx, offset)
                    offset += len(raw)
                    valid_end = offset
            if valid_end < path.stat().st_size:
                with path.open("rb+") as fh:
                    fh.truncate(valid_end)

    def _open_segment(self) -> None:
        if not self._segments:
            self._segments.append(self._segment_path(0))
        path = self._segments[-1]
        self._open_fh = path.open("ab")
        self._open_size = path.stat().st_size if path.exists() else 0

    def _rotate_if_needed(self) -> None:
        if self._open_size < self.segment_max_bytes:
            return
        self._open_fh.close()
        self._segments.append(self._segment_path(len(self._segments)))
        self._open_fh = self._segments[-1].open("ab")
        self._open_size = 0

    # ------------------------------------------------------------------
    def append(self, record: Record) -> None:
        with self._lock:
            self._rotate_if_needed()
            line = (record.to_json() + "\n").encode("utf-8")
            seg_idx = len(self._segments) - 1
            offset = self._open_size
            self._open_fh.write(line)
            self._open_size += len(line)
            self._index.setdefault(record.transfer_id, {})[record.t] = (seg_idx, offset)

    def append_many(self, records: list[Record]) -> None:
        with self._lock:
            self._rotate_if_needed()
            seg_idx = len(self._segments) - 1
            chunks = []
            offset = self._open_size
            for record in records:
                line = (record.to_json() + "\n").encode("utf-8")
                chunks.append(line)
                self._index.setdefault(record.transfer_id, {})[record.t] = (seg_idx, offset)
                offset += len(line)
            self._open_fh.write(b"".join(chunks))
            self._open_size = offset

    def flush(self, sync: bool = False) -> None:
        """Flush buffered lines to the OS; ``sync`` additionally fsyncs."""
        with self._lock:
            if self._open_fh:
                self._open_fh.flush()
                if sync:
                    os.fsync(self._open_fh.fileno())

    def close(self) -> None:
        with self._lock:
            if self._open_fh:
                self._open_fh.flush()
                self._open_fh.close()
                self._open_fh = None

    # ------------------------------------------------------------------
    @property
    def record_count(self) -> int:
        with self._lock:
            return sum(len(ts) for ts in self._index.values())

    def transfer_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._index)

    def index_keys(self) -> list[tuple[str, int]]:
        """Every persisted (transfer_id, t); used to seed dedup on restart."""
        with self._lock:
            return [(tid, t) for tid, ts in self._index.items() for t in ts]

    def has(self, transfer_id: str, t: int) -> bool:
        with self._lock:
            return t in self._index.get(transfer_id, {})

    def _read_at(self, seg_idx: int, offset: int) -> Record:
        path = self._segments[seg_idx]
        with path.open("rb") as fh:
            fh.seek(offset)
            return Record.from_obj(json.loads(fh.readline()))

    def get(self, transfer_id: str, t: int) -> Record | None:
        with self._lock:
            loc = self._index.get(transfer_id, {}).get(t)
        if loc is None:
            return None
        self.flush()
        return self._read_at(*loc)

    def query(
        self,
        transfer_id: str,
        t0: int,
        t1: int,
        keys: list[str] | None = None,
    ) -> list[tuple[int, dict[str, float | None]]]:
        """Ordered (t, values) rows over [t0, t1]; missing seconds are rows
        of explicit None values so gaps stay visible."""
        with self._lock:
            if transfer_id not in self._index:
                raise KeyError(f"unknown transfer {transfer_id!r}")
            locations = dict(self._index[transfer_id])
        self.flush()
        gap_names = keys
        if gap_names is None:
            # Unfiltered queries shape gap rows after the transfer's catalog.
            first = self._read_at(*locations[min(locations)])
            gap_names = list(first.metrics)
        out: list[tuple[int, dict[str, float | None]]] = []
        for t in range(t0, t1 + 1):
            loc = locations.get(t)
            if loc is None:
                out.append((t, {k: None for k in gap_names}))
                continue
            rec = self._read_at(*loc)
            if keys:
                out.append((t, {k: rec.metrics.get(k) for k in keys}))
            else:
                out.append((t, dict(rec.metrics)))
        return out

    def time_range(self, transfer_id: str) -> tuple[int, int] | None:
        with self._lock:
            ts = self._index.get(transfer_id)
            if not ts:
                return None
            return min(ts), max(ts)

    def iter_records(self, transfer_ids: list[str] | None = None) -> Iterator[Record]:
        """All records in (transfer_id, t) order."""
        self.flush()
        ids = transfer_ids if transfer_ids is not None else self.transfer_ids()
        for tid in ids:
            with self._lock:
                locations = sorted(self._index.get(tid, {}).items())
            for _, loc in locations:
                yield self._read_at(*loc)
