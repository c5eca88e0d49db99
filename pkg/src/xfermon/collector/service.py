"""Ingest service: receives framed envelopes, persists them, serves queries.

Many agent connections feed one serialized persistence writer through a
queue; queries run against the store's in-memory index plus flushed
segments. Above ingest capacity the writer queue grows gracefully instead of
corrupting data or stalling the accept loop.

A second listener speaks a line-oriented query protocol:

    QUERY <transfer_id> <t0> <t1> [key ...]   -> NDJSON rows, then "END <n>"
    STATS                                     -> one JSON line
"""
from __future__ import annotations

import json
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from ..metrics.envelope import EnvelopeDecodeError, decode_envelope
from .framing import FrameDecoder, FrameError
from .storage import Record, SegmentStore

RECV_CHUNK = 256 * 1024
WRITE_BATCH = 1024
DEDUP_WINDOW_S = 600.0


@dataclass
class CollectorConfig:
    data_dir: str | Path = "collector-data"
    host: str = "127.0.0.1"
    ingest_port: int = 0  # 0 picks a free port
    query_port: int = 0

    @classmethod
    def load(cls, path: str | Path) -> "CollectorConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            data_dir=obj.get("data_dir", "collector-data"),
            host=obj.get("host", "127.0.0.1"),
            ingest_port=int(obj.get("ingest_port", 0)),
            query_port=int(obj.get("query_port", 0)),
        )


@dataclass
class IngestStats:
    msgs_per_s: float = 0.0
    queue_depth: int = 0
    persisted_total: int = 0
    reject_total: int = 0
    connections: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "msgs_per_s": self.msgs_per_s,
                "queue_depth": self.queue_depth,
                "persisted_total": self.persisted_total,
                "reject_total": self.reject_total,
                "connections": self.connections,
            }
        )


class CollectorService:
    """TCP ingest + query front over a SegmentStore."""

    def __init__(self, config: CollectorConfig | None = None):
        self.config = config or CollectorConfig()
        self.store = SegmentStore(self.config.data_dir)
        self._write_queue: deque[Record] = deque()
        self._queue_lock = threading.Lock()
        # Exactly-once within a ten-minute arrival window: keys seen recently
        # plus everything already persisted (seeded from the store on start).
        self._seen: set[tuple[str, int]] = set(self.store.index_keys())
        self._seen_order: deque[tuple[float, tuple[str, int]]] = deque()
        self._stop = threading.Event()
        self._persisted_total = 0
        self._reject_total = 0
        self._connections = 0
        self._rate_window: deque[tuple[float, int]] = deque(maxlen=64)
        self._threads: list[threading.Thread] = []
        self._ingest_sock: socket.socket | None = None
        self._query_sock: socket.socket | None = None
        self.ingest_address: tuple[str, int] | None = None
        self.query_address: tuple[str, int] | None = None
        # Test hook: per-batch writer delay to emulate a slow backing store.
        self.writer_delay_s = 0.0

    # ------------------------------------------------------------------
    def start(self) -> None:
        cfg = self.config
        self._ingest_sock = self._listen(cfg.host, cfg.ingest_port)
        self.ingest_address = self._ingest_sock.getsockname()
        self._query_sock = self._listen(cfg.host, cfg.query_port)
        self.query_address = self._query_sock.getsockname()
        for target, name in (
            (self._writer_loop, "collector-writer"),
            (self._accept_loop_ingest, "collector-ingest"),
            (self._accept_loop_query, "collector-query"),
        ):
            th = threading.Thread(target=target, name=name, daemon=True)
            th.start()
            self._threads.append(th)

    @staticmethod
    def _listen(host: str, port: int) -> socket.socket:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
        sock.listen(64)
        sock.settimeout(0.2)
        return sock

    def stop(self) -> None:
        self._stop.set()
        for th in self._threads:
            th.join(timeout=3.0)
        for sock in (self._ingest_sock, self._query_sock):
            if sock is not None:
                sock.close()
        self._drain_queue_to_store()
        self.store.flush(sync=True)
        self.store.close()

    # ------------------------------------------------------------------
    # ingest path
    # ------------------------------------------------------------------
    def _accept_loop_ingest(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._ingest_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            self._connections += 1
            th = threading.Thread(target=self._ingest_conn, args=(conn,), daemon=True)
            th.start()

    def _ingest_conn(self, conn: socket.socket) -> None:
        decoder = FrameDecoder()
        conn.settimeout(0.5)
        try:
            while not self._stop.is_set():
                try:
                    chunk = conn.recv(RECV_CHUNK)
                except socket.timeout:
                    continue
                except OSError:
                    return
                if not chunk:
                    return
                try:
                    payloads = decoder.feed(chunk)
                except FrameError:
                    # Oversized frame: reset the connection.
                    return
                if payloads:
                    self._ingest_payloads(payloads)
        finally:
            conn.close()
            self._connections -= 1

    def _ingest_payloads(self, payloads: list[bytes]) -> None:
        candidates: list[tuple[tuple[str, int], Record]] = []
        rejects = 0
        for payload in payloads:
            try:
                env = decode_envelope(payload)
            except EnvelopeDecodeError:
                rejects += 1
                continue
            values = env.values
            if values.get("sender_rtt_us", 1.0) <= 0 or values.get(
                "transfer_throughput_bytes_per_s", 0.0
            ) < 0:
                rejects += 1
                continue
            candidates.append(
                (
                    (env.transfer_id, env.timestamp),
                    Record(
                        transfer_id=env.transfer_id,
                        testbed_id=env.testbed_id,
                        t=env.timestamp,
                        profile=env.profile.value,
                        metrics=values,
                    ),
                )
            )
        if candidates:
            now = time.monotonic()
            accepted: list[Record] = []
            with self._queue_lock:
                while self._seen_order and now - self._seen_order[0][0] > DEDUP_WINDOW_S:
                    _, old_key = self._seen_order.popleft()
                    self._seen.discard(old_key)
                for key, record in candidates:
                    if key in self._seen:
                        rejects += 1
                        continue
                    self._seen.add(key)
                    self._seen_order.append((now, key))
                    accepted.append(record)
                self._write_queue.extend(accepted)
        if rejects:
            self._reject_total += rejects

    def _writer_loop(self) -> None:
        while not self._stop.is_set():
            if not self._drain_queue_to_store():
                time.sleep(0.002)

    def _drain_queue_to_store(self) -> bool:
        with self._queue_lock:
            if not self._write_queue:
                return False
            n = min(WRITE_BATCH, len(self._write_queue))
            batch = [self._write_queue.popleft() for _ in range(n)]
        if self.writer_delay_s > 0:
            time.sleep(self.writer_delay_s)
        self.store.append_many(batch)
        self.store.flush()
        self._persisted_total += len(batch)
        self._rate_window.append((time.monotonic(), len(batch)))
        return True

    # ------------------------------------------------------------------
    def stats(self) -> IngestStats:
        now = time.monotonic()
        recent = [n for ts, n in self._rate_window if now - ts <= 1.0]
        with self._queue_lock:
            depth = len(self._write_queue)
        return IngestStats(
            msgs_per_s=float(sum(recent)),
            queue_depth=depth,
            persisted_total=self._persisted_total,
            reject_total=self._reject_total,
            connections=self._connections,
        )

    # ------------------------------------------------------------------
    # query path
    # ------------------------------------------------------------------
    def _accept_loop_query(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._query_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            th = threading.Thread(target=self._query_conn, args=(conn,), daemon=True)
            th.start()

    def _query_conn(self, conn: socket.socket) -> None:
        conn.settimeout(5.0)
        try:
            buf = b""
            while not self._stop.is_set():
                try:
                    chunk = conn.recv(4096)
                except socket.timeout:
                    return
                except OSError:
                    return
                if not chunk:
                    return
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    reply = self._handle_query_line(line.decode("utf-8", "replace").strip())
                    if reply is None:
                        return
                    conn.sendall(reply.encode("utf-8"))
        finally:
            conn.close()

    def _handle_query_line(self, line: str) -> str | None:
        if not line:
            return None
        parts = line.split()
        cmd = parts[0].upper()
        if cmd == "STATS":
            return self.stats().to_json() + "\n"
        if cmd == "QUERY":
            if len(parts) < 4:
                return "ERR usage QUERY <transfer_id> <t0> <t1> [key ...]\n"
            tid = parts[1]
            try:
                t0, t1 = int(parts[2]), int(parts[3])
            except ValueError:
                return "ERR t0/t1 must be integers\n"
            keys = parts[4:] or None
            try:
                rows = self.query(tid, t0, t1, keys)
            except KeyError:
                return f"ERR not-found {tid}\n"
            lines = [
                json.dumps({"t": t, "values": values}, sort_keys=True) for t, values in rows
            ]
            lines.append(f"END {len(rows)}")
            return "\n".join(lines) + "\n"
        return f"ERR unknown command {cmd}\n"

    def query(
        self, transfer_id: str, t0: int, t1: int, keys: list[str] | None = None
    ) -> list[tuple[int, dict[str, float | None]]]:
        return self.store.query(transfer_id, t0, t1, keys)

    # ------------------------------------------------------------------
    def export_rows(
        self,
        transfer_ids: list[str] | None = None,
        labels: dict[str, str] | None = None,
    ) -> list[dict]:
        """Dataset-schema rows for persisted transfers.

        Labels come from the run manifest of the pipeline that produced the
        data; transfers without one are exported as normal.
        """
        labels = labels or {}
        out = []
        for rec in self.store.iter_records(transfer_ids):
            out.append(
                {
                    "testbed_id": rec.testbed_id,
                    "transfer_id": rec.transfer_id,
                    "t": rec.t,
                    "label": labels.get(rec.transfer_id, "normal"),
                    "metrics": rec.metrics,
                }
            )
        return out

    def export_ndjson(
        self,
        path: str | Path,
        transfer_ids: list[str] | None = None,
        labels: dict[str, str] | None = None,
    ) -> int:
        rows = self.export_rows(transfer_ids, labels)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True))
                fh.write("\n")
        return len(rows)
