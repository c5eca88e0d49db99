"""Collector: framing, ingest semantics, queries, persistence safety."""
import json
import socket
import time

import pytest

from xfermon.collector import (
    MAX_FRAME_BYTES,
    CollectorConfig,
    CollectorService,
    FrameDecoder,
    FrameError,
    Record,
    SegmentStore,
    encode_frame,
)
from xfermon.metrics import encode_envelope
from tests.test_metrics import make_envelope


@pytest.fixture
def collector(tmp_path):
    service = CollectorService(CollectorConfig(data_dir=tmp_path / "data"))
    service.start()
    yield service
    service.stop()


def send_frames(address, blob: bytes):
    with socket.create_connection(address) as sock:
        sock.sendall(blob)


def wait_for(predicate, timeout_s=5.0):
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


def query_lines(address, command: str) -> list[str]:
    with socket.create_connection(address) as sock:
        sock.sendall(command.encode() + b"\n")
        sock.shutdown(socket.SHUT_WR)
        data = b""
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            data += chunk
    return [l for l in data.decode().splitlines() if l]


# ----------------------------------------------------------------------
# framing
# ----------------------------------------------------------------------

def test_frame_roundtrip_and_partial_feed():
    payloads = [b"alpha", b"", b"x" * 1000]
    blob = b"".join(encode_frame(p) for p in payloads)
    decoder = FrameDecoder()
    out = []
    for i in range(0, len(blob), 7):  # drip-feed in 7-byte chunks
        out.extend(decoder.feed(blob[i : i + 7]))
    assert out == payloads
    assert decoder.pending_bytes == 0


def test_frame_oversize_rejected_on_encode_and_decode():
    with pytest.raises(FrameError):
        encode_frame(b"x" * (MAX_FRAME_BYTES + 1))
    decoder = FrameDecoder()
    with pytest.raises(FrameError):
        decoder.feed((MAX_FRAME_BYTES + 1).to_bytes(4, "big") + b"xx")


# ----------------------------------------------------------------------
# ingest
# ----------------------------------------------------------------------

def test_ingest_persists_each_valid_envelope_once(collector):
    envs = [make_envelope(transfer_id="in-a", t=t) for t in range(20)]
    blob = b"".join(encode_frame(encode_envelope(e)) for e in envs)
    send_frames(collector.ingest_address, blob)
    assert wait_for(lambda: collector.stats().persisted_total == 20)
    assert collector.stats().reject_total == 0


def test_ingest_rejects_duplicate_transfer_second(collector):
    env = make_envelope(transfer_id="dup-1", t=5)
    frame = encode_frame(encode_envelope(env))
    send_frames(collector.ingest_address, frame + frame)
    assert wait_for(lambda: collector.stats().reject_total == 1)
    assert wait_for(lambda: collector.stats().persisted_total == 1)


def test_ingest_rejects_malformed_envelope(collector):
    bad = encode_frame(b"\x07not an envelope")
    good = encode_frame(encode_envelope(make_envelope(transfer_id="ok-1", t=0)))
    send_frames(collector.ingest_address, bad + good)
    assert wait_for(lambda: collector.stats().persisted_total == 1)
    assert collector.stats().reject_total == 1


def test_oversize_frame_resets_connection(collector):
    with socket.create_connection(collector.ingest_address) as sock:
        sock.sendall((MAX_FRAME_BYTES + 5).to_bytes(4, "big"))
        sock.sendall(b"y" * 100)
        sock.settimeout(3.0)
        assert sock.recv(1) == b""  # server closed on us
    # service still alive for new connections
    send_frames(
        collector.ingest_address,
        encode_frame(encode_envelope(make_envelope(transfer_id="alive", t=0))),
    )
    assert wait_for(lambda: collector.stats().persisted_total == 1)


def test_queue_grows_gracefully_above_capacity(collector):
    collector.writer_delay_s = 0.05  # cripple the writer
    envs = [make_envelope(transfer_id="burst", t=t) for t in range(3000)]
    blob = b"".join(encode_frame(encode_envelope(e)) for e in envs)
    send_frames(collector.ingest_address, blob)
    assert wait_for(lambda: collector.stats().queue_depth > 500, timeout_s=10)
    depth_during = collector.stats().queue_depth
    collector.writer_delay_s = 0.0
    assert wait_for(lambda: collector.stats().persisted_total == 3000, timeout_s=20)
    assert depth_during > 500  # it queued instead of crashing or dropping
    assert collector.stats().queue_depth == 0


# ----------------------------------------------------------------------
# query
# ----------------------------------------------------------------------

def test_query_full_run_gap_and_subset(collector):
    for t in list(range(0, 30)) + list(range(31, 60)):  # second 30 missing
        env = make_envelope(transfer_id="q-1", t=t)
        send_frames(collector.ingest_address, encode_frame(encode_envelope(env)))
    assert wait_for(lambda: collector.stats().persisted_total == 59)

    rows = collector.query("q-1", 0, 59)
    assert len(rows) == 60
    gap_t, gap_values = rows[30]
    assert gap_t == 30
    assert len(gap_values) == 14
    assert all(v is None for v in gap_values.values())

    subset = collector.query(
        "q-1", 0, 59, ["receiver_ost_write_bytes_per_s", "receiver_client_write_bytes_per_s"]
    )
    for t, values in subset:
        assert set(values) == {
            "receiver_ost_write_bytes_per_s",
            "receiver_client_write_bytes_per_s",
        }
    with pytest.raises(KeyError):
        collector.query("nobody", 0, 1)


def test_query_wire_protocol(collector):
    env = make_envelope(transfer_id="w-1", t=3)
    send_frames(collector.ingest_address, encode_frame(encode_envelope(env)))
    assert wait_for(lambda: collector.stats().persisted_total == 1)

    lines = query_lines(collector.query_address, "QUERY w-1 3 3 sender_rtt_us")
    assert lines[-1] == "END 1"
    row = json.loads(lines[0])
    assert row["t"] == 3
    assert row["values"]["sender_rtt_us"] == pytest.approx(env.values["sender_rtt_us"])

    assert query_lines(collector.query_address, "QUERY nobody 0 1")[0].startswith("ERR not-found")
    stats = json.loads(query_lines(collector.query_address, "STATS")[0])
    assert stats["persisted_total"] == 1


def test_query_returns_exactly_published_values(collector):
    env = make_envelope(transfer_id="exact", t=9)
    send_frames(collector.ingest_address, encode_frame(encode_envelope(env)))
    assert wait_for(lambda: collector.stats().persisted_total == 1)
    rows = collector.query("exact", 9, 9)
    assert rows[0][1] == env.values  # float-identical round trip


# ----------------------------------------------------------------------
# export
# ----------------------------------------------------------------------

def test_export_reimport_identity(collector, tmp_path):
    for t in range(10):
        env = make_envelope(transfer_id="e-1", t=t)
        send_frames(collector.ingest_address, encode_frame(encode_envelope(env)))
    assert wait_for(lambda: collector.stats().persisted_total == 10)
    out = tmp_path / "export.ndjson"
    n = collector.export_ndjson(out, labels={"e-1": "network_loss"})
    assert n == 10

    from xfermon.sim import load_ndjson

    rows = load_ndjson(out)
    assert len(rows) == 10
    assert all(r.label == "network_loss" for r in rows)
    assert [r.t for r in rows] == list(range(10))

    again = tmp_path / "again.ndjson"
    with again.open("w") as fh:
        for r in rows:
            fh.write(r.to_json() + "\n")
    assert load_ndjson(again) == rows


def test_export_empty_store_is_empty_file(collector, tmp_path):
    out = tmp_path / "empty.ndjson"
    assert collector.export_ndjson(out) == 0
    assert out.read_text() == ""


# ----------------------------------------------------------------------
# persistence safety
# ----------------------------------------------------------------------

def test_recovery_truncates_torn_tail(tmp_path):
    d = tmp_path / "store"
    store = SegmentStore(d)
    for t in range(50):
        store.append(Record("r-1", "tb1", t, "minimal14", {"m": float(t)}))
    store.close()

    seg = next(d.glob("segment-*.ndjson"))
    intact = seg.read_bytes()
    torn = intact + b'{"transfer_id": "r-1", "testbed_id": "tb1", "t": 50, "pro'
    seg.write_bytes(torn)

    recovered = SegmentStore(d)
    assert recovered.record_count == 50
    assert seg.read_bytes() == intact  # torn tail gone, valid prefix kept
    # appends continue cleanly after recovery
    recovered.append(Record("r-1", "tb1", 50, "minimal14", {"m": 50.0}))
    recovered.flush()
    recovered.close()
    reopened = SegmentStore(d)
    assert reopened.record_count == 51
    assert reopened.get("r-1", 50).metrics["m"] == 50.0
    reopened.close()


def test_recovery_discards_corrupt_middle_line(tmp_path):
    d = tmp_path / "store"
    store = SegmentStore(d)
    for t in range(10):
        store.append(Record("r-2", "tb1", t, "minimal14", {"m": float(t)}))
    store.close()
    seg = next(d.glob("segment-*.ndjson"))
    lines = seg.read_bytes().splitlines(keepends=True)
    lines[6] = b'{"corrupt": tru\n'
    seg.write_bytes(b"".join(lines))

    recovered = SegmentStore(d)
    # records after the corruption point are not trusted
    assert recovered.record_count == 6
    recovered.close()


def test_restart_dedup_survives(tmp_path):
    d = tmp_path / "cdata"
    service = CollectorService(CollectorConfig(data_dir=d))
    service.start()
    env = make_envelope(transfer_id="persist", t=1)
    send_frames(service.ingest_address, encode_frame(encode_envelope(env)))
    assert wait_for(lambda: service.stats().persisted_total == 1)
    service.stop()

    service2 = CollectorService(CollectorConfig(data_dir=d))
    service2.start()
    send_frames(service2.ingest_address, encode_frame(encode_envelope(env)))
    assert wait_for(lambda: service2.stats().reject_total == 1)
    assert service2.store.record_count == 1
    service2.stop()
