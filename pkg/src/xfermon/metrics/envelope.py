"""Metric envelopes: one per-second bundle of a transfer's counters.

Wire encoding (big-endian, self-describing):

    u8   format version (currently 1)
    u8   profile id (0 = full142, 1 = minimal14)
    u32  timestamp, seconds since run start
    u8   transfer_id byte length, then that many UTF-8 bytes
    u8   testbed_id byte length, then that many UTF-8 bytes
    u16  entry count
    entry count times: u8 catalog index, f64 value

Catalog indexes replace key names, which keeps a minimal envelope around
150 bytes and a full one around 1.3 KiB. Envelopes are immutable value
objects and safe to share across threads.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

from .catalog import (
    FULL_NAMES,
    MINIMAL_NAMES,
    Profile,
    catalog_names,
    key_index,
)

ENCODING_VERSION = 1

# Serialized size ceilings per profile, enforced by validate_envelope().
PAYLOAD_LIMIT_BYTES = {
    Profile.MINIMAL14: 320,
    Profile.FULL142: 1700,
}

MAX_ID_BYTES = 64

# Pipelining slack allowed between reported throughput and the slower of the
# two client-side rates.
THROUGHPUT_SLACK_FRACTION = 0.05

_HEADER = struct.Struct(">BBI")
_COUNT = struct.Struct(">H")
_ENTRY_FMTS: dict[int, struct.Struct] = {}
_CANONICAL_INDEXES = {
    Profile.FULL142: tuple(range(len(FULL_NAMES))),
    Profile.MINIMAL14: tuple(range(len(MINIMAL_NAMES))),
}


def _entry_struct(count: int) -> struct.Struct:
    st = _ENTRY_FMTS.get(count)
    if st is None:
        st = struct.Struct(">" + "Bd" * count)
        _ENTRY_FMTS[count] = st
    return st


@dataclass(frozen=True)
class MetricEnvelope:
    transfer_id: str
    testbed_id: str
    timestamp: int
    profile: Profile
    values: dict[str, float] = field(compare=True)

    def value(self, name: str) -> float:
        return self.values[name]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class EnvelopeDecodeError(ValueError):
    pass


def encode_envelope(env: MetricEnvelope) -> bytes:
    """Serialize an envelope to the compact wire form."""
    tid = env.transfer_id.encode("utf-8")
    tbid = env.testbed_id.encode("utf-8")
    if len(tid) > 255 or len(tbid) > 255:
        raise ValueError("envelope ids longer than 255 bytes cannot be encoded")
    names = catalog_names(env.profile)
    count = len(names)
    parts = [
        _HEADER.pack(ENCODING_VERSION, env.profile.wire_id, env.timestamp),
        bytes([len(tid)]),
        tid,
        bytes([len(tbid)]),
        tbid,
        _COUNT.pack(count),
    ]
    flat: list[float | int] = []
    for name in names:
        flat.append(key_index(name))
        flat.append(env.values[name])
    parts.append(_entry_struct(count).pack(*flat))
    return b"".join(parts)


def decode_envelope(data: bytes) -> MetricEnvelope:
    """Parse wire bytes back into an envelope. Raises EnvelopeDecodeError."""
    try:
        version, profile_id, timestamp = _HEADER.unpack_from(data, 0)
        if version != ENCODING_VERSION:
            raise EnvelopeDecodeError(f"unsupported encoding version {version}")
        off = _HEADER.size
        tid_len = data[off]
        off += 1
        transfer_id = data[off : off + tid_len].decode("utf-8")
        off += tid_len
        tbid_len = data[off]
        off += 1
        testbed_id = data[off : off + tbid_len].decode("utf-8")
        off += tbid_len
        (count,) = _COUNT.unpack_from(data, off)
        off += _COUNT.size
        profile = Profile.from_wire_id(profile_id)
        names = catalog_names(profile)
        if count != len(names):
            raise EnvelopeDecodeError(
                f"profile {profile.value} expects {len(names)} entries, frame has {count}"
            )
        flat = _entry_struct(count).unpack_from(data, off)
        off += _entry_struct(count).size
        if off != len(data):
            raise EnvelopeDecodeError(f"{len(data) - off} trailing bytes after envelope")
    except (struct.error, IndexError, UnicodeDecodeError) as exc:
        raise EnvelopeDecodeError(f"truncated or corrupt envelope: {exc}") from exc

    indexes = flat[0::2]
    if indexes == _CANONICAL_INDEXES[profile]:
        # Fast path: entries arrived in canonical catalog order.
        values = dict(zip(names, flat[1::2]))
    else:
        values = {}
        for i in range(count):
            idx = flat[2 * i]
            if idx >= len(FULL_NAMES):
                raise EnvelopeDecodeError(f"catalog index {idx} out of range")
            values[FULL_NAMES[idx]] = flat[2 * i + 1]
    return MetricEnvelope(
        transfer_id=transfer_id,
        testbed_id=testbed_id,
        timestamp=timestamp,
        profile=profile,
        values=values,
    )


def validate_envelope(env: MetricEnvelope) -> list[Violation]:
    """Check every envelope invariant; an empty list means the envelope is ok.

    Violations are data, not exceptions: a malformed envelope is a normal
    runtime event at the collector boundary.
    """
    out: list[Violation] = []
    names = catalog_names(env.profile)
    expected = set(names)

    if not env.transfer_id or len(env.transfer_id.encode("utf-8")) > MAX_ID_BYTES:
        out.append(Violation("bad-id", f"transfer_id empty or over {MAX_ID_BYTES} bytes"))
    if not env.testbed_id or len(env.testbed_id.encode("utf-8")) > MAX_ID_BYTES:
        out.append(Violation("bad-id", f"testbed_id empty or over {MAX_ID_BYTES} bytes"))
    if not isinstance(env.timestamp, int) or env.timestamp < 0 or env.timestamp > 0xFFFFFFFF:
        out.append(Violation("bad-timestamp", f"timestamp {env.timestamp!r} not a u32"))

    for name in names:
        if name not in env.values:
            out.append(Violation("missing-key", f"missing key {name}"))
    for name, val in env.values.items():
        if name not in expected:
            out.append(Violation("extra-key", f"unexpected key {name}"))
            continue
        if not isinstance(val, (int, float)) or not math.isfinite(val):
            out.append(Violation("non-finite", f"{name} = {val!r}"))
        elif val < 0:
            out.append(Violation("negative-value", f"{name} = {val}"))

    def _get(name: str) -> float | None:
        val = env.values.get(name)
        if isinstance(val, (int, float)) and math.isfinite(val):
            return float(val)
        return None

    rtt = _get("sender_rtt_us")
    if rtt is not None and rtt <= 0:
        out.append(Violation("rtt-nonpositive", f"sender_rtt_us = {rtt}"))

    retx = _get("sender_retransmitted_packets")
    sent = _get("sender_total_sent_packets")
    if retx is not None and sent is not None and retx > sent:
        out.append(
            Violation("retransmit-exceeds-sent", f"retransmits {retx} exceed sent {sent}")
        )

    thr = _get("transfer_throughput_bytes_per_s")
    cread = _get("sender_client_read_bytes_per_s")
    cwrite = _get("receiver_client_write_bytes_per_s")
    if thr is not None and cread is not None and cwrite is not None:
        ceiling = min(cread, cwrite) + THROUGHPUT_SLACK_FRACTION * thr
        if thr > ceiling:
            out.append(
                Violation(
                    "throughput-exceeds-path",
                    f"throughput {thr:.0f} exceeds client path {min(cread, cwrite):.0f} + slack",
                )
            )

    # Size check only makes sense once the structural checks pass.
    if not out:
        size = len(encode_envelope(env))
        limit = PAYLOAD_LIMIT_BYTES[env.profile]
        if size > limit:
            out.append(Violation("oversize", f"serialized size {size} > {limit}"))
    return out
