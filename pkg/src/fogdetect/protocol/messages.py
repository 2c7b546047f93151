"""Protocol messages and their canonical byte layouts.

Signed bytes are a length-prefixed concatenation of the message fields,
preceded by a type tag::

    tag || len(f1) || f1 || len(f2) || f2 || ...

with 4-byte big-endian lengths. Ciphertexts are fixed-width big-endian
(``2*|n|`` bits), ids UTF-8, timestamps 8-byte big-endian milliseconds.
The wire form appends the signature as one more length-prefixed field, so
parsing is strict and any bit flip changes either the signed bytes, the
signature, or makes the frame unparseable.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from ..blsig import Signature
from ..paillier import Ciphertext

TAG_SAMPLE = b"FSv1/sample"
TAG_AGGREGATE = b"FSv1/aggregate"
TAG_REPORT = b"FSv1/report"


class MalformedMessage(ValueError):
    pass


def _field(f: bytes) -> bytes:
    return struct.pack(">I", len(f)) + f


def _frame(tag: bytes, fields: list[bytes]) -> bytes:
    return _field(tag) + b"".join(_field(f) for f in fields)


def _unframe(data: bytes, tag: bytes, n_fields: int) -> list[bytes]:
    parts = []
    pos = 0
    for _ in range(n_fields + 1):
        if pos + 4 > len(data):
            raise MalformedMessage("truncated frame")
        (size,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if pos + size > len(data):
            raise MalformedMessage("field length exceeds frame")
        parts.append(data[pos : pos + size])
        pos += size
    if pos != len(data):
        raise MalformedMessage("trailing bytes")
    if parts[0] != tag:
        raise MalformedMessage(f"unexpected message tag {parts[0]!r}")
    return parts[1:]


def _ts(ts: int) -> bytes:
    return ts.to_bytes(8, "big")


def _parse_ts(b: bytes) -> int:
    if len(b) != 8:
        raise MalformedMessage("timestamp must be 8 bytes")
    return int.from_bytes(b, "big")


def _parse_id(b: bytes) -> str:
    try:
        return b.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedMessage("id is not valid UTF-8") from exc


def _parse_ct(b: bytes, width: int) -> Ciphertext:
    if len(b) != width:
        raise MalformedMessage(f"ciphertext must be {width} bytes")
    return Ciphertext.from_bytes(b)


@dataclass(frozen=True)
class EncryptedSample:
    ciphertext: Ciphertext
    sensor_id: str
    ts: int
    sigma: Signature

    kind = "sample"

    def signed_bytes(self, ct_width: int) -> bytes:
        return _frame(TAG_SAMPLE, [self.ciphertext.to_bytes(ct_width), self.sensor_id.encode(), _ts(self.ts)])

    def to_wire(self, ct_width: int) -> bytes:
        return self.signed_bytes(ct_width) + _field(self.sigma.data)

    @classmethod
    def from_wire(cls, data: bytes, ct_width: int) -> "EncryptedSample":
        ct, sid, ts, sig = _unframe(data, TAG_SAMPLE, 4)
        return cls(_parse_ct(ct, ct_width), _parse_id(sid), _parse_ts(ts), Signature(sig))


@dataclass(frozen=True)
class AggregationResult:
    ciphertext: Ciphertext
    sensor_id: str
    fd_id: str
    ts: int
    sigma: Signature

    kind = "aggregate"

    def signed_bytes(self, ct_width: int) -> bytes:
        return _frame(
            TAG_AGGREGATE,
            [self.ciphertext.to_bytes(ct_width), self.sensor_id.encode(), self.fd_id.encode(), _ts(self.ts)],
        )

    def to_wire(self, ct_width: int) -> bytes:
        return self.signed_bytes(ct_width) + _field(self.sigma.data)

    @classmethod
    def from_wire(cls, data: bytes, ct_width: int) -> "AggregationResult":
        ct, sid, fid, ts, sig = _unframe(data, TAG_AGGREGATE, 5)
        return cls(_parse_ct(ct, ct_width), _parse_id(sid), _parse_id(fid), _parse_ts(ts), Signature(sig))


@dataclass(frozen=True)
class DetectionReport:
    verdict: int  # 1 = normal, 0 = faulty
    sensor_id: str
    sd_id: str
    ts: int
    sigma: Signature

    kind = "report"

    def signed_bytes(self, ct_width: int = 0) -> bytes:
        return _frame(
            TAG_REPORT,
            [bytes([self.verdict]), self.sensor_id.encode(), self.sd_id.encode(), _ts(self.ts)],
        )

    def to_wire(self, ct_width: int = 0) -> bytes:
        return self.signed_bytes() + _field(self.sigma.data)

    @classmethod
    def from_wire(cls, data: bytes, ct_width: int = 0) -> "DetectionReport":
        verdict, sid, sdid, ts, sig = _unframe(data, TAG_REPORT, 5)
        if verdict not in (b"\x00", b"\x01"):
            raise MalformedMessage("verdict must be a single 0/1 byte")
        return cls(verdict[0], _parse_id(sid), _parse_id(sdid), _parse_ts(ts), Signature(sig))


Message = EncryptedSample | AggregationResult | DetectionReport
