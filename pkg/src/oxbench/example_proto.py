"""Minimal wire-format codec for the feature-map record payloads.

Decodes the subset of the standard example message used by RLDS episode
data: an outer message whose field 1 holds a map of string keys to typed
value lists (bytes / float32 / int64). Unknown fields are skipped; packed
and unpacked numeric lists are both accepted. Floats are widened to
float64 at decode time.

No protobuf runtime is involved: payloads are scanned in place over a
memoryview, one varint/tag at a time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import MalformedProto
from .tfrecord import RawRecord

BYTES_KIND = "bytes"
FLOAT_KIND = "float"
INT64_KIND = "int64"

_WIRE_VARINT = 0
_WIRE_I64 = 1
_WIRE_LEN = 2
_WIRE_I32 = 5


@dataclass
class Feature:
    """A typed value list; `kind` survives even when the list is empty."""

    kind: str
    values: tuple

    def __post_init__(self):
        if self.kind not in (BYTES_KIND, FLOAT_KIND, INT64_KIND):
            raise ValueError(f"bad feature kind {self.kind!r}")


@dataclass
class FeatureMap:
    entries: dict[str, Feature] = field(default_factory=dict)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __getitem__(self, key: str) -> Feature:
        return self.entries[key]

    def get(self, key: str) -> Feature | None:
        return self.entries.get(key)


class _Scanner:
    __slots__ = ("buf", "pos", "end", "offset")

    def __init__(self, buf: memoryview, pos: int, end: int, offset: int):
        self.buf = buf
        self.pos = pos
        self.end = end
        self.offset = offset

    def fail(self, detail: str):
        raise MalformedProto(self.offset, detail)

    def varint(self) -> int:
        result = 0
        shift = 0
        while True:
            if self.pos >= self.end:
                self.fail("varint runs past end of buffer")
            b = self.buf[self.pos]
            self.pos += 1
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                return result
            shift += 7
            if shift > 63:
                self.fail("varint longer than 10 bytes")

    def delimited(self) -> tuple[int, int]:
        n = self.varint()
        start = self.pos
        if start + n > self.end:
            self.fail("length-delimited field overruns buffer")
        self.pos = start + n
        return start, start + n

    def skip(self, wire_type: int):
        if wire_type == _WIRE_VARINT:
            self.varint()
        elif wire_type == _WIRE_I64:
            self.pos += 8
        elif wire_type == _WIRE_LEN:
            self.delimited()
        elif wire_type == _WIRE_I32:
            self.pos += 4
        else:
            self.fail(f"unsupported wire type {wire_type}")
        if self.pos > self.end:
            self.fail("field overruns buffer")


def _signed64(value: int) -> int:
    value &= (1 << 64) - 1
    return value - (1 << 64) if value >= 1 << 63 else value


def _decode_bytes_list(s: _Scanner, start: int, end: int) -> tuple:
    sub = _Scanner(s.buf, start, end, s.offset)
    out = []
    while sub.pos < sub.end:
        tag = sub.varint()
        if tag >> 3 == 1 and tag & 7 == _WIRE_LEN:
            a, b = sub.delimited()
            out.append(bytes(sub.buf[a:b]))
        else:
            sub.skip(tag & 7)
    return tuple(out)


def _decode_float_list(s: _Scanner, start: int, end: int) -> tuple:
    sub = _Scanner(s.buf, start, end, s.offset)
    out: list[float] = []
    while sub.pos < sub.end:
        tag = sub.varint()
        fno, wt = tag >> 3, tag & 7
        if fno == 1 and wt == _WIRE_LEN:  # packed
            a, b = sub.delimited()
            if (b - a) % 4:
                sub.fail("packed float list length not a multiple of 4")
            out.extend(struct.unpack_from(f"<{(b - a) // 4}f", sub.buf, a))
        elif fno == 1 and wt == _WIRE_I32:  # unpacked
            if sub.pos + 4 > sub.end:
                sub.fail("float element overruns buffer")
            out.append(struct.unpack_from("<f", sub.buf, sub.pos)[0])
            sub.pos += 4
        else:
            sub.skip(wt)
    return tuple(out)


def _decode_int64_list(s: _Scanner, start: int, end: int) -> tuple:
    sub = _Scanner(s.buf, start, end, s.offset)
    out: list[int] = []
    while sub.pos < sub.end:
        tag = sub.varint()
        fno, wt = tag >> 3, tag & 7
        if fno == 1 and wt == _WIRE_LEN:  # packed
            a, b = sub.delimited()
            inner = _Scanner(sub.buf, a, b, sub.offset)
            while inner.pos < inner.end:
                out.append(_signed64(inner.varint()))
        elif fno == 1 and wt == _WIRE_VARINT:  # unpacked
            out.append(_signed64(sub.varint()))
        else:
            sub.skip(wt)
    return tuple(out)


_LIST_DECODERS = {1: (BYTES_KIND, _decode_bytes_list), 2: (FLOAT_KIND, _decode_float_list), 3: (INT64_KIND, _decode_int64_list)}


def _decode_feature(s: _Scanner, start: int, end: int) -> Feature:
    sub = _Scanner(s.buf, start, end, s.offset)
    kind: str | None = None
    values: list = []
    while sub.pos < sub.end:
        tag = sub.varint()
        fno, wt = tag >> 3, tag & 7
        if fno in _LIST_DECODERS and wt == _WIRE_LEN:
            k, decoder = _LIST_DECODERS[fno]
            if kind is not None and kind != k:
                sub.fail(f"feature carries both {kind} and {k} lists")
            kind = k
            a, b = sub.delimited()
            values.extend(decoder(s, a, b))
        else:
            sub.skip(wt)
    if kind is None:
        sub.fail("feature has no value list")
    return Feature(kind=kind, values=tuple(values))


def _decode_map_entry(s: _Scanner, start: int, end: int) -> tuple[str, Feature]:
    sub = _Scanner(s.buf, start, end, s.offset)
    key: str | None = None
    feat: Feature | None = None
    while sub.pos < sub.end:
        tag = sub.varint()
        fno, wt = tag >> 3, tag & 7
        if fno == 1 and wt == _WIRE_LEN:
            a, b = sub.delimited()
            try:
                key = str(sub.buf[a:b], "utf-8")
            except UnicodeDecodeError:
                sub.fail("map key is not valid UTF-8")
        elif fno == 2 and wt == _WIRE_LEN:
            a, b = sub.delimited()
            feat = _decode_feature(s, a, b)
        else:
            sub.skip(wt)
    if key is None:
        sub.fail("map entry without key")
    if feat is None:
        sub.fail(f"map entry {key!r} without value")
    return key, feat


def decode_example(record: RawRecord) -> FeatureMap:
    """Decode a framed payload into a FeatureMap.

    Later map entries override earlier ones with the same key, so decoded
    keys are unique. Raises MalformedProto(record.offset, detail) on any
    wire-format violation.
    """
    buf = memoryview(record.payload)
    s = _Scanner(buf, 0, len(buf), record.offset)
    entries: dict[str, Feature] = {}
    while s.pos < s.end:
        tag = s.varint()
        fno, wt = tag >> 3, tag & 7
        if fno == 1 and wt == _WIRE_LEN:
            a, b = s.delimited()
            inner = _Scanner(buf, a, b, record.offset)
            while inner.pos < inner.end:
                itag = inner.varint()
                if itag >> 3 == 1 and itag & 7 == _WIRE_LEN:
                    ea, eb = inner.delimited()
                    key, feat = _decode_map_entry(s, ea, eb)
                    entries[key] = feat
                else:
                    inner.skip(itag & 7)
        else:
            s.skip(wt)
    return FeatureMap(entries=entries)


# --- encoding (fixture generation; the decoder is never tested against it alone)


def _varint(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _tag(fno: int, wt: int) -> bytes:
    return _varint((fno << 3) | wt)


def _len_field(fno: int, body: bytes) -> bytes:
    return _tag(fno, _WIRE_LEN) + _varint(len(body)) + body


def encode_example(features: dict[str, Feature]) -> bytes:
    """Serialize a feature map, entries sorted by key for determinism."""
    entries = b""
    for key, feat in sorted(features.items()):
        if feat.kind == BYTES_KIND:
            body = b"".join(_len_field(1, v) for v in feat.values)
            value = _len_field(1, body)
        elif feat.kind == FLOAT_KIND:
            body = struct.pack(f"<{len(feat.values)}f", *feat.values)
            value = _len_field(2, _len_field(1, body) if feat.values else b"")
        else:
            body = b"".join(_varint(v & ((1 << 64) - 1)) for v in feat.values)
            value = _len_field(3, _len_field(1, body) if feat.values else b"")
        entries += _len_field(1, _len_field(1, key.encode("utf-8")) + _len_field(2, value))
    return _len_field(1, entries)
