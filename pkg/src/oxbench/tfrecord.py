"""TFRecord framing: length-prefixed records guarded by masked CRC32C.

Layout per record:
    8 bytes  little-endian unsigned payload length L
    4 bytes  masked CRC32C of the length bytes
    L bytes  payload
    4 bytes  masked CRC32C of the payload

The length checksum is verified before the payload is read, so a corrupt
length field can never trigger a huge allocation. Reading is single-pass
and keeps at most one record in memory.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator

from .errors import ChecksumMismatch, TruncatedRecord

_CRC_POLY = 0x82F63B78  # CRC32C (Castagnoli), reflected
_CRC_MASK_DELTA = 0xA282EAD8
_U32 = 0xFFFFFFFF


def _make_tables() -> list[list[int]]:
    t0 = []
    for i in range(256):
        c = i
        for _ in range(8):
            c = (c >> 1) ^ _CRC_POLY if c & 1 else c >> 1
        t0.append(c)
    tables = [t0]
    for k in range(1, 8):
        prev = tables[k - 1]
        tables.append([(prev[i] >> 8) ^ t0[prev[i] & 0xFF] for i in range(256)])
    return tables


_T = _make_tables()
_T0, _T1, _T2, _T3, _T4, _T5, _T6, _T7 = _T


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC32C over `data` (slice-by-8; ~10 MB/s in CPython)."""
    crc = (crc ^ _U32) & _U32
    n = len(data)
    i = 0
    end8 = n - (n % 8)
    while i < end8:
        b0, b1, b2, b3, b4, b5, b6, b7 = data[i : i + 8]
        crc ^= b0 | (b1 << 8) | (b2 << 16) | (b3 << 24)
        crc = (
            _T7[crc & 0xFF]
            ^ _T6[(crc >> 8) & 0xFF]
            ^ _T5[(crc >> 16) & 0xFF]
            ^ _T4[crc >> 24]
            ^ _T3[b4]
            ^ _T2[b5]
            ^ _T1[b6]
            ^ _T0[b7]
        )
        i += 8
    for b in data[end8:]:
        crc = (crc >> 8) ^ _T0[(crc ^ b) & 0xFF]
    return crc ^ _U32


def masked_crc32c(data: bytes) -> int:
    crc = crc32c(data)
    return (((crc >> 15) | (crc << 17)) + _CRC_MASK_DELTA) & _U32


@dataclass(frozen=True)
class RawRecord:
    """One framed record: payload plus its byte offset in the source stream."""

    payload: bytes
    offset: int


def parse_tfrecord_stream(source: BinaryIO) -> Iterator[RawRecord]:
    """Yield RawRecords in file order, validating both checksums.

    Raises ChecksumMismatch(offset) on either CRC failure and
    TruncatedRecord(offset) when the stream ends mid-record. Stops cleanly
    at exact end of stream.
    """
    offset = 0
    while True:
        header = source.read(12)
        if not header:
            return
        if len(header) < 12:
            raise TruncatedRecord(offset)
        length, length_crc = struct.unpack("<QI", header)
        if masked_crc32c(header[:8]) != length_crc:
            raise ChecksumMismatch(offset, "length")
        body = source.read(length + 4)
        if len(body) < length + 4:
            raise TruncatedRecord(offset)
        payload, payload_crc = body[:length], struct.unpack_from("<I", body, length)[0]
        if masked_crc32c(payload) != payload_crc:
            raise ChecksumMismatch(offset, "data")
        yield RawRecord(payload=payload, offset=offset)
        offset += 16 + length


def write_record(sink: BinaryIO, payload: bytes) -> None:
    header = struct.pack("<Q", len(payload))
    sink.write(header)
    sink.write(struct.pack("<I", masked_crc32c(header)))
    sink.write(payload)
    sink.write(struct.pack("<I", masked_crc32c(payload)))


def write_records(sink: BinaryIO, payloads: Iterable[bytes]) -> None:
    for payload in payloads:
        write_record(sink, payload)
