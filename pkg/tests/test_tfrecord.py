import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oxbench.errors import ChecksumMismatch, TruncatedRecord
from oxbench.tfrecord import crc32c, masked_crc32c, parse_tfrecord_stream, write_records

from oracles import ECOSYSTEM_TFRECORD, masked_crc_bitwise, oracle_write_tfrecord


def parse_all(data: bytes):
    return list(parse_tfrecord_stream(io.BytesIO(data)))


def test_crc32c_standard_check_value():
    # the catalog check value for CRC-32C
    assert crc32c(b"123456789") == 0xE3069283


def test_crc32c_agrees_with_bitwise_oracle():
    for blob in (b"", b"\x00", b"hello", bytes(range(256)), b"x" * 1001):
        assert masked_crc32c(blob) == masked_crc_bitwise(blob)


def test_oracle_fixture_round_trips():
    payloads = [b"", b"a", bytes((i * 7) % 256 for i in range(1000))]
    records = parse_all(oracle_write_tfrecord(payloads))
    assert [r.payload for r in records] == payloads
    assert records[0].offset == 0
    assert records[1].offset == 16
    assert records[2].offset == 33


def test_writer_matches_oracle_writer_bytes():
    payloads = [b"hello", b"", bytes(range(256))]
    buf = io.BytesIO()
    write_records(buf, payloads)
    assert buf.getvalue() == oracle_write_tfrecord(payloads)


def test_ecosystem_writer_bytes_parse():
    records = parse_all(ECOSYSTEM_TFRECORD)
    assert [r.payload for r in records] == [b"hello", b"", bytes(range(256))]


def test_writer_matches_ecosystem_bytes():
    buf = io.BytesIO()
    write_records(buf, [b"hello", b"", bytes(range(256))])
    assert buf.getvalue() == ECOSYSTEM_TFRECORD


def test_empty_stream_yields_nothing():
    assert parse_all(b"") == []


def test_flipped_payload_bit_raises_at_record_offset():
    data = bytearray(oracle_write_tfrecord([b"aaaa", b"bbbb"]))
    # flip a payload bit of the second record (offset 20, header 12 bytes)
    data[20 + 12] ^= 0x01
    with pytest.raises(ChecksumMismatch) as err:
        parse_all(bytes(data))
    assert err.value.offset == 20


def test_every_single_bit_flip_is_detected():
    payloads = [b"abc", b"", b"0123456789"]
    clean = oracle_write_tfrecord(payloads)
    for byte_index in range(len(clean)):
        for bit in range(8):
            corrupted = bytearray(clean)
            corrupted[byte_index] ^= 1 << bit
            with pytest.raises((ChecksumMismatch, TruncatedRecord)):
                parse_all(bytes(corrupted))


def test_truncated_header_and_payload():
    clean = oracle_write_tfrecord([b"abcdef"])
    with pytest.raises(TruncatedRecord) as err:
        parse_all(clean[:7])  # inside the length header
    assert err.value.offset == 0
    with pytest.raises(TruncatedRecord):
        parse_all(clean[:-2])  # inside the trailing payload CRC


def test_corrupt_length_never_allocates():
    # a corrupted length is rejected by the length CRC before any payload read
    clean = bytearray(oracle_write_tfrecord([b"xy"]))
    clean[6] ^= 0xFF  # length becomes astronomically large
    with pytest.raises(ChecksumMismatch) as err:
        parse_all(bytes(clean))
    assert err.value.which == "length"


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.binary(min_size=0, max_size=10_000),
        min_size=0,
        max_size=6,
    )
)
def test_round_trip_property(payloads):
    records = parse_all(oracle_write_tfrecord(payloads))
    assert [r.payload for r in records] == payloads


def test_stream_parse_is_single_pass_bounded_memory(tmp_path):
    import tracemalloc

    path = tmp_path / "many.tfrecord"
    record = bytes(1024)
    with open(path, "wb") as f:
        write_records(f, (record for _ in range(2000)))
    file_size = path.stat().st_size
    assert file_size > 2_000_000

    with open(path, "rb") as f:
        tracemalloc.start()
        count = 0
        for rec in parse_tfrecord_stream(f):
            count += 1
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
    assert count == 2000
    # peak allocation tracks one record (plus read-ahead), not the file
    assert peak < file_size / 4
