"""Independent oracles the tests check the package against.

Everything here is deliberately written from the format/metric definitions
with no imports from oxbench's implementation modules, so a bug cannot
cancel itself out. The frozen byte strings come from ecosystem tools
(tf.io.TFRecordWriter / tf.train.Example on tensorflow-cpu 2.21).
"""

from __future__ import annotations

import struct


# --- bit-by-bit CRC32C (no tables shared with the implementation) ---------------


def crc32c_bitwise(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0x82F63B78 if crc & 1 else crc >> 1
    return crc ^ 0xFFFFFFFF


def masked_crc_bitwise(data: bytes) -> int:
    crc = crc32c_bitwise(data)
    return (((crc >> 15) | (crc << 17)) + 0xA282EAD8) & 0xFFFFFFFF


def oracle_write_tfrecord(payloads: list[bytes]) -> bytes:
    """Frame payloads per the published layout, with the bitwise CRC."""
    out = bytearray()
    for payload in payloads:
        header = struct.pack("<Q", len(payload))
        out += header
        out += struct.pack("<I", masked_crc_bitwise(header))
        out += payload
        out += struct.pack("<I", masked_crc_bitwise(payload))
    return bytes(out)


# --- independent feature-map encoder --------------------------------------------


def _ovarint(n: int) -> bytes:
    out = bytearray()
    while True:
        if n < 0x80:
            out.append(n)
            return bytes(out)
        out.append((n & 0x7F) | 0x80)
        n >>= 7


def _okey(field_no: int, wire_type: int) -> bytes:
    return _ovarint(field_no << 3 | wire_type)


def _owrap(field_no: int, body: bytes) -> bytes:
    return _okey(field_no, 2) + _ovarint(len(body)) + body


def oracle_encode_example(features: dict) -> bytes:
    """Encode {key: ("bytes"|"float"|"int64", values)} sorted by key."""
    entries = bytearray()
    for key in sorted(features):
        kind, values = features[key]
        if kind == "bytes":
            inner = b"".join(_owrap(1, v) for v in values)
            feature = _owrap(1, inner)
        elif kind == "float":
            packed = b"".join(struct.pack("<f", v) for v in values)
            feature = _owrap(2, _owrap(1, packed) if values else b"")
        elif kind == "int64":
            packed = b"".join(_ovarint(v & (1 << 64) - 1) for v in values)
            feature = _owrap(3, _owrap(1, packed) if values else b"")
        else:
            raise ValueError(kind)
        entries += _owrap(1, _owrap(1, key.encode()) + _owrap(2, feature))
    return _owrap(1, bytes(entries))


def oracle_encode_unpacked_int64(key: str, values: list[int]) -> bytes:
    """Same message with the int64 list in unpacked form."""
    inner = b"".join(_okey(1, 0) + _ovarint(v & (1 << 64) - 1) for v in values)
    feature = _owrap(3, inner)
    entry = _owrap(1, _owrap(1, key.encode()) + _owrap(2, feature))
    return _owrap(1, entry)


def oracle_encode_unpacked_floats(key: str, values: list[float]) -> bytes:
    inner = b"".join(_okey(1, 5) + struct.pack("<f", v) for v in values)
    feature = _owrap(2, inner)
    entry = _owrap(1, _owrap(1, key.encode()) + _owrap(2, feature))
    return _owrap(1, entry)


# --- frozen ecosystem reference bytes --------------------------------------------

# tf.io.TFRecordWriter output for payloads [b"hello", b"", bytes(range(256))]
ECOSYSTEM_TFRECORD = bytes.fromhex(
    "0500000000000000eab2043e68656c6c6fbb1f1c"
    "19000000000000000029039807d8ea82a2"
    "00010000000000002fb308df"
    + bytes(range(256)).hex()
    + "60231ad3"
)

# tf.train.Example(...).SerializeToString(deterministic=True)
ECOSYSTEM_EXAMPLES = {
    "float_ab": ("0a130a110a0161120c120a0a080000803f00000040", {"a": ("float", [1.0, 2.0])}),
    "int_neg": ("0a170a150a016b12101a0e0a0c03ffffffffffffffffff0107", {"k": ("int64", [3, -1, 7])}),
    "bytes2": (
        "0a220a0f0a03696d6712080a060a0261620a000a0f0a0374787412080a060a047069636b",
        {"img": ("bytes", [b"ab", b""]), "txt": ("bytes", [b"pick"])},
    ),
    "empty": ("0a00", {}),
    "mixed": (
        "0a180a070a016e12021a000a0d0a0173120812060a040000003f",
        {"n": ("int64", []), "s": ("float", [0.5])},
    ),
}

# canonical xoshiro256** outputs (verified against the reference C code)
XOSHIRO_SEED42_U64 = [
    1546998764402558742,
    6990951692964543102,
    12544586762248559009,
    17057574109182124193,
    18295552978065317476,
    14199186830065750584,
]
XOSHIRO_SEED42_UNIFORMS = [
    0.08386297105988216,
    0.3789802506626686,
    0.6800434110281394,
    0.9246929453253876,
    0.9918039142821028,
]


# --- brute-force metric recomputation --------------------------------------------


def brute_mse(y: list[float], p: list[float]) -> float:
    assert len(y) == len(p)
    return sum((a - b) ** 2 for a, b in zip(y, p)) / len(y)


def brute_amse(trajectories: list[list[tuple[list[float], list[float]]]]) -> float:
    """trajectories: per trajectory, list of (ground_truth, predicted)."""
    per_traj = []
    for pairs in trajectories:
        mses = [brute_mse(y, p) for y, p in pairs]
        per_traj.append(sum(mses) / len(mses))
    return sum(per_traj) / len(per_traj)


def brute_namse(
    trajectories: list[list[tuple[list[float], list[float]]]],
    normalize_ground_truth: bool = True,
) -> float:
    dims = len(trajectories[0][0][0])
    preds = [p for pairs in trajectories for _, p in pairs]
    lo = [min(v[d] for v in preds) for d in range(dims)]
    hi = [max(v[d] for v in preds) for d in range(dims)]
    kept = [d for d in range(dims) if hi[d] > lo[d]]
    if not kept:
        return 0.0

    def norm(vec, apply):
        if apply:
            return [(vec[d] - lo[d]) / (hi[d] - lo[d]) for d in kept]
        return [vec[d] for d in kept]

    transformed = [
        [(norm(y, normalize_ground_truth), norm(p, True)) for y, p in pairs] for pairs in trajectories
    ]
    return brute_amse(transformed)


def brute_percentile_nearest_rank(values: list[float], p: float) -> float:
    import math

    ordered = sorted(values)
    rank = max(1, math.ceil(p * len(ordered)))
    return ordered[rank - 1]
