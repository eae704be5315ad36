"""File layouts shared with the estimator package, implemented independently.

Dataset ("GDCH"): magic | version u16 | n_r u16 | n_t u16 | count u32, then
`count` blocks of float64 (re, im) interleaved row-major spatial matrices,
little-endian throughout.

Weight file ("cnn3-film-v1"): one line of compact JSON (version, arch, dtype
"f32", n_r, n_t, schedule_hash, tensors: name -> {shape, offset}) followed by
a raw little-endian float32 blob.

Golden vectors ("GDGV"): magic | version u16 | n_r u16 | n_t u16 | count u32 |
crc32 u32, then records of (t u32, input block, output block) with complex128
blocks like the dataset format.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
import zlib

import numpy as np

DATASET_MAGIC = b"GDCH"
GOLDEN_MAGIC = b"GDGV"
_DATASET_HEADER = struct.Struct("<4sHHHI")
_GOLDEN_HEADER = struct.Struct("<4sHHHII")

TENSOR_ORDER = [
    ("conv1.w", (32, 2, 3, 3)),
    ("conv1.b", (32,)),
    ("film.fc1.w", (32, 16)),
    ("film.fc1.b", (32,)),
    ("film.fc2.w", (32, 32)),
    ("film.fc2.b", (32,)),
    ("conv2.w", (32, 32, 3, 3)),
    ("conv2.b", (32,)),
    ("conv3.w", (2, 32, 3, 3)),
    ("conv3.b", (2,)),
]


class FormatError(ValueError):
    pass


def schedule_hash(params: dict) -> str:
    canon = json.dumps(
        {
            "beta_end": float(params["beta_end"]),
            "beta_start": float(params["beta_start"]),
            "kind": str(params["kind"]),
            "t_max": int(params["t_max"]),
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def load_dataset(path) -> np.ndarray:
    with open(str(path), "rb") as f:
        raw = f.read()
    if len(raw) < _DATASET_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n_r, n_t, count = _DATASET_HEADER.unpack_from(raw)
    if magic != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _DATASET_HEADER.size + count * n_r * n_t * 16
    if len(raw) != expected:
        raise FormatError(f"{path}: size {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<c16", offset=_DATASET_HEADER.size)
    return data.reshape(count, n_r, n_t).astype(np.complex128)


def _atomic_write(path: str, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_weights(path, tensors: dict, n_r: int, n_t: int, sched_hash: str) -> None:
    blob = bytearray()
    meta = {}
    for name, shape in TENSOR_ORDER:
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        if arr.shape != shape:
            raise FormatError(f"tensor {name} has shape {arr.shape}, expected {shape}")
        meta[name] = {"shape": list(shape), "offset": len(blob)}
        blob += arr.tobytes()
    header = {
        "version": 1,
        "arch": "cnn3-film-v1",
        "dtype": "f32",
        "n_r": int(n_r),
        "n_t": int(n_t),
        "schedule_hash": sched_hash,
        "tensors": meta,
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    _atomic_write(str(path), line + b"\n" + bytes(blob))


def read_weights(path) -> dict:
    with open(str(path), "rb") as f:
        raw = f.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing JSON header line")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("arch") != "cnn3-film-v1" or header.get("dtype") != "f32":
        raise FormatError(f"{path}: unsupported arch/dtype")
    blob = raw[nl + 1 :]
    tensors = {}
    for name, shape in TENSOR_ORDER:
        meta = header["tensors"][name]
        off = int(meta["offset"])
        n = int(np.prod(shape))
        if off + 4 * n > len(blob):
            raise FormatError(f"{path}: tensor {name} extends past end of blob")
        tensors[name] = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape).copy()
    return {"header": header, "tensors": tensors}


def write_goldens(path, records) -> None:
    if not records:
        raise FormatError("golden file needs at least one record")
    n_r, n_t = records[0][1].shape
    payload = bytearray()
    for t, inp, out in records:
        payload += struct.pack("<I", int(t))
        payload += np.ascontiguousarray(inp.astype("<c16")).tobytes()
        payload += np.ascontiguousarray(out.astype("<c16")).tobytes()
    header = _GOLDEN_HEADER.pack(GOLDEN_MAGIC, 1, n_r, n_t, len(records), zlib.crc32(bytes(payload)))
    _atomic_write(str(path), header + bytes(payload))


def read_goldens(path):
    with open(str(path), "rb") as f:
        raw = f.read()
    magic, version, n_r, n_t, count, crc = _GOLDEN_HEADER.unpack_from(raw)
    if magic != GOLDEN_MAGIC or version != 1:
        raise FormatError(f"{path}: bad magic/version")
    payload = raw[_GOLDEN_HEADER.size :]
    if zlib.crc32(payload) != crc:
        raise FormatError(f"{path}: checksum mismatch")
    block = n_r * n_t * 16
    records = []
    for i in range(count):
        base = i * (4 + 2 * block)
        (t,) = struct.unpack_from("<I", payload, base)
        inp = np.frombuffer(payload, dtype="<c16", count=n_r * n_t, offset=base + 4).reshape(n_r, n_t)
        out = np.frombuffer(payload, dtype="<c16", count=n_r * n_t, offset=base + 4 + block).reshape(n_r, n_t)
        records.append((int(t), inp.astype(np.complex128), out.astype(np.complex128)))
    return records
