"""Portable CNN noise predictor: weight-file schema and numpy forward pass.

Weight file ("cnn3-film-v1"):
    one line of compact JSON terminated by "\\n" with keys
        version, arch, dtype ("f32"), n_r, n_t, schedule_hash,
        tensors: {name: {shape: [...], offset: byte offset into the blob}}
    followed by a raw little-endian float32 blob. Tensor names:
        conv1.w (32,2,3,3)  conv1.b (32,)
        film.fc1.w (32,16)  film.fc1.b (32,)
        film.fc2.w (32,32)  film.fc2.b (32,)
        conv2.w (32,32,3,3) conv2.b (32,)
        conv3.w (2,32,3,3)  conv3.b (2,)

Forward pass convention: the complex state maps to two real planes scaled by
sqrt(2) (so each plane is unit variance when the complex entries are), runs
through three 3x3 cross-correlation layers with circular padding on both axes,
SiLU after layers 1-2, and a FiLM per-channel bias after layer 1 computed from
a 16-dim sinusoidal embedding of t/T through a two-layer fully connected map.
The two output planes map back to a complex noise prediction divided by
sqrt(2).

Golden-vector file ("GDGV"): little-endian header
    magic b"GDGV" | version u16 | n_r u16 | n_t u16 | count u32 | crc32 u32
then `count` records of (t u32, input block, output block), each block being
n_r*n_t complex128 values, (re, im) interleaved row-major.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib

import numpy as np

from .diffusion import NoiseSchedule
from .errors import ConfigError, DataFormatError, InvalidDimensionError
from .linalg import as_cmatrix

__all__ = [
    "ARCH_NAME",
    "NeuralDenoiser",
    "TENSOR_SHAPES",
    "read_goldens",
    "read_weights",
    "schedule_hash",
    "time_embedding",
    "write_goldens",
]

ARCH_NAME = "cnn3-film-v1"
HIDDEN = 32
EMB_DIM = 16

TENSOR_SHAPES = {
    "conv1.w": (HIDDEN, 2, 3, 3),
    "conv1.b": (HIDDEN,),
    "film.fc1.w": (HIDDEN, EMB_DIM),
    "film.fc1.b": (HIDDEN,),
    "film.fc2.w": (HIDDEN, HIDDEN),
    "film.fc2.b": (HIDDEN,),
    "conv2.w": (HIDDEN, HIDDEN, 3, 3),
    "conv2.b": (HIDDEN,),
    "conv3.w": (2, HIDDEN, 3, 3),
    "conv3.b": (2,),
}

_GOLDEN_MAGIC = b"GDGV"
_GOLDEN_HEADER = struct.Struct("<4sHHHII")


def schedule_hash(params: dict) -> str:
    """Canonical hash of schedule construction parameters."""
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


def read_weights(path) -> dict:
    """Parse a weight file into {'header': dict, 'tensors': {name: float32 array}}."""
    with open(str(path), "rb") as f:
        raw = f.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise DataFormatError(f"{path}: missing JSON header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: bad JSON header: {exc}") from exc
    if header.get("arch") != ARCH_NAME:
        raise DataFormatError(f"{path}: unsupported arch {header.get('arch')!r}")
    if header.get("dtype") != "f32":
        raise DataFormatError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    blob = raw[nl + 1 :]
    tensors = {}
    for name, shape in TENSOR_SHAPES.items():
        try:
            meta = header["tensors"][name]
        except KeyError:
            raise DataFormatError(f"{path}: missing tensor {name!r}") from None
        if tuple(meta["shape"]) != shape:
            raise DataFormatError(f"{path}: tensor {name!r} shape {meta['shape']} != {list(shape)}")
        off = int(meta["offset"])
        nbytes = int(np.prod(shape)) * 4
        if off < 0 or off + nbytes > len(blob):
            raise DataFormatError(f"{path}: tensor {name!r} extends past end of blob")
        tensors[name] = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)), offset=off).reshape(shape)
    return {"header": header, "tensors": tensors}


def time_embedding(t: int, t_max: int) -> np.ndarray:
    """16-dim sinusoidal embedding of t/T at octave frequencies 2^k * pi."""
    tau = t / t_max
    k = np.arange(EMB_DIM // 2)
    ang = (2.0**k) * np.pi * tau
    emb = np.empty(EMB_DIM, dtype=np.float32)
    emb[0::2] = np.sin(ang)
    emb[1::2] = np.cos(ang)
    return emb


def _silu(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.exp(-x))


def _conv3x3_circular(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-correlation with 3x3 kernels and circular padding on both axes."""
    out = np.zeros((w.shape[0],) + x.shape[1:], dtype=np.float32)
    for ky in range(3):
        for kx in range(3):
            shifted = np.roll(x, shift=(1 - ky, 1 - kx), axis=(1, 2))
            out += np.einsum("oi,iyx->oyx", w[:, :, ky, kx], shifted)
    return out + b[:, None, None]


class NeuralDenoiser:
    """Noise predictor backed by a cnn3-film-v1 weight file."""

    def __init__(self, path):
        loaded = read_weights(path)
        self.header = loaded["header"]
        self.tensors = loaded["tensors"]
        self.n_r = int(self.header["n_r"])
        self.n_t = int(self.header["n_t"])

    def check_schedule(self, schedule: NoiseSchedule) -> None:
        want = self.header.get("schedule_hash")
        have = schedule_hash(schedule.params())
        if want != have:
            raise ConfigError(f"weight-file schedule hash {want!r} does not match active schedule {have!r}")

    def forward_planes(self, ht: np.ndarray, t: int, t_max: int) -> np.ndarray:
        ht = as_cmatrix(ht)
        if ht.shape != (self.n_r, self.n_t):
            raise InvalidDimensionError(f"input shape {ht.shape} != weights ({self.n_r}, {self.n_t})")
        w = self.tensors
        planes = np.stack([ht.real, ht.imag]).astype(np.float32) * np.float32(np.sqrt(2.0))
        emb = time_embedding(t, t_max)
        hid = _silu(w["film.fc1.w"] @ emb + w["film.fc1.b"])
        film = w["film.fc2.w"] @ hid + w["film.fc2.b"]
        x = _conv3x3_circular(planes, w["conv1.w"], w["conv1.b"])
        x = _silu(x + film[:, None, None])
        x = _silu(_conv3x3_circular(x, w["conv2.w"], w["conv2.b"]))
        return _conv3x3_circular(x, w["conv3.w"], w["conv3.b"])

    def epsilon_unchecked(self, ht: np.ndarray, t: int, t_max: int) -> np.ndarray:
        """Forward pass without the schedule-hash check (golden emit/verify)."""
        out = self.forward_planes(ht, t, t_max)
        return (out[0].astype(np.float64) + 1j * out[1].astype(np.float64)) / np.sqrt(2.0)

    def epsilon(self, ht: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
        self.check_schedule(schedule)
        return self.epsilon_unchecked(ht, t, schedule.t_max)


def write_goldens(path, records: list[tuple[int, np.ndarray, np.ndarray]]) -> None:
    """Write (t, input, output) triples in the GDGV layout."""
    if not records:
        raise DataFormatError("golden file needs at least one record")
    n_r, n_t = records[0][1].shape
    payload = bytearray()
    for t, inp, out in records:
        if inp.shape != (n_r, n_t) or out.shape != (n_r, n_t):
            raise InvalidDimensionError("golden records must share one shape")
        payload += struct.pack("<I", int(t))
        payload += np.ascontiguousarray(inp.astype("<c16")).tobytes()
        payload += np.ascontiguousarray(out.astype("<c16")).tobytes()
    header = _GOLDEN_HEADER.pack(_GOLDEN_MAGIC, 1, n_r, n_t, len(records), zlib.crc32(bytes(payload)))
    with open(str(path), "wb") as f:
        f.write(header)
        f.write(payload)


def read_goldens(path) -> list[tuple[int, np.ndarray, np.ndarray]]:
    with open(str(path), "rb") as f:
        raw = f.read()
    if len(raw) < _GOLDEN_HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, n_r, n_t, count, crc = _GOLDEN_HEADER.unpack_from(raw)
    if magic != _GOLDEN_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise DataFormatError(f"{path}: unsupported version {version}")
    payload = raw[_GOLDEN_HEADER.size :]
    if zlib.crc32(payload) != crc:
        raise DataFormatError(f"{path}: checksum mismatch")
    block = n_r * n_t * 16
    rec_size = 4 + 2 * block
    if len(payload) != count * rec_size:
        raise DataFormatError(f"{path}: payload size {len(payload)} != {count} records of {rec_size}")
    records = []
    for i in range(count):
        base = i * rec_size
        (t,) = struct.unpack_from("<I", payload, base)
        inp = np.frombuffer(payload, dtype="<c16", count=n_r * n_t, offset=base + 4).reshape(n_r, n_t)
        out = np.frombuffer(payload, dtype="<c16", count=n_r * n_t, offset=base + 4 + block).reshape(n_r, n_t)
        records.append((int(t), inp.astype(np.complex128), out.astype(np.complex128)))
    return records
