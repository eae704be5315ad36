import json

import numpy as np
import pytest

from gramdiff.neural import TENSOR_SHAPES, schedule_hash


def write_weight_file(path, n_r, n_t, schedule_params, seed=0, scale=0.05):
    """Independent writer for the cnn3-film-v1 layout (JSON line + f32 blob)."""
    rng = np.random.default_rng(seed)
    tensors = {}
    blob = bytearray()
    meta = {}
    for name, shape in TENSOR_SHAPES.items():
        arr = (scale * rng.standard_normal(shape)).astype("<f4")
        meta[name] = {"shape": list(shape), "offset": len(blob)}
        blob += arr.tobytes()
        tensors[name] = arr
    header = {
        "version": 1,
        "arch": "cnn3-film-v1",
        "dtype": "f32",
        "n_r": n_r,
        "n_t": n_t,
        "schedule_hash": schedule_hash(schedule_params),
        "tensors": meta,
    }
    with open(str(path), "wb") as f:
        f.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        f.write(b"\n")
        f.write(bytes(blob))
    return tensors


@pytest.fixture
def weight_file(tmp_path):
    params = {"t_max": 300, "beta_start": 1e-4, "beta_end": 0.02, "kind": "linear"}
    path = tmp_path / "weights.cnn3"
    tensors = write_weight_file(path, 16, 4, params, seed=3)
    return path, tensors, params
