import struct

import numpy as np
import pytest


def write_gdch(path, spatial_stack):
    """Independent GDCH writer: header + float64 (re, im) blocks, little-endian."""
    count, n_r, n_t = spatial_stack.shape
    header = struct.pack("<4sHHHI", b"GDCH", 1, n_r, n_t, count)
    with open(str(path), "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(spatial_stack.astype("<c16")).tobytes())


def unit_gaussian_dataset(path, count, n_r=16, n_t=4, seed=1):
    """Spatial channels whose angular entries are i.i.d. CN(0, 1)."""
    rng = np.random.default_rng(seed)
    ht = (rng.standard_normal((count, n_r, n_t)) + 1j * rng.standard_normal((count, n_r, n_t))) / np.sqrt(2.0)
    spatial = np.fft.ifft2(ht, norm="ortho")
    write_gdch(path, spatial)
    return ht


@pytest.fixture(scope="session")
def trained_model(tmp_path_factory):
    """Train once on single-Gaussian data; shared by the acceptance checks."""
    from gramdiff_trainer import TrainSpec, train

    tmp = tmp_path_factory.mktemp("trained")
    dataset = tmp / "train.gdch"
    unit_gaussian_dataset(dataset, 8000)
    spec = TrainSpec(
        dataset_path=str(dataset),
        weights_path=str(tmp / "weights.cnn3"),
        goldens_path=str(tmp / "goldens.gdgv"),
        epochs=14,
        lr=3e-3,
        seed=0,
    )
    result = train(spec)
    return spec, result
