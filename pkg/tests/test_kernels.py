import numpy as np
import pytest

from secmux import _fallback, gf, kernels
from secmux.channels import bsc
from secmux.regions import ScanGrid

compiled = kernels.available_backends().get("compiled")
needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "fallback")
    assert "fallback" in kernels.available_backends()


@pytest.mark.parametrize("q", [2, 3, 5])
def test_invertible_mask_matches_determinant(q, rng):
    mats = rng.integers(0, q, size=(300, 3, 3))
    want = [gf.determinant(gf.GFMatrix(m, q)) != 0 for m in mats]
    assert _fallback.invertible_mask(mats, q).tolist() == want
    if compiled is not None:
        assert compiled.invertible_mask(mats, q).tolist() == want


def test_pair_counts_oracle(rng):
    images = rng.integers(0, 3, size=(7, 9))
    want = np.zeros((9, 9), dtype=np.int64)
    for row in images:
        want += row[:, None] == row[None, :]
    for mod in kernels.available_backends().values():
        assert np.array_equal(mod.pair_collision_counts(images), want)


@needs_compiled
def test_scan_backends_agree():
    grid = ScanGrid(2, 2, 2, 6)
    pu, pvu, pxv = grid.batch(0, grid.size)
    w1, w2 = bsc(0.1).matrix, bsc(0.3).matrix
    a = _fallback.scan_information(pu, pvu, pxv, w1, w2)
    b = compiled.scan_information(pu, pvu, pxv, w1, w2)
    assert np.abs(a - b).max() < 1e-12


def test_pure_python_env(monkeypatch):
    import importlib

    monkeypatch.setenv("SECMUX_PURE_PYTHON", "1")
    try:
        mod = importlib.reload(kernels)
        assert mod.BACKEND == "fallback"
    finally:
        monkeypatch.delenv("SECMUX_PURE_PYTHON")
        importlib.reload(kernels)
