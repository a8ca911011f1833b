import numpy as np
import pytest

from secmux import kernels

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the test's duration."""
    mod = kernels.available_backends()[request.param]
    for name in ("invertible_mask", "pair_collision_counts", "scan_information"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_channel(rng, n_in, n_out, sparsity=0.0):
    w = rng.random((n_in, n_out)) + 1e-3
    if sparsity:
        w[rng.random(w.shape) < sparsity] = 0.0
        w[np.arange(n_in), rng.integers(n_out, size=n_in)] += 0.5
    return w / w.sum(axis=1, keepdims=True)


def random_pmf(rng, k, sparsity=0.0):
    p = rng.random(k) + 1e-3
    if sparsity:
        p[rng.random(k) < sparsity] = 0.0
        p[rng.integers(k)] += 0.5
    return p / p.sum()
