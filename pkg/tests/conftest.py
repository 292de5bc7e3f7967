"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from lrsetd.tensor import multilinear


def unfold_by_index_formula(tensor, mode):
    """Brute-force mode unfolding straight from the lexicographic column
    index formula; independent of the library's reshape-based path."""
    dims = tensor.shape
    n_cols = 1
    for l, d in enumerate(dims):
        if l != mode:
            n_cols *= d
    out = np.zeros((dims[mode], n_cols))
    for idx in np.ndindex(*dims):
        j = 0
        stride = 1
        for l, d in enumerate(dims):
            if l == mode:
                continue
            j += idx[l] * stride
            stride *= d
        out[idx[mode], j] = tensor[idx]
    return out


def kron_others(factors, mode):
    """Explicit Kronecker factor of the matricized Tucker identity:
    kron(X_N, ..., X_{mode+1}, X_{mode-1}, ..., X_0)."""
    mats = [factors[j] for j in reversed(range(len(factors))) if j != mode]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def smooth_orthonormal_factors(dims, ranks):
    """Orthonormal factor matrices from boundary-decaying polynomial
    columns; smooth along every mode so the difference regularizer is
    compatible with the ground truth."""
    factors = []
    for d, r in zip(dims, ranks):
        t = np.linspace(0.0, 1.0, d)
        base = np.column_stack([(1.0 - t) ** (j + 1) for j in range(r)])
        q, _ = np.linalg.qr(base)
        factors.append(q)
    return factors


def synthetic_tucker(
    seed=0, dims=(20, 20, 20), ranks=(2, 2, 2), density=0.1, scale=2000.0
):
    """Ground-truth tensor [[S; X]] with smooth orthonormal factors and a
    sparse core (round(density * core size) nonzeros at image-like scale)."""
    rng = np.random.default_rng(seed)
    factors = smooth_orthonormal_factors(dims, ranks)
    core = np.zeros(ranks)
    k = max(1, int(round(density * core.size)))
    vals = (1.0 + np.abs(rng.standard_normal(k))) * scale
    vals *= np.sign(rng.standard_normal(k))
    core.ravel()[rng.permutation(core.size)[:k]] = vals
    return multilinear(core, factors), factors, core


def synthetic_image(height=256, width=256, seed=0):
    """Natural-looking test image in [0, 255]: smooth waves plus Gaussian
    blobs and mild texture."""
    rng = np.random.default_rng(seed)
    y, x = np.meshgrid(
        np.linspace(0, 1, height), np.linspace(0, 1, width), indexing="ij"
    )
    img = np.zeros((height, width, 3))
    for c in range(3):
        img[:, :, c] = 120 + 100 * np.sin(
            2 * np.pi * (1.5 * x + 0.7 * c)
        ) * np.cos(2 * np.pi * (1.1 * y - 0.3 * c))
        for _ in range(6):
            cx, cy = rng.uniform(0, 1, 2)
            amp = rng.uniform(-60, 60)
            s = rng.uniform(0.05, 0.2)
            img[:, :, c] += amp * np.exp(
                -((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s)
            )
    img += rng.standard_normal((height, width, 3)) * 2.0
    return np.clip(img, 0, 255)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
