import numpy as np
import pytest
from numpy.testing import assert_allclose

from propsvm.kernels import (
    DegenerateKernelError,
    KernelConfig,
    center_features,
    factorize,
    gram,
    kernel_matrix,
    raw_features,
)


def test_kernel_config_validation():
    assert KernelConfig("linear").gamma is None
    assert KernelConfig("rbf", gamma=0.5).gamma == 0.5
    with pytest.raises(ValueError, match="unknown kernel"):
        KernelConfig("poly")
    with pytest.raises(ValueError, match="gamma"):
        KernelConfig("rbf")
    with pytest.raises(ValueError, match="gamma"):
        KernelConfig("rbf", gamma=-1.0)


def test_linear_gram_is_inner_products(rng):
    x = rng.normal(size=(7, 3))
    g = gram(x, KernelConfig("linear"))
    assert_allclose(g.values, x @ x.T)
    assert np.array_equal(g.values, g.values.T)  # bitwise symmetric


def test_rbf_values(rng):
    x = rng.normal(size=(6, 2))
    gamma = 0.7
    g = gram(x, KernelConfig("rbf", gamma=gamma))
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    assert_allclose(g.values, np.exp(-gamma * d2), atol=1e-12)
    assert np.array_equal(g.values, g.values.T)
    # the diagonal is pinned exactly, not just approximately
    assert np.all(np.diag(g.values) == 1.0)


def test_kernel_matrix_cross(rng):
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(5, 3))
    lin = kernel_matrix(KernelConfig("linear"), a, b)
    assert_allclose(lin, a @ b.T)
    rbf = kernel_matrix(KernelConfig("rbf", gamma=0.2), a, b)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    assert_allclose(rbf, np.exp(-0.2 * d2))


def test_factorize_reconstructs_at_full_retention(rng):
    x = rng.normal(size=(8, 3))
    g = gram(x, KernelConfig("linear"))
    feats = factorize(g, retain=1.0)
    assert_allclose(feats.vectors @ feats.vectors.T, g.values, atol=1e-10)
    # rank-3 gram needs only three eigen-directions
    assert feats.vectors.shape[1] == 3


def test_factorize_truncates(rng):
    x = rng.normal(size=(10, 4))
    g = gram(x, KernelConfig("rbf", gamma=0.5))
    full = factorize(g, retain=1.0)
    partial = factorize(g, retain=0.6)
    assert partial.vectors.shape[1] <= full.vectors.shape[1]
    # kept energy really is at least the requested share
    kept = (partial.vectors**2).sum()
    total = (full.vectors**2).sum()
    assert kept >= 0.6 * total - 1e-9 * total


def test_factorize_rejects_bad_retain_and_zero_matrix():
    from propsvm.kernels import GramMatrix

    g = GramMatrix(np.zeros((3, 3)), KernelConfig("linear"))
    with pytest.raises(ValueError, match="retain"):
        factorize(g, retain=0.0)
    with pytest.raises(DegenerateKernelError):
        factorize(g, retain=0.9)


def test_center_features_zeroes_column_means(rng):
    x = rng.normal(size=(9, 4)) + 3.0
    feats = center_features(raw_features(x))
    assert_allclose(feats.vectors.mean(axis=0), 0.0, atol=1e-12)
    # centering an inner-product factorization keeps pairwise geometry
    g = gram(x, KernelConfig("linear"))
    cf = center_features(factorize(g, retain=1.0))
    khat = cf.vectors @ cf.vectors.T
    h = np.eye(9) - np.ones((9, 9)) / 9
    assert_allclose(khat, h @ g.values @ h, atol=1e-9)


def test_raw_features_passthrough(rng):
    x = rng.normal(size=(5, 2))
    feats = raw_features(x)
    assert feats.vectors is x or np.shares_memory(feats.vectors, x)
