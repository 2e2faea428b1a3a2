"""Kernel evaluation and Gram-matrix factorization.

Two kernels are supported: linear and RBF.  The convex trainer needs
explicit feature coordinates, so a Gram matrix can be eigen-factorized into
vectors that reproduce it (keeping a requested fraction of the spectrum),
and those vectors can be zero-centered to stand in for an intercept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateKernelError",
    "KernelConfig",
    "GramMatrix",
    "FactorizedFeatures",
    "kernel_matrix",
    "gram",
    "factorize",
    "center_features",
    "raw_features",
]


class DegenerateKernelError(ValueError):
    """Gram matrix has no positive spectrum to factorize."""


@dataclass(frozen=True)
class KernelConfig:
    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("rbf kernel needs gamma > 0")


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric PSD kernel matrix plus the config that produced it."""

    values: np.ndarray
    config: KernelConfig | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"Gram matrix must be square, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FactorizedFeatures:
    """Explicit coordinates X with X @ X.T reproducing a Gram matrix.

    ``eigenvalues`` is None when the coordinates are raw input features
    rather than the output of an eigen-factorization.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray | None
    retained_variance: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def kernel_matrix(cfg: KernelConfig, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-kernel values K(a_i, b_j), shape (len(a), len(b))."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if cfg.kind == "linear":
        return a @ b.T
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-cfg.gamma * sq)


def _symmetrize(k: np.ndarray) -> np.ndarray:
    # each off-diagonal pair is stored once so K[i,j] == K[j,i] bit-for-bit
    upper = np.triu(k)
    return upper + np.triu(k, 1).T


def gram(features: np.ndarray, cfg: KernelConfig) -> GramMatrix:
    """Full kernel matrix of a feature set; bitwise symmetric by construction."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[0] < 1:
        raise ValueError("need at least one instance")
    k = _symmetrize(kernel_matrix(cfg, x, x))
    if cfg.kind == "rbf":
        np.fill_diagonal(k, 1.0)
    return GramMatrix(k, cfg)


def factorize(g: GramMatrix, retain: float = 0.9) -> FactorizedFeatures:
    """Eigen-factorize a Gram matrix into explicit feature coordinates.

    Keeps the smallest number of leading eigenpairs whose eigenvalue mass
    reaches ``retain`` of the total (negative eigenvalues are clipped to
    zero first).  The returned vectors are V_d * sqrt(lambda_d), so their
    inner products approximate the Gram matrix with Frobenius error bounded
    by the dropped spectrum.
    """
    if not 0.0 < retain <= 1.0:
        raise ValueError(f"retain must be in (0, 1], got {retain}")
    vals, vecs = np.linalg.eigh(g.values)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1]
    np.maximum(vals, 0.0, out=vals)
    total = float(vals.sum())
    if not total > 0.0:
        raise DegenerateKernelError("Gram matrix has no positive eigenvalues")
    cum = np.cumsum(vals)
    # tiny slack so retain=2/3 on an exact 1/3-each spectrum keeps d=2
    d = int(np.argmax(cum >= retain * total - 1e-9 * total)) + 1
    kept = vals[:d]
    x = vecs[:, :d] * np.sqrt(kept)[None, :]
    return FactorizedFeatures(np.ascontiguousarray(x), kept, retain)


def center_features(f: FactorizedFeatures) -> FactorizedFeatures:
    """Subtract the column mean from every coordinate (intercept stand-in)."""
    centered = f.vectors - f.vectors.mean(axis=0, keepdims=True)
    return FactorizedFeatures(centered, f.eigenvalues, f.retained_variance)


def raw_features(x: np.ndarray) -> FactorizedFeatures:
    """Wrap raw input features in the factorized-features container."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return FactorizedFeatures(x, None, 1.0)
