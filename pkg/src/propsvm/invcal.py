"""Inverse-calibration baseline: regress proportion targets on bag means.

Each bag is collapsed to its kernel-space mean (a "super-instance") whose
regression target is the inverse sigmoid of the bag's positive fraction.
An eps-insensitive kernel regression over these K points then yields a
decision function on ordinary instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import BagPartition, Dataset
from .kernels import GramMatrix, KernelConfig, gram, _symmetrize
from .model import PsvmModel
from .svm import SolverError, _default_max_iter, _run_eq


@dataclass(frozen=True)
class InvCalParams:
    """Settings for the super-instance regression baseline."""

    Cp: float = 1.0
    eps: float = 0.0
    kernel: KernelConfig = field(default_factory=lambda: KernelConfig("linear"))
    p_clip: str = "half-step"
    svm_tol: float = 1e-3

    def __post_init__(self):
        if not self.Cp > 0:
            raise ValueError(f"Cp must be positive, got {self.Cp}")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.p_clip != "half-step":
            raise ValueError(f"unknown p_clip scheme {self.p_clip!r}")
        if not self.svm_tol > 0:
            raise ValueError(f"svm_tol must be positive, got {self.svm_tol}")


def super_instance_gram(g: GramMatrix | np.ndarray, part: BagPartition) -> np.ndarray:
    """Kernel of bag means: G[k, l] = mean of the instance kernel over B_k x B_l."""
    k = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    avg = np.zeros((k.shape[0], part.n_bags))
    for j, b in enumerate(part.bags):
        avg[b, j] = 1.0 / b.size
    return _symmetrize(avg.T @ k @ avg)


def invcal_targets(proportions, bag_sizes) -> np.ndarray:
    """Inverse-sigmoid targets, with proportions pulled inside (0, 1).

    A fraction at 0 or 1 has no finite target, so each p_k is clamped half a
    count-step into the unit interval: [1/(2 n_k), 1 - 1/(2 n_k)].  A size-1
    bag therefore always maps to 0.
    """
    p = np.asarray(proportions, dtype=np.float64).ravel()
    sizes = np.asarray(bag_sizes, dtype=np.float64).ravel()
    if p.shape != sizes.shape:
        raise ValueError(f"{p.shape[0]} proportions for {sizes.shape[0]} bag sizes")
    half = 0.5 / sizes
    clipped = np.clip(p, half, 1.0 - half)
    return -np.log(1.0 / clipped - 1.0)


def train_invcal(
    data: Dataset, part: BagPartition, params: InvCalParams
) -> PsvmModel:
    """Fit the baseline and return a per-instance kernel predictor.

    The regression dual is solved in classification form: 2K box-constrained
    multipliers with signs (+1 for the lower tube edge, -1 for the upper),
    a tiled super-instance kernel, and linear terms (z - eps, -z - eps).
    The net multiplier eta_k of bag k is spread uniformly over the bag's
    instances so the model evaluates against ordinary kernel rows.
    """
    if part.n != data.n:
        raise ValueError(f"partition covers {part.n} rows, dataset has {data.n}")
    g = gram(data.features, params.kernel)
    gs = super_instance_gram(g, part)
    sizes = part.bag_sizes()
    z = invcal_targets(part.proportions, sizes)

    nb = part.n_bags
    ktil = np.ascontiguousarray(np.tile(gs, (2, 2)))
    signs = np.concatenate([np.ones(nb), -np.ones(nb)])
    linear = np.concatenate([z - params.eps, -z - params.eps])
    out, _ = _run_eq(
        ktil,
        signs,
        linear,
        float(params.Cp),
        float(params.svm_tol),
        float(params.svm_tol),
        _default_max_iter(2 * nb),
        False,
    )
    beta, bias, _dual, resid, gap, _iters, status, _ = out
    if status != 0:
        raise SolverError(
            f"proportion regression did not converge "
            f"(KKT residual {resid:.3e}, gap {gap:.3e})",
            residual=float(resid),
        )

    eta = beta[:nb] - beta[nb:]
    coef = np.zeros(data.n)
    for k_, b in enumerate(part.bags):
        coef[b] = eta[k_] / b.size

    fit = gs @ eta + bias
    tube_miss = np.maximum(np.abs(fit - z) - params.eps, 0.0)
    objective = 0.5 * float(eta @ gs @ eta) + params.Cp * float(tube_miss.sum())

    return PsvmModel(
        coefficients=coef,
        bias=float(bias),
        support_indices=np.flatnonzero(coef != 0.0),
        kernel=params.kernel,
        train_features=np.array(data.features, copy=True),
        objective=objective,
        labels=None,
    )
