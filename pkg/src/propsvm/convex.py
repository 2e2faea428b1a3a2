"""Convex trainer: cutting planes over proportion-feasible labelings.

Instead of penalizing proportion mismatch, the labeling is constrained to
the set with per-bag positive fractions within eps of the targets, and the
non-convex labeling search is relaxed to a convex combination of candidate
labelings: minimize over simplex weights mu the value of the no-bias SVM
dual with kernel K * (sum_t mu_t y_t y_t^T).  Candidates are generated by a
coordinatewise (per feature dimension and sign) search for a labeling the
current dual variables violate most, which decomposes into the exact
per-bag linear assignment.  The weighted labeling matrix is finally
collapsed to one labeling via its leading eigenvector.

For the search to see coordinates, kernels are eigen-factorized into
explicit features; those are zero-centered to stand in for the bias the
dual dropped.  The relaxed problem is solved on the Gram matrix of those
centered coordinates, so search and objective agree; prediction evaluates
the original kernel against the stored raw training features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bagopt import optimize_bag_linear_constrained
from .data import BagPartition, Dataset, compute_proportions
from .kernels import (
    FactorizedFeatures,
    GramMatrix,
    KernelConfig,
    center_features,
    factorize,
    gram,
    raw_features,
)
from .model import PsvmModel
from .svm import SolverError, _run_box

__all__ = [
    "ConvParams",
    "ActiveSet",
    "find_violated_labeling",
    "solve_mkl",
    "recover_labels",
    "train_conv",
]


@dataclass(frozen=True)
class ConvParams:
    C: float = 1.0
    eps: float = 0.0
    kernel: KernelConfig = field(default_factory=lambda: KernelConfig("linear"))
    variance_frac: float = 0.9
    convergence_threshold: float = 1e-4
    max_cuts: int = 50
    mkl_tol: float = 1e-5
    mkl_max_iters: int = 100
    svm_tol: float = 1e-5

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.max_cuts < 1:
            raise ValueError("max_cuts must be >= 1")


@dataclass
class ActiveSet:
    """Candidate labelings with their simplex weights and inner solution."""

    labelings: np.ndarray  # (T, n), rows are +-1 labelings
    weights: np.ndarray  # (T,) on the simplex
    alpha: np.ndarray
    objective: float


def find_violated_labeling(
    alpha: np.ndarray,
    feats: FactorizedFeatures,
    part: BagPartition,
    eps: float,
) -> np.ndarray:
    """Labeling maximizing |sum_i alpha_i y_i x_i^(j)| over one coordinate j.

    Scans every feature dimension and sign; for each, the best feasible
    labeling decomposes bag-by-bag into an exact linear assignment.  Ties
    prefer the lowest dimension, then the positive sign.
    """
    a = np.asarray(alpha, dtype=np.float64).ravel()
    x = feats.vectors
    if a.shape[0] != x.shape[0] or part.n != x.shape[0]:
        raise ValueError("alpha, features, and partition sizes disagree")
    best_score = -np.inf
    best_js = None
    for j in range(x.shape[1]):
        col = a * x[:, j]
        for sign in (1.0, -1.0):
            coeffs = -sign * col
            total = 0.0
            for bag, p in zip(part.bags, part.proportions):
                total += optimize_bag_linear_constrained(coeffs[bag], p, eps)[1]
            if -total > best_score:
                best_score = -total
                best_js = (j, sign)
    j, sign = best_js
    labels = np.empty(part.n, dtype=np.float64)
    coeffs = -sign * a * x[:, j]
    for bag, p in zip(part.bags, part.proportions):
        labels[bag] = optimize_bag_linear_constrained(coeffs[bag], p, eps)[0]
    return labels


def _inner_solve(k, m, C, svm_tol):
    q = np.ascontiguousarray(k * m)
    ones = np.ones(k.shape[0])
    # KKT at svm_tol steers the MKL gradient; the duality-gap demand stays at
    # the public default, else low-rank mixtures make the tail crawl
    out, _ = _run_box(
        q, ones, float(C), float(svm_tol), 1e-3, 30_000 + 1000 * k.shape[0], False
    )
    alpha, _, dual, resid, gap, iters, status, _ = out
    if status != 0:
        raise SolverError(
            f"inner solve stalled (KKT residual {resid:.3e})", residual=float(resid)
        )
    return alpha, float(dual)


def solve_mkl(
    labelings,
    g,
    C: float,
    tol: float = 1e-5,
    max_iters: int = 100,
    svm_tol: float = 1e-5,
):
    """Minimize over simplex weights the no-bias SVM dual of the mixed kernel.

    Reduced-gradient descent: the largest weight is the reference component,
    descent directions are projected so weights stay on the simplex, and
    each step is backtracked against the inner SVM value.  Returns
    ``(weights, alpha, objective)``.
    """
    y = np.atleast_2d(np.asarray(labelings, dtype=np.float64))
    k = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    t_count = y.shape[0]
    mu = np.full(t_count, 1.0 / t_count)

    def mixed(mu_vec):
        return (y.T * mu_vec) @ y

    alpha, obj = _inner_solve(k, mixed(mu), C, svm_tol)
    if t_count == 1:
        return mu, alpha, obj

    for _ in range(max_iters):
        ay = y * alpha[None, :]
        grad = -0.5 * np.einsum("ti,ij,tj->t", ay, k, ay)
        ref = int(np.argmax(mu))
        reduced = grad - grad[ref]
        direction = -reduced
        direction[(mu <= 0.0) & (reduced > 0.0)] = 0.0
        direction[ref] = 0.0
        direction[ref] = -direction.sum()
        if float(np.linalg.norm(direction)) <= tol:
            break
        slope = float(grad @ direction)
        if slope >= 0.0:
            break
        negative = direction < 0.0
        step_max = float(np.min(mu[negative] / -direction[negative]))
        if step_max <= 0.0:
            break
        step = step_max
        improved = False
        for _ in range(30):
            trial = np.maximum(mu + step * direction, 0.0)
            trial /= trial.sum()
            alpha_try, obj_try = _inner_solve(k, mixed(trial), C, svm_tol)
            if obj_try <= obj + 1e-4 * step * slope:
                mu, alpha, obj = trial, alpha_try, obj_try
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return mu, alpha, obj


def recover_labels(active: ActiveSet, part: BagPartition) -> np.ndarray:
    """Collapse the weighted labeling matrix to one real-valued labeling.

    Takes the leading eigenpair of M = sum_t mu_t y_t y_t^T, scales the
    eigenvector by sqrt(lambda_1), and orients it toward the smaller
    bag-proportion error (ties keep the first nonzero entry positive).
    """
    y = active.labelings
    m = (y.T * active.weights) @ y
    vals, vecs = np.linalg.eigh(m)
    lead = max(float(vals[-1]), 0.0)
    yhat = np.sqrt(lead) * vecs[:, -1]
    plus = np.where(yhat >= 0.0, 1.0, -1.0)
    minus = np.where(-yhat >= 0.0, 1.0, -1.0)
    err_plus = float(
        np.abs(compute_proportions(plus, part.bags) - part.proportions).sum()
    )
    err_minus = float(
        np.abs(compute_proportions(minus, part.bags) - part.proportions).sum()
    )
    if err_minus < err_plus:
        return -yhat
    if err_plus < err_minus:
        return yhat
    nz = yhat[yhat != 0.0]
    if nz.size and nz[0] < 0.0:
        return -yhat
    return yhat


def _conv_inputs(data, params):
    """Centered explicit coordinates plus their Gram matrix."""
    if isinstance(data, Dataset):
        x = data.features
        if params.kernel.kind == "linear":
            feats = center_features(raw_features(x))
        else:
            feats = center_features(
                factorize(gram(x, params.kernel), params.variance_frac)
            )
        return feats, feats.vectors @ feats.vectors.T, x
    if isinstance(data, GramMatrix):
        feats = center_features(factorize(data, params.variance_frac))
        return feats, feats.vectors @ feats.vectors.T, None
    raise TypeError(f"expected Dataset or GramMatrix, got {type(data).__name__}")


def train_conv(data, part: BagPartition, params: ConvParams) -> PsvmModel:
    """Train by cutting planes: grow the labeling set until no progress.

    Starts the violated-labeling search from uniform dual variables; stops
    when the relaxed objective improves by less than the threshold, a
    duplicate labeling comes back, or ``max_cuts`` is reached.
    """
    feats, khat, x = _conv_inputs(data, params)
    n = khat.shape[0]
    if part.n != n:
        raise ValueError(f"partition covers {part.n} instances, data has {n}")

    alpha = np.full(n, 1.0 / n)
    labelings = []
    cut_objs = []
    warn = ()
    mu = np.ones(1)
    obj = np.inf
    for _ in range(params.max_cuts):
        cand = find_violated_labeling(alpha, feats, part, params.eps)
        if any(np.array_equal(cand, seen) for seen in labelings):
            break
        labelings.append(cand)
        mu_new, alpha_new, new_obj = solve_mkl(
            np.array(labelings),
            khat,
            params.C,
            tol=params.mkl_tol,
            max_iters=params.mkl_max_iters,
            svm_tol=params.svm_tol,
        )
        if new_obj > obj:
            # enlarging the active set cannot raise the true optimum, so an
            # increase is inner-solver noise: keep the carried set and stop
            labelings.pop()
            break
        mu, alpha = mu_new, alpha_new
        cut_objs.append(new_obj)
        if obj - new_obj < params.convergence_threshold:
            obj = new_obj
            break
        obj = new_obj
    else:
        warn += (f"cutting-plane loop hit max_cuts={params.max_cuts}",)

    active = ActiveSet(
        labelings=np.array(labelings),
        weights=mu,
        alpha=alpha,
        objective=float(obj),
    )
    yhat = recover_labels(active, part)
    coef = alpha * yhat
    return PsvmModel(
        coefficients=coef,
        bias=0.0,
        support_indices=np.flatnonzero(alpha > 0.0),
        kernel=params.kernel,
        train_features=x,
        objective=float(obj),
        labels=np.where(yhat >= 0.0, 1.0, -1.0),
        warnings=warn,
        cut_objectives=tuple(cut_objs),
    )
