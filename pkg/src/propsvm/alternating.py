"""Alternating trainer: anneal a latent labeling against an SVM.

The joint objective over a labeling y, weights w, and bias b is

    1/2 ||w||^2 + C * sum_i hinge(y_i, f(x_i)) + Cp * sum_k |ptilde_k(y) - p_k|

minimized by alternating two exact-or-convex steps: fit an SVM for fixed y,
then reassign every bag's labels exactly for the fixed classifier.  The
instance-loss weight is annealed from anneal_start_factor * C up to C
(growing by 1+anneal_delta per stage) so early stages are dominated by the
proportion term; several random restarts guard the non-convex landscape and
the lowest final objective wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bagopt import optimize_all_bags
from .data import BagPartition, Dataset
from .kernels import GramMatrix, KernelConfig, gram
from .model import PsvmModel
from .svm import solve_dual

__all__ = ["AlterParams", "psvm_objective", "train_alter"]


@dataclass(frozen=True)
class AlterParams:
    C: float = 1.0
    Cp: float = 1.0
    kernel: KernelConfig = field(default_factory=lambda: KernelConfig("linear"))
    restarts: int = 10
    anneal_delta: float = 0.5
    anneal_start_factor: float = 1e-5
    convergence_threshold: float = 1e-4
    max_inner_iters: int = 100
    seed: int = 0
    svm_tol: float = 1e-3
    record_history: bool = False

    def __post_init__(self):
        if not self.C > 0 or not self.Cp > 0:
            raise ValueError("C and Cp must be positive")
        if not 0 < self.anneal_start_factor <= 1:
            raise ValueError("anneal_start_factor must be in (0, 1]")
        if not self.anneal_delta > 0:
            raise ValueError("anneal_delta must be positive")
        if self.restarts < 1 or self.max_inner_iters < 1:
            raise ValueError("restarts and max_inner_iters must be >= 1")


def _objective_terms(w2, scores, y, part, C, Cp):
    hinge = float(np.sum(np.maximum(0.0, 1.0 - y * scores)))
    frac = np.array(
        [np.count_nonzero(y[bag] > 0) / bag.size for bag in part.bags]
    )
    prop = float(np.sum(np.abs(frac - part.proportions)))
    return 0.5 * w2 + C * hinge + Cp * prop


def psvm_objective(g, sol, y, part: BagPartition, C: float, Cp: float) -> float:
    """Joint objective at the solution's (w, b) and an arbitrary labeling y."""
    k = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    coef = sol.alpha * sol.labels_used
    raw = k @ coef
    w2 = float(coef @ raw)
    return _objective_terms(w2, raw + sol.bias, y, part, C, Cp)


def _resolve_gram(data, kernel):
    if isinstance(data, Dataset):
        return gram(data.features, kernel), data.features
    if isinstance(data, GramMatrix):
        return data, None
    raise TypeError(f"expected Dataset or GramMatrix, got {type(data).__name__}")


def train_alter(data, part: BagPartition, params: AlterParams) -> PsvmModel:
    """Train by annealed alternation from several random labelings.

    ``data`` may be a (label-free) Dataset or a precomputed GramMatrix.
    Restart r draws its initial labeling from seed ``params.seed + r``; the
    restart with the smallest final objective is returned (ties go to the
    lower restart index).
    """
    g, feats = _resolve_gram(data, params.kernel)
    n = g.n
    if part.n != n:
        raise ValueError(f"partition covers {part.n} instances, data has {n}")
    k = g.values

    best = None
    restart_finals = []
    histories = []
    for r in range(params.restarts):
        rng = np.random.default_rng(params.seed + r)
        y = rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
        sol = None
        w2 = 0.0
        raw = np.zeros(n)
        current = None
        warn = ()
        stage_traces = [] if params.record_history else None

        cs = params.anneal_start_factor * params.C
        first_stage = True
        while first_stage or cs < params.C:
            first_stage = False
            cs = min((1.0 + params.anneal_delta) * cs, params.C)
            ratio = params.Cp / cs
            trace = [] if params.record_history else None
            if sol is not None:
                # rescale the carried iterate to this stage's loss weight
                current = _objective_terms(w2, raw + sol.bias, y, part, cs, params.Cp)
            prev = None
            for _ in range(params.max_inner_iters):
                cand = solve_dual(g, y, cs, with_bias=True, tol=params.svm_tol)
                cand_coef = cand.alpha * cand.labels_used
                cand_raw = k @ cand_coef
                cand_w2 = float(cand_coef @ cand_raw)
                cand_obj = _objective_terms(
                    cand_w2, cand_raw + cand.bias, y, part, cs, params.Cp
                )
                # keep the previous classifier if the fresh solve is worse
                # (possible at finite solver tolerance); the objective must
                # never move up within a stage
                if current is None or cand_obj <= current:
                    sol, raw, w2, current = cand, cand_raw, cand_w2, cand_obj
                if trace is not None:
                    trace.append(current)
                y, _ = optimize_all_bags(raw + sol.bias, part, ratio)
                current = _objective_terms(w2, raw + sol.bias, y, part, cs, params.Cp)
                if trace is not None:
                    trace.append(current)
                if prev is not None and prev - current < params.convergence_threshold:
                    break
                prev = current
            else:
                warn += (
                    f"restart {r}: inner loop hit max_inner_iters "
                    f"at stage weight {cs:.3g}",
                )
            if stage_traces is not None:
                stage_traces.append(tuple(trace))

        restart_finals.append(current)
        if params.record_history:
            histories.append(tuple(stage_traces))
        if best is None or current < best[0]:
            best = (current, r, sol, y, warn)

    final_obj, _, sol, y, warn = best
    coef = sol.alpha * sol.labels_used
    return PsvmModel(
        coefficients=coef,
        bias=sol.bias,
        support_indices=sol.support_indices,
        kernel=params.kernel,
        train_features=feats,
        objective=float(final_obj),
        labels=y,
        warnings=warn,
        restart_objectives=tuple(restart_finals),
        history=tuple(histories) if params.record_history else None,
    )
