"""Exact per-bag label assignment for fixed decision values.

Within one bag the label vector only interacts with the objective through
(a) each instance's own hinge loss and (b) the bag's positive fraction.
For any fixed count R of positive labels, the best choice is therefore the
R instances with the largest per-instance gain, so scanning R = 0..|B| with
prefix sums finds the exact optimum in O(|B| log |B|).
"""

from __future__ import annotations

import numpy as np

from .data import BagPartition

__all__ = [
    "optimize_bag_penalized",
    "optimize_all_bags",
    "optimize_bag_linear_constrained",
]


def optimize_bag_penalized(scores, proportion: float, ratio: float):
    """Exactly minimize  sum_i hinge(y_i, f_i) + ratio * |mean(y=+1) - p|.

    Returns ``(labels, objective)``.  The gain of flipping instance i from
    -1 to +1 is hinge(-1, f_i) - hinge(+1, f_i), which is monotone in f_i,
    so for each positive count the optimal flips are a prefix of the
    gain-sorted order (ties broken by ascending index).  On exact objective
    ties the larger positive count wins, which resolves hinge ties at
    f_i = 0 toward +1.
    """
    f = np.asarray(scores, dtype=np.float64).ravel()
    b = f.size
    if b == 0:
        raise ValueError("empty bag")
    if ratio < 0:
        raise ValueError(f"ratio must be non-negative, got {ratio}")
    loss_neg = np.maximum(0.0, 1.0 + f)
    loss_pos = np.maximum(0.0, 1.0 - f)
    gain = loss_neg - loss_pos
    order = np.argsort(-gain, kind="stable")
    gains = np.concatenate(([0.0], np.cumsum(gain[order])))
    counts = np.arange(b + 1)
    objs = loss_neg.sum() - gains + ratio * np.abs(counts / b - proportion)
    best_r = b - int(np.argmin(objs[::-1]))  # last minimizer
    labels = np.full(b, -1.0)
    labels[order[:best_r]] = 1.0
    # recompute directly so the value matches plain enumeration arithmetic
    objective = float(
        np.sum(np.maximum(0.0, 1.0 - labels * f))
        + ratio * abs(np.count_nonzero(labels > 0) / b - proportion)
    )
    return labels, objective


def optimize_all_bags(scores, part: BagPartition, ratio: float):
    """Run the penalized bag optimizer over every bag of a partition.

    Returns the full label vector and the summed objective
    sum_i hinge(y_i, f_i) + ratio * sum_k |p_tilde_k - p_k|.
    """
    f = np.asarray(scores, dtype=np.float64).ravel()
    if f.size != part.n:
        raise ValueError(f"{f.size} scores for {part.n} instances")
    labels = np.empty(part.n, dtype=np.float64)
    total = 0.0
    for bag, p in zip(part.bags, part.proportions):
        lab, obj = optimize_bag_penalized(f[bag], p, ratio)
        labels[bag] = lab
        total += obj
    return labels, float(total)


def optimize_bag_linear_constrained(coeffs, proportion: float, eps: float):
    """Exactly minimize  sum_i c_i y_i  subject to |mean(y=+1) - p| <= eps.

    Returns ``(labels, value)``.  For a fixed positive count R the minimum
    takes the R smallest coefficients as +1 (ties by ascending index), so
    prefix sums over the sorted order cover the whole grid.  If no count
    satisfies the constraint the nearest grid point to ``p`` is used.  On
    exact value ties the count closest to ``p`` wins, then the smaller
    count.
    """
    c = np.asarray(coeffs, dtype=np.float64).ravel()
    b = c.size
    if b == 0:
        raise ValueError("empty bag")
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    order = np.argsort(c, kind="stable")
    pref = np.concatenate(([0.0], np.cumsum(c[order])))
    values = 2.0 * pref - pref[-1]
    theta = np.arange(b + 1) / b
    dist = np.abs(theta - proportion)
    feasible = np.flatnonzero(dist <= eps)
    if feasible.size == 0:
        feasible = np.array([int(np.argmin(dist))])
    ranked = np.lexsort((dist[feasible], values[feasible]))
    best_r = int(feasible[ranked[0]])
    labels = np.full(b, -1.0)
    labels[order[:best_r]] = 1.0
    value = float(np.sum(c * labels))
    return labels, value
