import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from propsvm.bagopt import (
    optimize_all_bags,
    optimize_bag_linear_constrained,
    optimize_bag_penalized,
)
from propsvm.data import BagPartition


def _all_labelings(b):
    """Every +-1 vector of length b, one per row."""
    bits = (np.arange(2**b)[:, None] >> np.arange(b)) & 1
    return bits * 2.0 - 1.0


def _enum_penalized(f, p, ratio):
    pats = _all_labelings(f.size)
    hinge = np.maximum(0.0, 1.0 - pats * f).sum(axis=1)
    frac = (pats > 0).sum(axis=1) / f.size
    return float(np.min(hinge + ratio * np.abs(frac - p)))


def _enum_constrained(c, p, eps):
    pats = _all_labelings(c.size)
    frac = (pats > 0).sum(axis=1) / c.size
    feasible = np.abs(frac - p) <= eps
    if not feasible.any():
        grid = np.arange(c.size + 1) / c.size
        nearest = grid[np.argmin(np.abs(grid - p))]
        feasible = frac == nearest
    return float(np.min((pats * c).sum(axis=1)[feasible]))


def test_penalized_three_point_example():
    labels, obj = optimize_bag_penalized([2.0, 0.5, -3.0], 1 / 3, 10.0)
    assert_array_equal(labels, [1.0, -1.0, -1.0])
    assert_allclose(obj, 1.5)


def test_penalized_zero_ratio_tracks_signs():
    f = np.array([3.0, -0.2, 0.0, -7.0])
    labels, obj = optimize_bag_penalized(f, 0.9, 0.0)
    # penalty off: each label independently chases its own hinge; f=0 -> +1
    assert_array_equal(labels, [1.0, -1.0, 1.0, -1.0])
    assert_allclose(obj, np.maximum(0.0, 1.0 - labels * f).sum())


def test_penalized_singleton():
    labels, obj = optimize_bag_penalized([5.0], 1.0, 7.0)
    assert_array_equal(labels, [1.0])
    assert obj == 0.0


def test_penalized_tie_prefers_more_positives():
    # f=0 everywhere: every count costs the same hinge, so the tie rule decides
    labels, _ = optimize_bag_penalized([0.0, 0.0, 0.0], 0.0, 0.0)
    assert_array_equal(labels, [1.0, 1.0, 1.0])


def test_penalized_matches_enumeration(rng):
    for _ in range(120):
        b = int(rng.integers(1, 13))
        f = rng.normal(scale=3.0, size=b)
        p = int(rng.integers(0, b + 1)) / b
        ratio = float(rng.uniform(0.0, 100.0))
        _, obj = optimize_bag_penalized(f, p, ratio)
        assert obj == _enum_penalized(f, p, ratio)


def test_penalized_validation():
    with pytest.raises(ValueError, match="empty"):
        optimize_bag_penalized([], 0.5, 1.0)
    with pytest.raises(ValueError, match="non-negative"):
        optimize_bag_penalized([1.0], 0.5, -1.0)


def test_all_bags_sums_per_bag(rng):
    n = 12
    part = BagPartition(
        (np.arange(0, 5), np.arange(5, 9), np.arange(9, 12)),
        (0.4, 0.5, 1 / 3),
        n,
    )
    f = rng.normal(size=n)
    labels, total = optimize_all_bags(f, part, 4.0)
    acc = 0.0
    for bag, p in zip(part.bags, part.proportions):
        lab, obj = optimize_bag_penalized(f[bag], p, 4.0)
        assert_array_equal(labels[bag], lab)
        acc += obj
    assert_allclose(total, acc, rtol=1e-15)
    with pytest.raises(ValueError, match="12 instances"):
        optimize_all_bags(f[:5], part, 4.0)


def test_constrained_three_point_example():
    labels, value = optimize_bag_linear_constrained([-3.0, 1.0, 2.0], 1 / 3, 0.0)
    assert_array_equal(labels, [1.0, -1.0, -1.0])
    assert value == -6.0


def test_constrained_vacuous_eps():
    c = np.array([2.0, -1.0, 0.0, -4.0])
    labels, value = optimize_bag_linear_constrained(c, 1.0, 1.0)
    assert_array_equal(labels, [-1.0, 1.0, 1.0, 1.0])  # -sign(c), ties -> +1
    assert_allclose(value, -np.abs(c).sum())
    # same optimum value at p=0.5, but the count nearest p breaks the tie,
    # so the zero coefficient stays negative
    labels, value = optimize_bag_linear_constrained(c, 0.5, 1.0)
    assert_array_equal(labels, [-1.0, 1.0, -1.0, 1.0])
    assert_allclose(value, -np.abs(c).sum())


def test_constrained_two_point_example():
    labels, value = optimize_bag_linear_constrained([5.0, 7.0], 0.5, 0.0)
    assert_array_equal(labels, [1.0, -1.0])
    assert value == -2.0


def test_constrained_value_tie_prefers_count_near_p():
    labels, value = optimize_bag_linear_constrained([0.0, 0.0], 0.5, 1.0)
    assert value == 0.0
    assert_array_equal(labels, [1.0, -1.0])
    labels, _ = optimize_bag_linear_constrained([0.0, 0.0], 0.0, 1.0)
    assert_array_equal(labels, [-1.0, -1.0])


def test_constrained_infeasible_grid_uses_nearest():
    # grid {0, 1/2, 1} and p=0.3, eps=0.1 excludes everything; 1/2 is nearest
    labels, _ = optimize_bag_linear_constrained([4.0, -1.0], 0.3, 0.1)
    assert (labels > 0).mean() == 0.5
    assert_array_equal(labels, [-1.0, 1.0])


def test_constrained_matches_enumeration(rng):
    for _ in range(120):
        b = int(rng.integers(1, 13))
        c = rng.normal(scale=2.0, size=b)
        p = int(rng.integers(0, b + 1)) / b
        eps = float(rng.choice([0.0, 0.01, 0.1, 0.35]))
        labels, value = optimize_bag_linear_constrained(c, p, eps)
        assert value == _enum_constrained(c, p, eps)
        # the labeling itself reproduces the reported value
        assert value == float(np.sum(c * labels))


def test_constrained_validation():
    with pytest.raises(ValueError, match="empty"):
        optimize_bag_linear_constrained([], 0.5, 0.0)
    with pytest.raises(ValueError, match="non-negative"):
        optimize_bag_linear_constrained([1.0], 0.5, -0.1)
