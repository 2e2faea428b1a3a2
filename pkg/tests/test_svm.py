import numpy as np
import pytest
from numpy.testing import assert_allclose

from propsvm.svm import SolverError, decision_values, solve_dual


def _project_box_hyperplane(v, s, C):
    """Exact Euclidean projection of v onto {0 <= a <= C, s @ a = 0}.

    The projection is clip(v - lam * s, 0, C) for the multiplier lam that
    zeroes the constraint; s @ clip(v - lam s, 0, C) is monotone in lam, so
    bisection nails it.
    """
    lo, hi = -1e6, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if s @ np.clip(v - mid * s, 0.0, C) > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * s, 0.0, C)


def _projected_gradient_dual(q, s, C, iters=200_000, lr=None):
    """Slow reference maximizer of sum(a) - 0.5 a'Qa over the dual feasible set."""
    n = q.shape[0]
    if lr is None:
        lr = 1.0 / (np.linalg.norm(q, 2) + 1.0)
    a = np.full(n, min(C, 1.0) / 2)
    if s is not None:
        a = _project_box_hyperplane(a, s, C)
    for _ in range(iters):
        grad = 1.0 - q @ a
        a_new = a + lr * grad
        if s is None:
            a_new = np.clip(a_new, 0.0, C)
        else:
            a_new = _project_box_hyperplane(a_new, s, C)
        if np.max(np.abs(a_new - a)) < 1e-12:
            a = a_new
            break
        a = a_new
    return a, a.sum() - 0.5 * a @ q @ a


def test_two_point_analytic():
    # mirrored unit points: maximal margin crosses the origin
    k = np.array([[1.0, -1.0], [-1.0, 1.0]])
    sol = solve_dual(k, [1.0, -1.0], C=10.0, tol=1e-6)
    assert_allclose(sol.alpha, [0.5, 0.5], atol=1e-6)
    assert abs(sol.bias) <= 1e-6
    assert_allclose(decision_values(sol, k), [1.0, -1.0], atol=1e-5)


def test_matches_projected_gradient_with_bias(rng):
    for _ in range(5):
        x = rng.normal(size=(8, 3))
        y = np.where(rng.random(8) < 0.5, 1.0, -1.0)
        y[0], y[1] = 1.0, -1.0  # keep both classes present
        k = x @ x.T
        C = 1.0
        sol = solve_dual(k, y, C=C, tol=1e-6)
        q = k * np.outer(y, y)
        _, ref = _projected_gradient_dual(q, y, C)
        assert sol.objective_dual >= ref - 1e-4


def test_matches_projected_gradient_no_bias(rng):
    for _ in range(5):
        x = rng.normal(size=(8, 3))
        y = np.where(rng.random(8) < 0.5, 1.0, -1.0)
        k = x @ x.T + np.eye(8) * 0.1
        C = 2.0
        sol = solve_dual(k, y, C=C, with_bias=False, tol=1e-6)
        q = k * np.outer(y, y)
        _, ref = _projected_gradient_dual(q, None, C)
        assert sol.bias == 0.0
        assert sol.objective_dual >= ref - 1e-4


def test_kkt_and_gap_contract(rng):
    for trial in range(8):
        n = 20
        x = rng.normal(size=(n, 4))
        y = np.where(x[:, 0] + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
        if abs(y.sum()) == n:
            y[0] = -y[0]
        gamma = [0.1, 1.0][trial % 2]
        d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        k = np.exp(-gamma * d2)
        tol = 1e-4
        sol = solve_dual(k, y, C=5.0, tol=tol)
        assert sol.kkt_residual <= tol
        assert sol.gap <= tol * (1.0 + abs(sol.objective_dual))


def test_recorded_objectives_ascend(rng):
    x = rng.normal(size=(15, 3))
    y = np.where(x[:, 0] > 0, 1.0, -1.0)
    sol = solve_dual(x @ x.T, y, C=1.0, tol=1e-6, record_objectives=True)
    obj = np.asarray(sol.objectives)
    assert obj.size >= 1
    assert np.all(np.diff(obj) >= -1e-9)
    assert_allclose(obj[-1], sol.objective_dual, rtol=1e-12)


def test_solver_error_carries_partial_solution(rng):
    x = rng.normal(size=(30, 3))
    y = np.where(x[:, 0] > 0, 1.0, -1.0)
    with pytest.raises(SolverError) as err:
        solve_dual(x @ x.T, y, C=100.0, tol=1e-10, max_iter=3)
    assert err.value.solution is not None
    assert err.value.solution.alpha.shape == (30,)
    assert err.value.residual > 0


def test_support_indices(rng):
    x = rng.normal(size=(12, 2))
    x[:6] += 4.0  # well separated: most points inactive
    y = np.array([1.0] * 6 + [-1.0] * 6)
    sol = solve_dual(x @ x.T, y, C=10.0, tol=1e-6)
    idx = sol.support_indices
    assert idx.size >= 1
    assert np.all(sol.alpha[idx] > 0)
    mask = np.ones(12, dtype=bool)
    mask[idx] = False
    assert np.all(sol.alpha[mask] == 0)


def test_validation_errors():
    k = np.eye(3)
    with pytest.raises(ValueError, match="square"):
        solve_dual(np.zeros((2, 3)), [1, -1], C=1.0)
    with pytest.raises(ValueError, match="2 labels for 3"):
        solve_dual(k, [1, -1], C=1.0)
    with pytest.raises(ValueError, match="C"):
        solve_dual(k, [1, -1, 1], C=0.0)
    with pytest.raises(ValueError, match="tol"):
        solve_dual(k, [1, -1, 1], C=1.0, tol=0.0)
    with pytest.raises(ValueError, match="labels in \\{-1, \\+1\\}"):
        solve_dual(k, [1, 0.5, -1], C=1.0, with_bias=True)
    # fractional labels are fine without the equality constraint
    sol = solve_dual(k, [1, 0.5, -1], C=1.0, with_bias=False)
    assert sol.alpha.shape == (3,)


def test_decision_values_shape_check(rng):
    x = rng.normal(size=(6, 2))
    y = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    sol = solve_dual(x @ x.T, y, C=1.0)
    with pytest.raises(ValueError, match="columns"):
        decision_values(sol, np.zeros((2, 5)))
    vals = decision_values(sol, x[:2] @ x.T)
    assert vals.shape == (2,)
