"""Dual SVM solver: SMO-style coordinate ascent on the box-constrained QP.

Solves  max_a  p.a - 1/2 a.Q.a  over 0 <= a <= C, optionally with the
equality constraint sum_i s_i a_i = 0 (the biased case).  Q is K * s s^T
for a kernel matrix K and coefficient signs s; labels may be real-valued
on the no-bias path, where Q = K * y y^T is passed whole.

Selection is maximal-violating-pair (two coordinates with the equality
constraint, one without).  Iterations stop only when the KKT residual is
within tolerance AND the duality gap is below tol*(1+|dual|); the KKT
criterion alone bounds the gap only by n*C*tol, which is too loose to
promise anything about the primal.  Both update rules maximize the dual
exactly on the chosen coordinates, so the dual objective never decreases.

The hot loops are numba-jitted; everything here is plain float64 with
strict IEEE semantics (no fastmath), so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .kernels import GramMatrix

__all__ = ["DualSolution", "SolverError", "solve_dual", "decision_values"]


class SolverError(RuntimeError):
    """Solver ran out of iterations; carries the best iterate and residual."""

    def __init__(self, message, solution=None, residual=None):
        super().__init__(message)
        self.solution = solution
        self.residual = residual


@dataclass(frozen=True)
class DualSolution:
    """Converged dual variables plus recovered bias and diagnostics."""

    alpha: np.ndarray
    bias: float
    objective_dual: float
    labels_used: np.ndarray
    kkt_residual: float
    gap: float
    iterations: int
    objectives: np.ndarray | None = None

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > 0.0)


@njit(cache=True)
def _eq_state(ktil, s, p, alpha, grad, C):
    """Bias recovery plus KKT residual, dual value, and duality gap.

    Used both by the in-loop stopping test and for the final report, so the
    gap that gates convergence is the gap of the solution actually returned.
    """
    n = alpha.shape[0]
    i = -1
    j = -1
    m_val = -np.inf
    M_val = np.inf
    bsum = 0.0
    nfree = 0
    for t in range(n):
        v = -s[t] * grad[t]
        at = alpha[t]
        if (s[t] > 0.0 and at < C) or (s[t] < 0.0 and at > 0.0):
            if v > m_val:
                m_val = v
                i = t
        if (s[t] > 0.0 and at > 0.0) or (s[t] < 0.0 and at < C):
            if v < M_val:
                M_val = v
                j = t
        if 0.0 < at < C:
            bsum += v
            nfree += 1
    if nfree > 0:
        b = bsum / nfree
    elif i >= 0 and j >= 0:
        b = 0.5 * (m_val + M_val)
    elif i >= 0:
        b = m_val
    elif j >= 0:
        b = M_val
    else:
        b = 0.0
    resid = m_val - M_val if (i >= 0 and j >= 0) else 0.0
    if resid < 0.0:
        resid = 0.0
    aqa = 0.0
    pa = 0.0
    for t in range(n):
        aqa += alpha[t] * (grad[t] + p[t])
        pa += p[t] * alpha[t]
    dual_now = pa - 0.5 * aqa
    primal = 0.5 * aqa
    for t in range(n):
        slack = p[t] - (grad[t] + p[t]) - s[t] * b
        if slack > 0.0:
            primal += C * slack
    return b, resid, dual_now, primal - dual_now


@njit(cache=True)
def _smo_eq(ktil, s, p, C, tol, gap_tol, max_iter, obj_out):
    """Two-coordinate ascent under sum_i s_i a_i = 0, s_i in {-1,+1}."""
    n = ktil.shape[0]
    alpha = np.zeros(n)
    grad = -p.copy()  # gradient of 1/2 a.Q.a - p.a, with Q = ktil * s s^T
    cur_tol = tol
    dual = 0.0
    n_rec = 0
    status = 1
    it = 0
    while it < max_iter:
        i = -1
        j = -1
        m_val = -np.inf
        M_val = np.inf
        for t in range(n):
            v = -s[t] * grad[t]
            at = alpha[t]
            if (s[t] > 0.0 and at < C) or (s[t] < 0.0 and at > 0.0):
                if v > m_val:
                    m_val = v
                    i = t
            if (s[t] > 0.0 and at > 0.0) or (s[t] < 0.0 and at < C):
                if v < M_val:
                    M_val = v
                    j = t
        if i < 0 or j < 0:
            status = 0
            break
        resid = m_val - M_val
        if resid <= cur_tol:
            # KKT holds at cur_tol; also require a small duality gap before
            # accepting, else tighten and keep going
            _, _, dual_now, gap = _eq_state(ktil, s, p, alpha, grad, C)
            if gap <= gap_tol * (1.0 + abs(dual_now)):
                status = 0
                break
            cur_tol *= 0.5
            if cur_tol < 1e-14:
                status = 0
                break
            continue
        it += 1
        eta = ktil[i, i] + ktil[j, j] - 2.0 * ktil[i, j]
        lim_i = C - alpha[i] if s[i] > 0.0 else alpha[i]
        lim_j = alpha[j] if s[j] > 0.0 else C - alpha[j]
        if eta > 1e-300:
            delta = resid / eta
        else:
            delta = np.inf
        if lim_i < delta:
            delta = lim_i
        if lim_j < delta:
            delta = lim_j
        new_i = alpha[i] + s[i] * delta
        new_j = alpha[j] - s[j] * delta
        if delta == lim_i:
            new_i = C if s[i] > 0.0 else 0.0
        if delta == lim_j:
            new_j = 0.0 if s[j] > 0.0 else C
        alpha[i] = new_i
        alpha[j] = new_j
        if eta > 1e-300:
            dual += delta * resid - 0.5 * delta * delta * eta
        else:
            dual += delta * resid
        for t in range(n):
            grad[t] += s[t] * delta * (ktil[t, i] - ktil[t, j])
        if n_rec < obj_out.shape[0]:
            obj_out[n_rec] = dual
            n_rec += 1

    b, resid, dual_now, gap = _eq_state(ktil, s, p, alpha, grad, C)
    return alpha, b, dual_now, resid, gap, it, status, n_rec


@njit(cache=True)
def _smo_box(q, p, C, tol, gap_tol, max_iter, obj_out):
    """One-coordinate ascent on the box alone (no equality constraint)."""
    n = q.shape[0]
    alpha = np.zeros(n)
    grad = -p.copy()
    cur_tol = tol
    dual = 0.0
    n_rec = 0
    status = 1
    it = 0
    while it < max_iter:
        best = 0.0
        i = -1
        up = False
        for t in range(n):
            g = grad[t]
            if alpha[t] < C and -g > best:
                best = -g
                i = t
                up = True
            if alpha[t] > 0.0 and g > best:
                best = g
                i = t
                up = False
        if i < 0 or best <= cur_tol:
            aqa = 0.0
            pa = 0.0
            for t in range(n):
                aqa += alpha[t] * (grad[t] + p[t])
                pa += p[t] * alpha[t]
            dual_now = pa - 0.5 * aqa
            primal = 0.5 * aqa
            for t in range(n):
                slack = -grad[t]  # p - Q.a
                if slack > 0.0:
                    primal += C * slack
            if i < 0 or primal - dual_now <= gap_tol * (1.0 + abs(dual_now)):
                status = 0
                break
            cur_tol *= 0.5
            if cur_tol < 1e-14:
                status = 0
                break
            continue
        it += 1
        qii = q[i, i]
        if qii > 1e-300:
            new = alpha[i] - grad[i] / qii
            if new < 0.0:
                new = 0.0
            elif new > C:
                new = C
        else:
            new = C if up else 0.0
        delta = new - alpha[i]
        dual += -delta * grad[i] - 0.5 * delta * delta * qii
        alpha[i] = new
        for t in range(n):
            grad[t] += delta * q[i, t]
        if n_rec < obj_out.shape[0]:
            obj_out[n_rec] = dual
            n_rec += 1

    best = 0.0
    for t in range(n):
        g = grad[t]
        if alpha[t] < C and -g > best:
            best = -g
        if alpha[t] > 0.0 and g > best:
            best = g
    aqa = 0.0
    pa = 0.0
    for t in range(n):
        aqa += alpha[t] * (grad[t] + p[t])
        pa += p[t] * alpha[t]
    dual_now = pa - 0.5 * aqa
    primal = 0.5 * aqa
    for t in range(n):
        slack = -grad[t]
        if slack > 0.0:
            primal += C * slack
    return alpha, 0.0, dual_now, best, primal - dual_now, it, status, n_rec


_EMPTY = np.empty(0, dtype=np.float64)


def _run_eq(ktil, s, p, C, tol, gap_tol, max_iter, record):
    buf = np.empty(max_iter, dtype=np.float64) if record else _EMPTY
    out = _smo_eq(ktil, s, p, C, tol, gap_tol, max_iter, buf)
    return out, (buf[: out[7]] if record else None)


def _run_box(q, p, C, tol, gap_tol, max_iter, record):
    buf = np.empty(max_iter, dtype=np.float64) if record else _EMPTY
    out = _smo_box(q, p, C, tol, gap_tol, max_iter, buf)
    return out, (buf[: out[7]] if record else None)


def _default_max_iter(n: int) -> int:
    return max(10_000, 1000 * n)


def solve_dual(
    g,
    y,
    C: float,
    with_bias: bool = True,
    tol: float = 1e-3,
    max_iter: int | None = None,
    record_objectives: bool = False,
) -> DualSolution:
    """Solve the hinge-loss dual for kernel matrix ``g`` and labels ``y``.

    ``y`` must be +-1 when ``with_bias`` is set (the equality-constrained
    dual); real-valued labels are accepted on the no-bias path.  Raises
    :class:`SolverError` carrying the best iterate if the iteration cap is
    hit before the KKT-and-gap stopping rule is satisfied.
    """
    k = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel matrix must be square, got {k.shape}")
    y = np.asarray(y, dtype=np.float64).ravel()
    n = k.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"{y.shape[0]} labels for {n} instances")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter is None:
        max_iter = _default_max_iter(n)
    ones = np.ones(n, dtype=np.float64)
    k = np.ascontiguousarray(k)

    if with_bias:
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("with_bias requires labels in {-1, +1}")
        out, objs = _run_eq(
            k, y, ones, float(C), float(tol), float(tol), max_iter, record_objectives
        )
    else:
        q = np.ascontiguousarray(k * np.outer(y, y))
        out, objs = _run_box(
            q, ones, float(C), float(tol), float(tol), max_iter, record_objectives
        )

    alpha, bias, dual, resid, gap, iters, status, _ = out
    sol = DualSolution(
        alpha=alpha,
        bias=float(bias),
        objective_dual=float(dual),
        labels_used=y.copy(),
        kkt_residual=float(resid),
        gap=float(gap),
        iterations=int(iters),
        objectives=objs,
    )
    if status != 0:
        raise SolverError(
            f"no convergence in {max_iter} iterations "
            f"(KKT residual {resid:.3e}, gap {gap:.3e})",
            solution=sol,
            residual=float(resid),
        )
    return sol


def decision_values(sol: DualSolution, cross: np.ndarray) -> np.ndarray:
    """Evaluate f(x) = sum_i a_i y_i K(x, x_i) + b for cross-kernel rows."""
    cross = np.atleast_2d(np.asarray(cross, dtype=np.float64))
    if cross.shape[1] != sol.alpha.shape[0]:
        raise ValueError(
            f"cross-kernel has {cross.shape[1]} columns for "
            f"{sol.alpha.shape[0]} training points"
        )
    return cross @ (sol.alpha * sol.labels_used) + sol.bias
