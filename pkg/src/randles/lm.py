"""Levenberg-Marquardt (damped Gauss-Newton) for small dense problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    converged: bool
    iterations: int
    message: str


def fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                f0: np.ndarray | None = None) -> np.ndarray:
    """Central-difference Jacobian with steps relative to |x_j|."""
    x = np.asarray(x, dtype=float)
    h = np.cbrt(np.finfo(float).eps) * np.maximum(np.abs(x), 1e-8)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        cols.append((fun(x + e) - fun(x - e)) / (2 * h[j]))
    return np.column_stack(cols)


def _safe_eval(fun, x):
    try:
        with np.errstate(all="ignore"):
            r = fun(x)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError, OverflowError):
        return None
    return r if np.all(np.isfinite(r)) else None


def levenberg_marquardt(fun, x0, jac=None, *, max_iter: int = 200, ftol: float = 1e-12,
                        lam0: float = 1e-3, lam_max: float = 1e16,
                        abs_cost: float = 1e-30) -> LMResult:
    """Minimise ||fun(x)||^2.

    Damping is Marquardt's diagonal scaling.  Convergence is declared when an
    accepted step lowers the cost by less than ``ftol`` relative, the cost
    falls below ``abs_cost``, or no damped step can decrease it any more.
    Hitting ``max_iter`` first returns ``converged=False``.
    """
    x = np.array(x0, dtype=float)
    jac = jac or (lambda z: fd_jacobian(fun, z))
    r = _safe_eval(fun, x)
    cost = np.inf if r is None else float(r @ r)
    if not np.isfinite(cost):
        return LMResult(x, cost, False, 0, "non-finite cost at start")
    if cost <= abs_cost:
        return LMResult(x, cost, True, 0, "cost below absolute tolerance")
    with np.errstate(all="ignore"):
        J = jac(x)
    lam = lam0
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        scale = np.diag(A).copy()
        scale[scale <= 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                x_new = x + step
                r_new = _safe_eval(fun, x_new)
                cost_new = float(r_new @ r_new) if r_new is not None else np.inf
                if np.isfinite(cost_new) and cost_new < cost:
                    break
            lam *= 10.0
            if lam > lam_max:
                return LMResult(x, cost, True, it, "no descent direction left")
        rel = (cost - cost_new) / cost
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-15)
        if rel < ftol:
            return LMResult(x, cost, True, it, "relative cost decrease below ftol")
        if cost <= abs_cost:
            return LMResult(x, cost, True, it, "cost below absolute tolerance")
        with np.errstate(all="ignore"):
            J = jac(x)
        if not np.all(np.isfinite(J)):
            return LMResult(x, cost, False, it, "non-finite Jacobian")
    return LMResult(x, cost, False, max_iter, "iteration limit reached")
