"""Truncated Newton minimiser for the squared-hinge objectives.

Both the pairwise ranking objective and the binary SVM objective are
convex, once differentiable and piecewise quadratic. Each iteration
solves the (generalised) Newton system approximately with conjugate
gradients and then backtracks until the Armijo condition holds, so
every accepted step lowers the objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFinite

ARMIJO = 1e-4
MIN_STEP = 1e-12


@dataclass(frozen=True)
class OptimResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    stopped_by: str
    trace: tuple


def conjugate_gradient(hessp: Callable, b: np.ndarray, tol: float, maxiter: int) -> np.ndarray:
    """Approximately solve ``H p = b``; stops early on non-positive curvature."""
    p = np.zeros_like(b)
    r = b.copy()
    d = r.copy()
    rr = float(r @ r)
    for _ in range(maxiter):
        if math.sqrt(rr) <= tol:
            break
        hd = hessp(d)
        curv = float(d @ hd)
        if curv <= 0:
            break
        alpha = rr / curv
        p += alpha * d
        r -= alpha * hd
        rr_new = float(r @ r)
        d = r + (rr_new / rr) * d
        rr = rr_new
    return p


def _check(f, g):
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFinite("objective or gradient is not finite; check C and the input data")


def minimize(
    fun_grad: Callable,
    hessp: Callable,
    x0: np.ndarray,
    *,
    max_iterations: int,
    gradient_tolerance: float,
    rel_objective_tolerance: float,
) -> OptimResult:
    """Minimise a smooth convex function.

    ``fun_grad(x)`` returns ``(f, g)``; ``hessp(x, v)`` returns a
    (generalised) Hessian-vector product. Terminates when
    ``|g| <= gradient_tolerance * (1 + |f|)``, when the relative decrease
    of an accepted step falls below ``rel_objective_tolerance``, or after
    ``max_iterations`` steps.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    _check(f, g)
    trace = [f]
    stopped_by = "max_iterations"
    it = 0
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gradient_tolerance * (1.0 + abs(f)):
            stopped_by = "gradient"
            break
        if it >= max_iterations:
            break
        it += 1

        cg_tol = min(0.1, math.sqrt(gnorm)) * gnorm
        p = conjugate_gradient(lambda v: hessp(x, v), -g, cg_tol, maxiter=max(10, 2 * x.size))
        slope = float(g @ p)
        if slope >= 0:
            p = -g
            slope = -gnorm * gnorm

        step = 1.0
        while True:
            x_new = x + step * p
            f_new, g_new = fun_grad(x_new)
            if math.isfinite(f_new) and f_new <= f + ARMIJO * step * slope:
                break
            step *= 0.5
            if step < MIN_STEP:
                f_new = None
                break
        if f_new is None:
            stopped_by = "line_search"
            break
        _check(f_new, g_new)

        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        if decrease <= rel_objective_tolerance * max(abs(f), 1e-300):
            gnorm = float(np.linalg.norm(g))
            stopped_by = (
                "gradient" if gnorm <= gradient_tolerance * (1.0 + abs(f)) else "objective"
            )
            break

    return OptimResult(
        x=x,
        fun=float(f),
        grad_norm=float(np.linalg.norm(g)),
        iterations=it,
        stopped_by=stopped_by,
        trace=tuple(float(v) for v in trace),
    )
