"""Dense BFGS minimizer with a backtracking line search.

The minimizer is unconstrained and tolerates objectives that return +inf on
invalid regions: the line search simply backtracks until it finds a finite
point satisfying sufficient decrease.  The inverse-Hessian approximation is
updated only when the curvature condition holds, so it stays positive
definite.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError


@dataclass
class OptimizerControls:
    gradient_tolerance: float = 1e-6
    max_iterations: int = 2000
    armijo_c1: float = 1e-4
    curvature_c2: float = 0.9
    max_backtracks: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.armijo_c1 < self.curvature_c2 < 1.0:
            raise DomainError("need 0 < armijo_c1 < curvature_c2 < 1")
        if self.gradient_tolerance <= 0 or self.max_iterations < 1:
            raise DomainError("gradient_tolerance must be > 0 and max_iterations >= 1")


@dataclass
class OptimizerTrace:
    objective: list = field(default_factory=list)
    gradient_norm: list = field(default_factory=list)
    step_length: list = field(default_factory=list)


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    gradient_norm: float
    iterations: int
    converged: bool
    message: str
    trace: OptimizerTrace


def _gnorm(g):
    return float(np.max(np.abs(g))) if g.size else 0.0


def bfgs_minimize(objective, gradient, x0, controls: OptimizerControls | None = None):
    """Minimize a smooth objective from x0; returns a MinimizeResult.

    objective(x) may return +inf outside its domain but must be finite at
    x0.  gradient(x) is only evaluated at accepted (finite) points.
    """
    c = controls or OptimizerControls()
    x = np.asarray(x0, dtype=float).copy()
    f = float(objective(x))
    if not np.isfinite(f):
        raise DomainError("objective is not finite at the starting point")
    g = np.asarray(gradient(x), dtype=float)

    n = x.size
    eye = np.eye(n)
    hess_inv = eye.copy()
    scale_pending = True

    trace = OptimizerTrace()
    trace.objective.append(f)
    trace.gradient_norm.append(_gnorm(g))
    trace.step_length.append(0.0)

    converged = False
    message = "maximum iterations reached"
    iterations = 0

    for iterations in range(1, c.max_iterations + 1):
        if _gnorm(g) <= c.gradient_tolerance:
            converged = True
            message = "gradient tolerance reached"
            iterations -= 1
            break

        direction = -hess_inv @ g
        slope = float(direction @ g)
        if not np.isfinite(slope) or slope >= 0.0:
            # approximation lost descent; restart from steepest descent
            hess_inv = eye.copy()
            scale_pending = True
            direction = -g
            slope = -float(g @ g)

        # backtracking line search with sufficient decrease
        alpha = 1.0
        accepted = False
        for _ in range(c.max_backtracks):
            x_new = x + alpha * direction
            f_new = float(objective(x_new))
            if np.isfinite(f_new) and f_new <= f + c.armijo_c1 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            message = "line search failed"
            iterations -= 1
            break

        # lengthen the step while the curvature check fails and sufficient
        # decrease still holds, so the update below rarely has to be skipped
        g_new = np.asarray(gradient(x_new), dtype=float)
        for _ in range(10):
            if float(g_new @ direction) >= c.curvature_c2 * slope:
                break
            alpha_try = 2.0 * alpha
            x_try = x + alpha_try * direction
            f_try = float(objective(x_try))
            if not (np.isfinite(f_try)
                    and f_try <= f + c.armijo_c1 * alpha_try * slope):
                break
            alpha, x_new, f_new = alpha_try, x_try, f_try
            g_new = np.asarray(gradient(x_new), dtype=float)

        step = x_new - x
        grad_change = g_new - g
        sy = float(step @ grad_change)

        # curvature condition s'y > 0 keeps the approximation positive
        # definite; skip the update rather than corrupt it
        if sy > 1e-14 * _gnorm(step) * max(_gnorm(grad_change), 1e-300):
            if scale_pending:
                yy = float(grad_change @ grad_change)
                if yy > 0:
                    hess_inv = (sy / yy) * eye
                scale_pending = False
            rho = 1.0 / sy
            hs = hess_inv @ grad_change
            hess_inv = (hess_inv
                        - rho * (np.outer(step, hs) + np.outer(hs, step))
                        + rho * rho * float(grad_change @ hs) * np.outer(step, step)
                        + rho * np.outer(step, step))

        x, f, g = x_new, f_new, g_new
        trace.objective.append(f)
        trace.gradient_norm.append(_gnorm(g))
        trace.step_length.append(alpha)
    else:
        iterations = c.max_iterations

    if not converged and _gnorm(g) <= c.gradient_tolerance:
        converged = True
        message = "gradient tolerance reached"

    return MinimizeResult(x=x, fun=f, gradient_norm=_gnorm(g),
                          iterations=iterations, converged=converged,
                          message=message, trace=trace)


def finite_diff_grad(objective, x, step: float = 1e-6):
    """Central-difference gradient, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    if step <= 0:
        raise DomainError("step must be positive")
    grad = np.empty_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = step
        f_plus = float(objective(x + bump))
        f_minus = float(objective(x - bump))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise DomainError(f"objective not finite near coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad
