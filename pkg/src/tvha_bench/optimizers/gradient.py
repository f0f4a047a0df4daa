"""Gradient descent and BFGS on central finite-difference gradients."""

from __future__ import annotations

import numpy as np

from tvha_bench.optimizers.base import Run, _Stop


def _gradient(run: Run, x: np.ndarray) -> np.ndarray:
    g = run.fd_gradient(x)
    if not np.all(np.isfinite(g)):
        raise _Stop("nonfinite-gradient")
    return g


def gradient_descent(run: Run, x0: np.ndarray) -> None:
    cfg = run.cfg
    x = x0.copy()
    while True:
        run.f(x)
        g = _gradient(run, x)
        if np.linalg.norm(g) <= cfg.gtol:
            run.end_iteration()
            run.converged()
        x = x - cfg.learning_rate * g
        run.end_iteration()


def bfgs(run: Run, x0: np.ndarray) -> None:
    """Inverse-Hessian BFGS with a backtracking Armijo line search.

    The first update rescales the identity by ``s.y / y.y``; pairs with
    ``s.y <= 0`` skip the update.
    """
    cfg = run.cfg
    n = run.n
    x = x0.copy()
    fx = run.f(x)
    g = _gradient(run, x)
    H = np.eye(n)
    first = True
    while True:
        if np.linalg.norm(g) <= cfg.gtol:
            run.end_iteration()
            run.converged()
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:
            # not a descent direction: restart from steepest descent
            H = np.eye(n)
            p, slope = -g, -float(g @ g)
        t = 1.0
        for _ in range(cfg.max_line_search):
            x_new = x + t * p
            f_new = run.f(x_new)
            if f_new <= fx + cfg.armijo_c1 * t * slope:
                break
            t *= cfg.backtrack
        else:
            run.end_iteration()
            raise _Stop("line-search-failed")
        g_new = _gradient(run, x_new)
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if first:
                H = np.eye(n) * sy / float(y @ y)
                first = False
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        x, fx, g = x_new, f_new, g_new
        run.end_iteration()
