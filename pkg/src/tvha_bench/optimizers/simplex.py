"""Nelder-Mead downhill simplex."""

from __future__ import annotations

import numpy as np

from tvha_bench.optimizers.base import Run

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


def nelder_mead(run: Run, x0: np.ndarray) -> None:
    """Standard coefficients; the start simplex offsets each axis by ``simplex_step``."""
    cfg = run.cfg
    n = run.n
    # the best vertex can legitimately sit still for several reflections
    run.stall_scale = n
    pts = [x0.copy()]
    for i in range(n):
        p = x0.copy()
        p[i] += cfg.simplex_step
        pts.append(p)
    sim = np.array(pts)
    fs = np.array([run.f(p) for p in sim])
    run.end_iteration()
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if (
            np.isfinite(fs[-1])
            and fs[-1] - fs[0] <= cfg.tolerance
            and np.max(np.abs(sim[1:] - sim[0])) <= cfg.xtol
        ):
            run.converged()
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + REFLECT * (centroid - sim[-1])
        fr = run.f(xr)
        if fr < fs[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = run.f(xe)
            sim[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = centroid + CONTRACT * (xr - centroid)
                fc = run.f(xc)
                accept = fc <= fr
            else:
                xc = centroid + CONTRACT * (sim[-1] - centroid)
                fc = run.f(xc)
                accept = fc < fs[-1]
            if accept:
                sim[-1], fs[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    sim[i] = sim[0] + SHRINK * (sim[i] - sim[0])
                    fs[i] = run.f(sim[i])
        run.end_iteration()
