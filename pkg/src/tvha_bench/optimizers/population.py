"""CMA-ES and particle swarm optimization."""

from __future__ import annotations

import math

import numpy as np

from tvha_bench.optimizers.base import Run


def default_population(n: int) -> int:
    """7 up to six dimensions, ``4 + floor(3 ln n)`` above."""
    if n <= 6:
        return 7
    return 4 + int(3 * math.log(n))


def cma_es(run: Run, x0: np.ndarray) -> None:
    """(mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates
    and cumulative step-size adaptation.

    Each iteration samples and evaluates one population; its mean cost is
    reported alongside the best-so-far value.
    """
    cfg = run.cfg
    n = run.n
    lam = cfg.population_size or default_population(n)
    mu = lam // 2
    w = np.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / float(w @ w)

    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

    mean = x0.copy()
    sigma = cfg.sigma0
    C = np.eye(n)
    pc = np.zeros(n)
    ps = np.zeros(n)
    B, D = np.eye(n), np.ones(n)
    gen = 0
    while True:
        z = run.rng.standard_normal((lam, n))
        y = z @ (B * D).T
        xs = mean + sigma * y
        costs = np.array([run.f(x) for x in xs])
        order = np.argsort(costs, kind="stable")[:mu]
        y_w = w @ y[order]
        mean = mean + sigma * y_w

        inv_sqrt_c = B @ np.diag(1 / D) @ B.T
        ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt_c @ y_w)
        gen += 1
        hsig = np.linalg.norm(ps) / math.sqrt(1 - (1 - cs) ** (2 * gen)) / chi_n < 1.4 + 2 / (n + 1)
        pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * y_w
        yo = y[order]
        C = (
            (1 - c1 - cmu) * C
            + c1 * (np.outer(pc, pc) + (1 - hsig) * cc * (2 - cc) * C)
            + cmu * (yo.T * w) @ yo
        )
        sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))
        C = np.triu(C) + np.triu(C, 1).T
        evals, B = np.linalg.eigh(C)
        D = np.sqrt(np.maximum(evals, 1e-300))

        run.end_iteration(costs)
        if sigma * D.max() < cfg.xtol:
            run.converged()


def pso(run: Run, x0: np.ndarray) -> None:
    """Global-best particle swarm with inertia and cognitive/social pulls.

    Particles start uniformly within ``swarm_spread`` of ``x0`` (the first at
    ``x0`` itself) with zero velocity.
    """
    cfg = run.cfg
    n, m = run.n, cfg.swarm_size
    pos = x0 + cfg.swarm_spread * run.rng.uniform(-1, 1, size=(m, n))
    pos[0] = x0
    vel = np.zeros((m, n))
    pbest = pos.copy()
    pbest_f = np.full(m, math.inf)
    gbest = x0.copy()
    gbest_f = math.inf
    while True:
        costs = np.array([run.f(p) for p in pos])
        better = costs < pbest_f
        pbest[better], pbest_f[better] = pos[better], costs[better]
        i = int(np.argmin(pbest_f))
        if pbest_f[i] < gbest_f:
            gbest, gbest_f = pbest[i].copy(), float(pbest_f[i])
        r1 = run.rng.random((m, n))
        r2 = run.rng.random((m, n))
        vel = (
            cfg.inertia * vel
            + cfg.cognitive * r1 * (pbest - pos)
            + cfg.social * r2 * (gbest - pos)
        )
        pos = pos + vel
        run.end_iteration(costs)
        if np.max(np.abs(pos - gbest)) < cfg.xtol:
            run.converged()
