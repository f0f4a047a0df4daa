"""Six classical optimizers behind one :func:`minimize` call."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from tvha_bench.optimizers.base import (
    ALGORITHMS,
    BudgetExhausted,
    ConfigError,
    CostOracle,
    Evaluation,
    IterationSummary,
    OptimizerConfig,
    OptimizerTrace,
    Run,
    _Stop,
    rank_cost,
)
from tvha_bench.optimizers.gradient import bfgs, gradient_descent
from tvha_bench.optimizers.population import cma_es, default_population, pso
from tvha_bench.optimizers.simplex import nelder_mead
from tvha_bench.optimizers.spsa import spsa

__all__ = [
    "ALGORITHMS",
    "BudgetExhausted",
    "ConfigError",
    "CostOracle",
    "Evaluation",
    "IterationSummary",
    "OptimizerConfig",
    "OptimizerTrace",
    "default_population",
    "minimize",
    "rank_cost",
]

_DISPATCH = {
    "gd": gradient_descent,
    "bfgs": bfgs,
    "nelder_mead": nelder_mead,
    "spsa": spsa,
    "cma_es": cma_es,
    "pso": pso,
}


def minimize(oracle: CostOracle, x0: Sequence[float], cfg: OptimizerConfig) -> OptimizerTrace:
    """Run ``cfg.algorithm`` from ``x0`` until convergence, stall or budget.

    At most ``cfg.max_function_evaluations`` oracle calls are made. The
    trace's ``termination`` is one of ``converged``, ``stalled``,
    ``budget-exhausted``, ``max-iterations``, ``line-search-failed`` or
    ``nonfinite-gradient``.

    Raises:
        ValueError: If ``x0`` is empty or not finite.
    """
    x = np.array(x0, dtype=np.float64).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a non-empty finite vector")
    run = Run(oracle, cfg, x.size)
    try:
        _DISPATCH[cfg.algorithm](run, x)
        termination = "converged"
    except _Stop as stop:
        termination = stop.reason
    settings = cfg.to_dict()
    settings["fd_step"] = run.fd_step
    if cfg.algorithm == "cma_es":
        settings["population_size"] = cfg.population_size or default_population(x.size)
    best_x = run.best_x if run.best_x is not None else x
    return OptimizerTrace(
        algorithm=cfg.algorithm,
        evaluations=run.evaluations,
        iterations=run.iterations,
        best_params=best_x,
        best_cost=run.best_f,
        termination=termination,
        final_population_mean=run.final_population_mean if cfg.is_population else None,
        settings=settings,
    )
