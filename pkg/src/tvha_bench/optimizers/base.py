"""Cost oracle, configuration, trace types and the per-run bookkeeping shared
by every algorithm."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

__all__ = [
    "ALGORITHMS",
    "BudgetExhausted",
    "ConfigError",
    "CostOracle",
    "Evaluation",
    "IterationSummary",
    "OptimizerConfig",
    "OptimizerTrace",
    "rank_cost",
]

Algorithm = Literal["gd", "bfgs", "nelder_mead", "spsa", "cma_es", "pso"]
ALGORITHMS: tuple[str, ...] = ("gd", "bfgs", "nelder_mead", "spsa", "cma_es", "pso")
POPULATION_ALGORITHMS = ("cma_es", "pso")


class ConfigError(ValueError):
    """An optimizer configuration is unusable."""


class BudgetExhausted(RuntimeError):
    """The function-evaluation cap was reached."""


def rank_cost(cost: float) -> float:
    """Cost used for comparisons: NaN ranks as +inf."""
    return math.inf if math.isnan(cost) else cost


@dataclass(frozen=True)
class Evaluation:
    fe_index: int
    params: np.ndarray
    cost: float
    iteration: int
    variance: float | None = None


@dataclass(frozen=True)
class IterationSummary:
    iteration: int
    best_so_far: float
    population_mean: float | None = None
    population_best: float | None = None


class CostOracle:
    """Counts and records calls to a scalar cost function.

    ``fn`` receives the parameter vector, plus the zero-based evaluation
    index when ``pass_index`` is set (sampling backends key their RNG
    substreams on it). It may return a float or an object with ``value`` and
    ``variance_theoretical`` attributes.

    Args:
        fn: The cost function.
        pass_index: Call ``fn(params, index)`` instead of ``fn(params)``.
        stochastic: The cost is noisy; changes finite-difference defaults.
        max_evaluations: Optional cap across the oracle's lifetime.
        hook: Called with every :class:`Evaluation` as it is recorded.
    """

    def __init__(
        self,
        fn: Callable[..., Any],
        *,
        pass_index: bool = False,
        stochastic: bool = False,
        max_evaluations: int | None = None,
        hook: Callable[[Evaluation], None] | None = None,
    ) -> None:
        self._fn = fn
        self.pass_index = pass_index
        self.stochastic = stochastic
        self.max_evaluations = max_evaluations
        self.hook = hook
        self.evaluation_counter = 0
        self.iteration = 0
        self.records: list[Evaluation] = []

    def evaluate(self, params: Sequence[float]) -> float:
        if self.max_evaluations is not None and self.evaluation_counter >= self.max_evaluations:
            raise BudgetExhausted(f"oracle cap of {self.max_evaluations} evaluations reached")
        x = np.array(params, dtype=np.float64)
        index = self.evaluation_counter
        self.evaluation_counter += 1
        out = self._fn(x.copy(), index) if self.pass_index else self._fn(x.copy())
        variance = getattr(out, "variance_theoretical", None)
        cost = float(getattr(out, "value", out))
        rec = Evaluation(index, x, cost, self.iteration, variance)
        self.records.append(rec)
        if self.hook is not None:
            self.hook(rec)
        return cost

    __call__ = evaluate


@dataclass(frozen=True)
class OptimizerConfig:
    """Algorithm choice, budget, termination and per-algorithm settings.

    ``fd_step=None`` picks 1e-6 for deterministic oracles and 1e-3 for
    stochastic ones. ``noise_floor`` switches stall detection to the
    noise-aware rule (no best-so-far gain above it over 20 iterations);
    otherwise the run stalls after ``stall_iterations`` iterations without a
    gain above ``tolerance``. ``stall_iterations=0`` disables stall checks.
    """

    algorithm: Algorithm = "bfgs"
    max_function_evaluations: int = 10_000
    max_iterations: int | None = None
    tolerance: float = 1e-8
    gtol: float = 1e-6
    xtol: float = 1e-8
    stall_iterations: int = 10
    noise_floor: float | None = None
    rng_seed: int = 0
    fd_step: float | None = None
    # gd
    learning_rate: float = 0.1
    # bfgs
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_line_search: int = 30
    # nelder_mead
    simplex_step: float = 0.1
    # spsa
    spsa_a: float = 0.1
    spsa_c: float = 0.1
    spsa_A: float | None = None
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    # cma_es
    population_size: int | None = None
    sigma0: float = 0.3
    # pso
    swarm_size: int = 30
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    swarm_spread: float = 1.0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.max_function_evaluations < 1:
            raise ConfigError("max_function_evaluations must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        if self.population_size is not None and self.population_size < 2:
            raise ConfigError("population_size must be at least 2")
        if self.swarm_size < 2:
            raise ConfigError("swarm_size must be at least 2")
        if self.stall_iterations < 0:
            raise ConfigError("stall_iterations must be non-negative")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ConfigError("fd_step must be positive")
        if self.sigma0 <= 0 or self.learning_rate <= 0 or self.simplex_step <= 0:
            raise ConfigError("step sizes must be positive")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @property
    def is_population(self) -> bool:
        return self.algorithm in POPULATION_ALGORITHMS


@dataclass
class OptimizerTrace:
    algorithm: str
    evaluations: list[Evaluation]
    iterations: list[IterationSummary]
    best_params: np.ndarray
    best_cost: float
    termination: str
    final_population_mean: float | None = None
    settings: dict[str, Any] = field(default_factory=dict)

    @property
    def n_evaluations(self) -> int:
        return len(self.evaluations)

    def best_so_far(self) -> list[float]:
        out, best = [], math.inf
        for ev in self.evaluations:
            best = min(best, rank_cost(ev.cost))
            out.append(best)
        return out

    def populations(self) -> dict[int, list[Evaluation]]:
        """Evaluations keyed by the iteration they belong to."""
        out: dict[int, list[Evaluation]] = {}
        for ev in self.evaluations:
            out.setdefault(ev.iteration, []).append(ev)
        return out


class _Stop(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class Run:
    """Budget, best-so-far and termination bookkeeping for one minimize call."""

    def __init__(self, oracle: CostOracle, cfg: OptimizerConfig, n_params: int) -> None:
        self.oracle = oracle
        self.cfg = cfg
        self.n = n_params
        self.rng = np.random.default_rng(cfg.rng_seed)
        self.start = oracle.evaluation_counter
        self.evaluations: list[Evaluation] = []
        self.iterations: list[IterationSummary] = []
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self.final_population_mean: float | None = None
        # iterations per stall window unit, and the series stalls are judged on
        self.stall_scale = 1
        self._progress = math.inf
        self._stall: list[float] = []
        oracle.iteration = 0
        if cfg.fd_step is not None:
            self.fd_step = cfg.fd_step
        else:
            self.fd_step = 1e-3 if oracle.stochastic else 1e-6

    @property
    def used(self) -> int:
        return len(self.evaluations)

    @property
    def remaining(self) -> int:
        return self.cfg.max_function_evaluations - self.used

    def f(self, x: np.ndarray) -> float:
        """Evaluate through the oracle; returns the ranked cost."""
        if self.remaining <= 0:
            raise _Stop("budget-exhausted")
        before = len(self.oracle.records)
        try:
            self.oracle.evaluate(x)
        except BudgetExhausted:
            raise _Stop("budget-exhausted") from None
        rec = self.oracle.records[before]
        self.evaluations.append(rec)
        cost = rank_cost(rec.cost)
        if cost < self.best_f or self.best_x is None:
            self.best_f = cost
            self.best_x = rec.params.copy()
        return cost

    def end_iteration(
        self, population: Sequence[float] | None = None, progress: float | None = None
    ) -> None:
        """Close the current iteration; raises ``_Stop`` on stall or iteration cap.

        Stalls are judged on the running minimum of ``progress`` when the
        algorithm supplies one, otherwise on the best-so-far cost. Under the
        plain tolerance rule a population's mean cost is the progress value,
        since one lucky sample can hold the best-so-far still while the
        distribution is far from converged.
        """
        pop_mean = pop_best = None
        if population is not None and len(population):
            arr = np.asarray(population, dtype=np.float64)
            finite = arr[np.isfinite(arr)]
            pop_mean = float(finite.mean()) if finite.size else math.inf
            pop_best = float(finite.min()) if finite.size else math.inf
            self.final_population_mean = pop_mean
            if progress is None and self.cfg.noise_floor is None:
                progress = pop_mean
        k = len(self.iterations)
        self.iterations.append(IterationSummary(k, self.best_f, pop_mean, pop_best))
        if progress is not None:
            self._progress = min(self._progress, progress)
        self._stall.append(self._progress if progress is not None else self.best_f)
        self.oracle.iteration = k + 1
        cfg = self.cfg
        if cfg.max_iterations is not None and k + 1 >= cfg.max_iterations:
            raise _Stop("max-iterations")
        if cfg.noise_floor is not None:
            window, threshold = 20, cfg.noise_floor
        else:
            window, threshold = cfg.stall_iterations, cfg.tolerance
        window *= self.stall_scale
        if window and len(self._stall) > window:
            if not self._stall[-window - 1] - self._stall[-1] > threshold:
                raise _Stop("stalled")

    def converged(self) -> None:
        raise _Stop("converged")

    def fd_gradient(self, x: np.ndarray) -> np.ndarray:
        """Central finite differences, ``2n`` evaluations."""
        h = self.fd_step
        g = np.empty(self.n)
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            g[i] = (self.f(x + e) - self.f(x - e)) / (2 * h)
        return g
