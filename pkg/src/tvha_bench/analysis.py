"""Noise floors, variational-violation odds, landscape slices and the
mean-versus-best estimator comparison."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from tvha_bench.ansatz import InitConfig, Problem, prepare_state
from tvha_bench.optimizers import OptimizerConfig, OptimizerTrace, minimize, rank_cost
from tvha_bench.simulator import SamplingConfig, grouped_variance, hamiltonian_variance

__all__ = [
    "EstimatorComparison",
    "EstimatorScaling",
    "LandscapeGrid",
    "NoiseFloorReport",
    "ReferenceSearchError",
    "UnsupportedTraceError",
    "compare_estimators",
    "estimator_scaling",
    "find_reference_parameters",
    "fit_scaling",
    "landscape_slice",
    "noise_floor",
    "noise_floor_from_trace",
    "population_center",
    "violation_probability",
]

CSV_DIGITS = 12


def _fmt(x: float) -> str:
    return f"{x:.{CSV_DIGITS}g}"


class UnsupportedTraceError(ValueError):
    """The trace lacks the per-iteration populations the analysis needs."""


class ReferenceSearchError(RuntimeError):
    """The reference optimization produced no usable point."""

    def __init__(self, message: str, trace: OptimizerTrace) -> None:
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class NoiseFloorReport:
    err_nf: float
    per_step_variances: tuple[float, ...]
    shots_per_group: int
    n_evaluations: int

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "variance"])
            for i, v in enumerate(self.per_step_variances):
                w.writerow([i, _fmt(v)])
            w.writerow(["err_nf", _fmt(self.err_nf)])


def noise_floor(variances: Sequence[float], shots_per_group: int) -> NoiseFloorReport:
    """``sqrt(mean(variances) / shots)``, the trajectory-averaged standard error.

    Raises:
        ValueError: On an empty list, a negative variance or ``shots < 1``.
    """
    v = tuple(float(x) for x in variances)
    if not v:
        raise ValueError("noise_floor needs at least one variance")
    if any(not x >= 0 for x in v):
        raise ValueError("variances must be non-negative")
    if shots_per_group < 1:
        raise ValueError("shots_per_group must be >= 1")
    return NoiseFloorReport(math.sqrt(math.fsum(v) / len(v) / shots_per_group), v, shots_per_group, len(v))


def noise_floor_from_trace(trace: OptimizerTrace, shots_per_group: int) -> NoiseFloorReport:
    """Noise floor over every recorded evaluation of a sampled run.

    Each evaluation carries ``Var[H] / shots``; NaN-cost evaluations are kept.
    """
    variances = [ev.variance * shots_per_group for ev in trace.evaluations if ev.variance is not None]
    return noise_floor(variances, shots_per_group)


def violation_probability(e: float, e0: float, sigma: float) -> float:
    """Probability that a Gaussian estimate around ``e`` lands below ``e0``.

    ``sigma = 0`` takes the limit: 0 above ``e0``, 1/2 at it, 1 below.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return 0.0 if e > e0 else 0.5 if e == e0 else 1.0
    return 0.5 * math.erfc((e - e0) / (math.sqrt(2.0) * sigma))


def population_center(trace: OptimizerTrace, iteration: int) -> np.ndarray:
    """Mean parameter vector of one iteration's population."""
    pop = trace.populations().get(iteration)
    if not pop:
        raise UnsupportedTraceError(f"iteration {iteration} has no evaluations")
    return np.mean([ev.params for ev in pop], axis=0)


def find_reference_parameters(
    problem: Problem,
    shots_hi: int | None,
    cfg: OptimizerConfig | None = None,
    x0: Sequence[float] | None = None,
    rng_seed: int = 0,
) -> np.ndarray:
    """Optimize at high precision and return the reference point.

    ``shots_hi`` is the total shot count per evaluation, spread evenly over
    the measurement groups; ``None`` substitutes the exact statevector. A
    population optimizer returns the population centre of its iteration
    with the lowest mean cost, any other optimizer its best point.

    Raises:
        ValueError: If ``shots_hi`` is below one million.
        ReferenceSearchError: If the optimizer found no finite cost.
    """
    if shots_hi is not None and shots_hi < 1_000_000:
        raise ValueError("reference search needs at least 1e6 shots per evaluation")
    if cfg is None:
        if shots_hi is None:
            cfg = OptimizerConfig("bfgs", rng_seed=rng_seed)
        else:
            cfg = OptimizerConfig(
                "cma_es", population_size=25, sigma0=0.1, max_iterations=40,
                stall_iterations=0, rng_seed=rng_seed,
            )
    backend = None
    if shots_hi is not None:
        backend = SamplingConfig(math.ceil(shots_hi / len(problem.groups)), rng_seed)
    start = problem.initial_parameters(InitConfig()) if x0 is None else np.asarray(x0, float)
    trace = minimize(problem.oracle(backend), start, cfg)
    if not math.isfinite(trace.best_cost):
        raise ReferenceSearchError("reference optimization found no finite cost", trace)
    if cfg.is_population and trace.iterations:
        means = [rank_cost(it.population_mean) for it in trace.iterations]
        return population_center(trace, int(np.argmin(means)))
    return np.array(trace.best_params)


@dataclass
class LandscapeGrid:
    center: np.ndarray
    axis_i: int
    axis_j: int
    delta: float
    resolution: int
    values: np.ndarray
    shots_per_group: int | None
    e0: float
    exact_values: np.ndarray | None = None
    sigmas: np.ndarray | None = None
    offsets: np.ndarray = field(default=None)

    def violation_mask(self) -> np.ndarray:
        return self.values < self.e0

    def predicted_violations(self) -> np.ndarray:
        """Per-cell violation probability from the exact energy and sigma."""
        if self.exact_values is None or self.sigmas is None:
            raise ValueError("grid was evaluated without exact values and sigmas")
        return np.vectorize(violation_probability)(self.exact_values, self.e0, self.sigmas)

    def sidecar(self) -> dict:
        return {
            "center": [float(x) for x in self.center],
            "axes": [self.axis_i, self.axis_j],
            "delta": self.delta,
            "resolution": self.resolution,
            "shots_per_group": self.shots_per_group if self.shots_per_group else "statevector",
            "e0": self.e0,
            "offsets": [float(x) for x in self.offsets],
        }

    def to_csv(self, path: str | Path) -> Path:
        """Write the value matrix (rows: axis ``i`` offsets) and a JSON sidecar."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.values:
                w.writerow([_fmt(v) for v in row])
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.sidecar(), indent=2) + "\n")
        return side


def landscape_slice(
    problem: Problem,
    center: Sequence[float],
    i: int,
    j: int,
    delta: float = 0.5,
    resolution: int = 41,
    backend: SamplingConfig | None = None,
    sigma_source: Literal["estimator", "hamiltonian"] = "estimator",
) -> LandscapeGrid:
    """Energy over ``(theta_i + d_i, theta_j + d_j)`` for ``d`` on a uniform grid.

    Each sampled cell draws from its own substream (keyed by the flat cell
    index). Sampled grids also record the exact energy and the per-cell
    noise sigma used to predict variational violations: the grouped
    estimator's standard error by default, or ``sqrt(Var[H] / shots)``.

    Raises:
        IndexError: If an axis is out of range.
        ValueError: If ``i == j``, ``resolution < 2`` or ``delta < 0``.
    """
    theta = np.asarray(center, dtype=np.float64)
    n = theta.size
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"axes ({i}, {j}) outside 0..{n - 1}")
    if i == j:
        raise ValueError("landscape axes must differ")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    offsets = np.linspace(-delta, delta, resolution)
    values = np.empty((resolution, resolution))
    exact = np.empty_like(values) if backend is not None else None
    sigmas = np.empty_like(values) if backend is not None else None
    for a, da in enumerate(offsets):
        for b, db in enumerate(offsets):
            p = theta.copy()
            p[i] += da
            p[j] += db
            cell = a * resolution + b
            values[a, b] = problem.energy(p, backend, cell).value
            if backend is not None:
                state = prepare_state(problem.circuit, p)
                exact[a, b] = problem.energy(p).value
                if sigma_source == "estimator":
                    var = grouped_variance(state, problem.ham, problem.groups)
                else:
                    var = hamiltonian_variance(state, problem.ham)
                sigmas[a, b] = math.sqrt(max(var, 0.0) / backend.shots_per_group)
    return LandscapeGrid(
        theta, i, j, float(delta), resolution, values,
        backend.shots_per_group if backend else None, problem.e0, exact, sigmas, offsets,
    )


@dataclass(frozen=True)
class EstimatorComparison:
    mean_costs: tuple[float, ...]
    best_costs: tuple[float, ...]
    mean_error: float
    best_error: float
    best_iteration: int
    best_iteration_error: float

    def to_csv(self, path: str | Path, e0: float) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "mean_cost", "best_cost", "mean_error", "best_error"])
            for k, (m, b) in enumerate(zip(self.mean_costs, self.best_costs)):
                w.writerow([k, _fmt(m), _fmt(b), _fmt(abs(m - e0)), _fmt(abs(b - e0))])


def compare_estimators(trace: OptimizerTrace, e0: float) -> EstimatorComparison:
    """Population-mean versus best-individual error, averaged over iterations.

    The "optimal iteration" is the one with the lowest population mean.

    Raises:
        UnsupportedTraceError: For traces without per-iteration populations.
    """
    if trace.algorithm not in ("cma_es", "pso"):
        raise UnsupportedTraceError(f"{trace.algorithm} traces have no populations")
    pops = trace.populations()
    if not pops:
        raise UnsupportedTraceError("trace has no evaluations")
    means, bests = [], []
    for k in sorted(pops):
        costs = np.array([rank_cost(ev.cost) for ev in pops[k]])
        finite = costs[np.isfinite(costs)]
        means.append(float(finite.mean()) if finite.size else math.inf)
        bests.append(float(costs.min()))
    m, b = np.array(means), np.array(bests)
    k = int(np.argmin(m))
    return EstimatorComparison(
        tuple(means), tuple(bests),
        float(np.mean(np.abs(m - e0))), float(np.mean(np.abs(b - e0))),
        k, float(abs(m[k] - e0)),
    )


def fit_scaling(errors: Sequence[float], shots: Sequence[int]) -> tuple[float, float]:
    """Least-squares fit of ``error = prefactor * shots**exponent`` in log space.

    Raises:
        ValueError: On mismatched lengths, fewer than 3 points or non-positive values.
    """
    e = np.asarray(errors, dtype=np.float64)
    s = np.asarray(shots, dtype=np.float64)
    if e.shape != s.shape or e.ndim != 1:
        raise ValueError("errors and shots must be matched 1-D sequences")
    if e.size < 3:
        raise ValueError("fit_scaling needs at least 3 points")
    if np.any(e <= 0) or np.any(s <= 0):
        raise ValueError("errors and shots must be positive")
    exponent, intercept = np.polyfit(np.log(s), np.log(e), 1)
    return float(math.exp(intercept)), float(exponent)


@dataclass(frozen=True)
class EstimatorScaling:
    shots: tuple[int, ...]
    mean_errors: tuple[float, ...]
    best_errors: tuple[float, ...]
    best_iteration_errors: tuple[float, ...]
    mean_fit: tuple[float, float] | None
    best_fit: tuple[float, float] | None

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["shots", "mean_error", "best_error", "best_iteration_error"])
            for row in zip(self.shots, self.mean_errors, self.best_errors, self.best_iteration_errors):
                w.writerow([row[0], *(_fmt(x) for x in row[1:])])
            for name, fit in (("mean", self.mean_fit), ("best", self.best_fit)):
                if fit is not None:
                    w.writerow([f"fit_{name}", _fmt(fit[0]), _fmt(fit[1]), ""])


def estimator_scaling(
    comparisons: dict[int, Sequence[EstimatorComparison]],
) -> EstimatorScaling:
    """Average comparisons per shot budget and fit both error series."""
    shots = sorted(comparisons)
    mean_e = [float(np.mean([c.mean_error for c in comparisons[s]])) for s in shots]
    best_e = [float(np.mean([c.best_error for c in comparisons[s]])) for s in shots]
    iter_e = [float(np.mean([c.best_iteration_error for c in comparisons[s]])) for s in shots]
    mean_fit = best_fit = None
    if len(shots) >= 3:
        mean_fit = fit_scaling(mean_e, shots)
        best_fit = fit_scaling(best_e, shots)
    return EstimatorScaling(tuple(shots), tuple(mean_e), tuple(best_e), tuple(iter_e), mean_fit, best_fit)
