import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from tvha_bench.analysis import (
    LandscapeGrid,
    ReferenceSearchError,
    UnsupportedTraceError,
    compare_estimators,
    estimator_scaling,
    find_reference_parameters,
    fit_scaling,
    landscape_slice,
    noise_floor,
    noise_floor_from_trace,
    population_center,
    violation_probability,
)
from tvha_bench.ansatz import Problem
from tvha_bench.optimizers import Evaluation, OptimizerConfig, OptimizerTrace
from tvha_bench.simulator import SamplingConfig

SHOTS = (16, 64, 256, 1024, 6144)


def synthetic_trace(populations, algorithm="cma_es", params=None):
    evals, fe = [], 0
    for k, costs in enumerate(populations):
        for c in costs:
            p = np.zeros(2) if params is None else params(k, fe)
            evals.append(Evaluation(fe, p, float(c), k, 0.01))
            fe += 1
    best = min(evals, key=lambda e: e.cost)
    return OptimizerTrace(algorithm, evals, [], best.params, best.cost, "budget-exhausted")


@pytest.fixture(scope="module")
def h2_problem(h2):
    return Problem.build(h2)


def test_noise_floor_examples():
    assert noise_floor([4.0], 1024).err_nf == 0.0625
    assert noise_floor([1.0, 9.0], 100).err_nf == pytest.approx(math.sqrt(0.05), abs=1e-12)


def test_noise_floor_errors():
    for bad in ([], [-1.0], [math.nan]):
        with pytest.raises(ValueError):
            noise_floor(bad, 10)
    with pytest.raises(ValueError):
        noise_floor([1.0], 0)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=20), st.integers(1, 10**6))
def test_noise_floor_recomputable_and_scaling(variances, shots):
    rep = noise_floor(variances, shots)
    again = math.sqrt(np.mean(rep.per_step_variances) / rep.shots_per_group)
    assert rep.err_nf == pytest.approx(again, abs=1e-12)
    assert noise_floor(variances, 2 * shots).err_nf == pytest.approx(rep.err_nf / math.sqrt(2), abs=1e-12)
    assert rep.n_evaluations == len(variances)


def test_noise_floor_from_trace_undoes_shot_division():
    trace = synthetic_trace([[0.0, 0.0]])
    assert noise_floor_from_trace(trace, 100).err_nf == pytest.approx(math.sqrt(0.01))


def test_violation_examples():
    assert violation_probability(-1.0, -1.0, 0.1) == 0.5
    assert violation_probability(0.3, 0.0, 0.3) == pytest.approx(0.158655, abs=1e-6)
    assert violation_probability(0.1, 0.0, 0.0) == 0.0
    assert violation_probability(0.0, 0.0, 0.0) == 0.5
    assert violation_probability(-0.1, 0.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        violation_probability(0.0, 0.0, -1.0)


def test_violation_matches_numerical_integration():
    for z in (-2.0, -0.5, 0.0, 1.0, 3.0):
        density = lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi)  # noqa: E731
        tail, _ = integrate.quad(density, z, math.inf, epsabs=1e-14)
        assert violation_probability(z, 0.0, 1.0) == pytest.approx(tail, abs=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 3))
def test_violation_monotone(a, b, sigma):
    a, b = sorted((a, b))
    assert violation_probability(a, 0.0, sigma) >= violation_probability(b, 0.0, sigma)


def test_compare_constant_cost():
    cmp = compare_estimators(synthetic_trace([[2.0] * 5] * 4), 1.5)
    assert cmp.mean_costs == cmp.best_costs == (2.0,) * 4
    assert cmp.mean_error == cmp.best_error == cmp.best_iteration_error == 0.5


def test_compare_picks_lowest_mean_iteration():
    cmp = compare_estimators(synthetic_trace([[3, 1], [2, 2], [5, 0]]), 0.0)
    assert cmp.mean_costs == (2.0, 2.0, 2.5)
    assert cmp.best_costs == (1.0, 2.0, 0.0)
    assert cmp.best_iteration == 0
    assert cmp.best_iteration_error == 2.0


def test_compare_rejects_non_population_trace():
    with pytest.raises(UnsupportedTraceError):
        compare_estimators(synthetic_trace([[1.0]], algorithm="bfgs"), 0.0)


def test_compare_ignores_nan_in_means():
    cmp = compare_estimators(synthetic_trace([[1.0, math.nan, 3.0]]), 0.0)
    assert cmp.mean_costs == (2.0,)
    assert cmp.best_costs == (1.0,)


def test_gaussian_population_best_error_exceeds_mean_error():
    rng = np.random.default_rng(0)
    pops = rng.normal(0.0, 1.0, size=(200, 25))
    cmp = compare_estimators(synthetic_trace(pops), 0.0)
    assert cmp.best_error > cmp.mean_error
    # expected minimum of 25 standard normals
    assert cmp.best_error == pytest.approx(1.97, abs=0.08)


def test_mean_beats_best_in_most_trials():
    rng = np.random.default_rng(1)
    wins = 0
    for _ in range(1000):
        cmp = compare_estimators(synthetic_trace(rng.normal(0.0, 1.0, size=(10, 7))), 0.0)
        wins += cmp.mean_error < cmp.best_error
    assert wins >= 950


def test_fit_scaling_examples():
    for pref in (0.045, 0.096):
        errs = [pref / math.sqrt(n) for n in SHOTS]
        a, b = fit_scaling(errs, SHOTS)
        assert a == pytest.approx(pref, abs=1e-10)
        assert b == pytest.approx(-0.5, abs=1e-10)
    a, b = fit_scaling([0.01] * 5, SHOTS)
    assert b == pytest.approx(0.0, abs=1e-12) and a == pytest.approx(0.01)


@pytest.mark.parametrize(
    "errors, shots",
    [([0.1, 0.2], [1, 2]), ([0.1, 0.0, 0.2], [1, 2, 3]), ([0.1, 0.2, 0.3], [1, 2])],
)
def test_fit_scaling_errors(errors, shots):
    with pytest.raises(ValueError):
        fit_scaling(errors, shots)


def test_estimator_scaling_aggregates():
    comps = {
        s: [compare_estimators(synthetic_trace([[0.1 / math.sqrt(s)] * 3]), 0.0)] for s in SHOTS
    }
    scaling = estimator_scaling(comps)
    assert scaling.shots == SHOTS
    assert scaling.mean_fit[1] == pytest.approx(-0.5)


def test_population_center():
    trace = synthetic_trace([[1, 2], [3, 4]], params=lambda k, fe: np.array([fe, 2.0 * fe]))
    np.testing.assert_allclose(population_center(trace, 1), [2.5, 5.0])
    with pytest.raises(UnsupportedTraceError):
        population_center(trace, 9)


def test_reference_statevector_h2(h2_problem):
    x = find_reference_parameters(h2_problem, None)
    assert h2_problem.energy(x).value - h2_problem.e0 < 1e-6
    np.testing.assert_array_equal(x, find_reference_parameters(h2_problem, None))


def test_reference_sampled_respects_concentration_bound(h2_problem):
    cfg = OptimizerConfig("cma_es", population_size=6, sigma0=0.05, max_iterations=3, rng_seed=2)
    x = find_reference_parameters(h2_problem, 1_000_000, cfg, rng_seed=2)
    again = find_reference_parameters(h2_problem, 1_000_000, cfg, rng_seed=2)
    np.testing.assert_array_equal(x, again)
    shots = math.ceil(1_000_000 / len(h2_problem.groups))
    est = h2_problem.energy(x, SamplingConfig(shots, 99))
    floor = math.sqrt(est.variance_theoretical)
    assert est.value >= h2_problem.e0 - 4 * floor


def test_reference_shot_minimum(h2_problem):
    with pytest.raises(ValueError):
        find_reference_parameters(h2_problem, 999_999)


def test_reference_failure_carries_trace(h2_problem):
    from tvha_bench.ansatz import Problem as P

    class Broken(P):
        def energy(self, params, backend=None, eval_index=0):
            return math.nan

    broken = Broken(h2_problem.ham, h2_problem.circuit, h2_problem.groups)
    with pytest.raises(ReferenceSearchError) as exc:
        find_reference_parameters(broken, None, OptimizerConfig("nelder_mead", max_function_evaluations=5))
    assert exc.value.trace.n_evaluations == 5


def test_landscape_statevector_at_optimum(h2_problem):
    center = find_reference_parameters(h2_problem, None)
    grid = landscape_slice(h2_problem, center, 0, 2, delta=0.3, resolution=9)
    assert grid.values.shape == (9, 9) and np.isfinite(grid.values).all()
    assert grid.values.argmin() == 4 * 9 + 4
    assert (grid.values >= h2_problem.e0 - 1e-9).all()
    assert not grid.violation_mask().any()


def test_landscape_degenerate_grid(h2_problem):
    grid = landscape_slice(h2_problem, [0.1, 0.2, 0.3], 0, 1, delta=0.0, resolution=2)
    assert np.ptp(grid.values) == 0


def test_landscape_argument_errors(h2_problem):
    c = [0.0, 0.0, 0.0]
    with pytest.raises(IndexError):
        landscape_slice(h2_problem, c, 0, 3)
    with pytest.raises(ValueError):
        landscape_slice(h2_problem, c, 1, 1)
    with pytest.raises(ValueError):
        landscape_slice(h2_problem, c, 0, 1, resolution=1)


def test_landscape_sampled_cells_are_independent_and_exported(h2_problem, tmp_path):
    center = find_reference_parameters(h2_problem, None)
    backend = SamplingConfig(512, 3)
    grid = landscape_slice(h2_problem, center, 0, 1, delta=0.05, resolution=5, backend=backend)
    again = landscape_slice(h2_problem, center, 0, 1, delta=0.05, resolution=5, backend=backend)
    np.testing.assert_array_equal(grid.values, again.values)
    assert len(np.unique(grid.values)) == grid.values.size
    pred = grid.predicted_violations()
    assert pred.shape == (5, 5) and ((pred > 0.01) & (pred < 0.5)).any()
    side = grid.to_csv(tmp_path / "slice.csv")
    meta = json.loads(side.read_text())
    assert meta["shots_per_group"] == 512 and meta["axes"] == [0, 1]
    rows = (tmp_path / "slice.csv").read_text().splitlines()
    assert len(rows) == 5 and all(len(r.split(",")) == 5 for r in rows)


def test_statevector_grid_has_no_prediction():
    grid = LandscapeGrid(np.zeros(2), 0, 1, 0.1, 2, np.zeros((2, 2)), None, -1.0, offsets=np.zeros(2))
    assert grid.sidecar()["shots_per_group"] == "statevector"
    with pytest.raises(ValueError):
        grid.predicted_violations()
