"""Replica execution and summary aggregation."""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import time
import traceback
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from tvha_bench.ansatz import InitConfig, Problem
from tvha_bench.hamiltonian import build_qubit_hamiltonian, load_integrals
from tvha_bench.harness.config import ExperimentConfig
from tvha_bench.harness.records import RunRecord, thin_params
from tvha_bench.optimizers import OptimizerTrace, minimize
from tvha_bench.simulator import (
    DENSE_QUBIT_LIMIT,
    SamplingConfig,
    hamiltonian_variance,
    hf_state,
)

__all__ = [
    "AggregationError",
    "SummaryTable",
    "build_problem",
    "fe_to_accuracy",
    "resolve_jobs",
    "run_experiment",
    "run_replica",
    "summarize",
]

BUDGET_NOTE = "the budget counts function evaluations for every optimizer"


class AggregationError(ValueError):
    """Records cannot be summarized together."""


def build_problem(cfg: ExperimentConfig) -> Problem:
    """Parse, fragment, truncate, map, group and lay out the circuit."""
    ints = load_integrals(cfg.hamiltonian_path)
    ham, _ = build_qubit_hamiltonian(ints, cfg.truncation_p)
    return Problem.build(ham, cfg.depth)


def fe_to_accuracy(errors: Sequence[float], threshold: float) -> int | None:
    """1-based count of evaluations until the first error below ``threshold``."""
    for k, err in enumerate(errors, 1):
        if err is not None and err < threshold:
            return k
    return None


def _verdict(trace: OptimizerTrace, e0: float | None, accuracy: float) -> str:
    if e0 is not None and math.isfinite(trace.best_cost):
        if abs(trace.best_cost - e0) <= accuracy:
            return "converged"
    elif e0 is None and trace.termination == "converged":
        return "converged"
    if trace.termination in ("budget-exhausted", "max-iterations"):
        return "budget-exhausted"
    if trace.termination in ("converged", "stalled"):
        return "stalled"
    return "failed"


def run_replica(cfg: ExperimentConfig, replica: int) -> RunRecord:
    """One independent replica with seed ``base_seed + replica``.

    Any exception inside the pipeline yields a ``failed`` record.
    """
    seed = cfg.base_seed + replica
    snapshot = cfg.snapshot()
    chash = cfg.config_hash()
    notes = {"budget": BUDGET_NOTE, "shots": "per measurement group"}
    start = time.perf_counter()
    try:
        problem = build_problem(cfg)
        e0 = problem.e0 if problem.ham.n_qubits <= DENSE_QUBIT_LIMIT else None
        if cfg.init == "hf-adiabatic":
            x0 = problem.initial_parameters(InitConfig("adiabatic", cfg.tau, seed))
        else:
            x0 = problem.initial_parameters(InitConfig("random", rng_seed=seed))
        backend = None
        opt = dataclasses.replace(cfg.optimizer, rng_seed=seed)
        if cfg.backend == "sampling":
            backend = SamplingConfig(cfg.shots_per_group, seed)
            if cfg.noise_aware_stall and opt.noise_floor is None and opt.stall_iterations:
                # Err_NF is only known after the run; start from the HF state's
                var = hamiltonian_variance(
                    hf_state(problem.ham.n_qubits, problem.ham.n_electrons), problem.ham
                )
                floor = math.sqrt(max(var, 0.0) / cfg.shots_per_group)
                opt = dataclasses.replace(opt, noise_floor=floor)
                notes["stall_noise_floor"] = floor
        trace = minimize(problem.oracle(backend), x0, opt)
    except Exception as exc:  # noqa: BLE001 - a failed replica must not abort the batch
        return RunRecord(
            snapshot, chash, replica, seed, None, None, [], "failed",
            time.perf_counter() - start, None,
            "".join(traceback.format_exception_only(type(exc), exc)).strip(), notes,
        )
    trace.evaluations = thin_params(trace.evaluations, problem.n_params)
    errors = [abs(ev.cost - e0) if e0 is not None else math.nan for ev in trace.evaluations]
    return RunRecord(
        snapshot, chash, replica, seed, trace, e0, errors,
        _verdict(trace, e0, cfg.chemical_accuracy),
        time.perf_counter() - start,
        fe_to_accuracy(errors, cfg.chemical_accuracy) if e0 is not None else None,
        "", notes,
    )


def resolve_jobs(jobs: int | None) -> int:
    """``TVHA_BENCH_JOBS`` overrides the requested worker count."""
    env = os.environ.get("TVHA_BENCH_JOBS")
    if env:
        jobs = int(env)
    return max(1, jobs or 1)


def run_experiment(cfg: ExperimentConfig, jobs: int | None = 1) -> list[RunRecord]:
    """All ``cfg.repeats`` replicas, in replica order, optionally in worker processes."""
    jobs = min(resolve_jobs(jobs), cfg.repeats)
    replicas = range(cfg.repeats)
    if jobs == 1:
        return [run_replica(cfg, r) for r in replicas]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_replica, [cfg] * cfg.repeats, replicas))


def _fsum_mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class SummaryTable:
    config_hash: str
    n_records: int
    mean_error: tuple[float, ...]
    mean_best_error: tuple[float, ...]
    mean_fe_to_chemical_accuracy: float | None
    success_count: int
    mean_final_error: float | None

    @property
    def success_rate(self) -> float:
        return self.success_count / self.n_records

    def aggregates(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "n_records": self.n_records,
            "success_count": self.success_count,
            "success_rate": self.success_rate,
            "mean_fe_to_chemical_accuracy": self.mean_fe_to_chemical_accuracy,
            "mean_final_error": self.mean_final_error,
            "curve_length": len(self.mean_error),
        }

    def write_csv(self, out_dir: str | Path) -> tuple[Path, Path]:
        """``summary_<hash>.csv`` (aggregates) and ``curve_<hash>.csv`` (per-FE means)."""
        out = Path(out_dir)
        tag = self.config_hash[:12]
        agg, curve = out / f"summary_{tag}.csv", out / f"curve_{tag}.csv"
        with open(agg, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "value"])
            for k, v in self.aggregates().items():
                w.writerow([k, _fmt(v)])
        with open(curve, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fe", "mean_error", "mean_best_error"])
            for k, (a, b) in enumerate(zip(self.mean_error, self.mean_best_error), 1):
                w.writerow([k, _fmt(a), _fmt(b)])
        return agg, curve


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return "" if v is None else str(v)


def _carry_forward(series: Sequence[float], length: int) -> list[float]:
    out, last = [], math.nan
    for k in range(length):
        if k < len(series) and series[k] is not None and not math.isnan(series[k]):
            last = series[k]
        out.append(last)
    return out


def _best_errors(rec: RunRecord) -> list[float]:
    out, best = [], math.inf
    for ev in rec.trace.evaluations if rec.trace else []:
        if ev.cost is not None and not math.isnan(ev.cost):
            best = min(best, ev.cost)
        out.append(abs(best - rec.e0) if math.isfinite(best) else math.nan)
    return out


def summarize(records: Sequence[RunRecord]) -> SummaryTable:
    """Per-FE mean errors with last-value carry-forward, plus success statistics.

    Means use exactly rounded summation, so the table does not depend on
    record order.

    Raises:
        AggregationError: On an empty list, mixed config hashes or records
            without a reference energy.
    """
    if not records:
        raise AggregationError("no records to summarize")
    hashes = {r.config_hash for r in records}
    if len(hashes) != 1:
        raise AggregationError(f"records mix {len(hashes)} config hashes")
    usable = [r for r in records if r.e0 is not None and r.errors]
    accuracy = records[0].config.get("chemical_accuracy", 1.6e-3)
    length = max((len(r.errors) for r in usable), default=0)

    def curve(series: list[list[float]]) -> tuple[float, ...]:
        cols = [_carry_forward(s, length) for s in series]
        out = []
        for k in range(length):
            vals = [c[k] for c in cols if not math.isnan(c[k])]
            out.append(_fsum_mean(vals) if vals else math.nan)
        return tuple(out)

    fes = [r.fe_to_chemical_accuracy for r in usable if r.fe_to_chemical_accuracy is not None]
    finals = [r.final_error for r in usable if r.final_error is not None]
    return SummaryTable(
        config_hash=hashes.pop(),
        n_records=len(records),
        mean_error=curve([r.errors for r in usable]),
        mean_best_error=curve([_best_errors(r) for r in usable]),
        mean_fe_to_chemical_accuracy=_fsum_mean(fes) if fes else None,
        success_count=sum(1 for r in records if r.final_error is not None and r.final_error <= accuracy),
        mean_final_error=_fsum_mean(finals) if finals else None,
    )
