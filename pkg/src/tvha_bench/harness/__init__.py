"""Experiment configuration, replica execution, records and the CLI."""

from tvha_bench.harness.config import ExperimentConfig, load_config, parse_config
from tvha_bench.harness.records import RecordFormatError, RunRecord, load_records
from tvha_bench.harness.runner import (
    AggregationError,
    SummaryTable,
    build_problem,
    resolve_jobs,
    run_experiment,
    run_replica,
    summarize,
)

__all__ = [
    "AggregationError",
    "ExperimentConfig",
    "RecordFormatError",
    "RunRecord",
    "SummaryTable",
    "build_problem",
    "load_config",
    "load_records",
    "parse_config",
    "resolve_jobs",
    "run_experiment",
    "run_replica",
    "summarize",
]
