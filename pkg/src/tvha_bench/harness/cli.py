"""Command-line entry point ``tvha-bench``.

Exit status: 0 success, 1 usage error, 2 data or validation error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from collections import defaultdict
from collections.abc import Sequence
from pathlib import Path

from tvha_bench.analysis import (
    compare_estimators,
    find_reference_parameters,
    fit_scaling,
    landscape_slice,
    noise_floor_from_trace,
)
from tvha_bench.ansatz import Problem
from tvha_bench.hamiltonian import (
    FRAGMENTS,
    ParseError,
    ValidationError,
    build_qubit_hamiltonian,
    load_integrals,
)
from tvha_bench.harness.config import load_config
from tvha_bench.harness.records import RecordFormatError, load_records
from tvha_bench.harness.runner import AggregationError, build_problem, run_experiment, summarize
from tvha_bench.optimizers import ConfigError
from tvha_bench.simulator import CapacityError, SamplingConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
DATA_ERRORS = (
    ConfigError, ParseError, ValidationError, RecordFormatError, AggregationError,
    CapacityError, FileNotFoundError, ValueError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(f"{self.prog}: error: {message}")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.add_argument("--jobs", type=int, default=1, help="replica worker processes")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="table format")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="tvha-bench", description="tVHA optimizer benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", parents=[common], help="execute an experiment config")
    p.add_argument("config", type=Path)

    p = sub.add_parser("summarize", parents=[common], help="aggregate run records")
    p.add_argument("records", nargs="+", type=Path)

    p = sub.add_parser("landscape", parents=[common], help="2-D energy slice around a reference")
    p.add_argument("config", type=Path)
    p.add_argument("--axes", nargs=2, type=int, default=(0, 1), metavar=("I", "J"))
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--res", type=int, default=41)
    p.add_argument("--reference-shots", type=int, default=1_000_000)

    p = sub.add_parser("noisefloor", parents=[common], help="noise floors and shot scaling")
    p.add_argument("records", nargs="+", type=Path)

    p = sub.add_parser("exact", parents=[common], help="print the exact ground energy")
    p.add_argument("hamiltonian", type=Path)
    p.add_argument("--p", type=float, default=0.999, help="gamma truncation threshold")

    p = sub.add_parser("inspect", parents=[common], help="term, group and parameter counts")
    p.add_argument("hamiltonian", type=Path)
    p.add_argument("--p", type=float, default=0.999)
    p.add_argument("--depth", type=int, default=1)
    return parser


def _write_table(rows: list[dict], path_stem: Path, fmt: str) -> Path:
    path = path_stem.with_suffix(".csv" if fmt == "csv" else ".jsonl")
    with open(path, "w", newline="") as fh:
        if fmt == "jsonl":
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        else:
            keys = list(dict.fromkeys(k for row in rows for k in row))
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for row in rows:
                w.writerow({k: f"{v:.12g}" if isinstance(v, float) else v for k, v in row.items()})
    return path


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.__class__.from_snapshot({**cfg.snapshot(), "base_seed": args.seed})
    args.out.mkdir(parents=True, exist_ok=True)
    records = run_experiment(cfg, args.jobs)
    tag = cfg.config_hash()[:12]
    for rec in records:
        path = rec.write(args.out / f"{tag}_r{rec.replica:03d}.jsonl")
        final = rec.final_error
        print(
            f"{path}: {rec.verdict} fe={rec.n_evaluations}"
            + (f" error={final:.3e}" if final is not None else "")
            + (f" ({rec.message})" if rec.message else "")
        )
    return EXIT_RUNTIME if all(r.verdict == "failed" for r in records) else EXIT_OK


def _by_hash(records):
    groups = defaultdict(list)
    for r in records:
        groups[r.config_hash].append(r)
    return groups


def _cmd_summarize(args) -> int:
    records = load_records(args.records)
    if not records:
        raise AggregationError("no records found")
    args.out.mkdir(parents=True, exist_ok=True)
    for chash, recs in sorted(_by_hash(records).items()):
        table = summarize(recs)
        if args.format == "csv":
            agg, curve = table.write_csv(args.out)
            print(f"{agg}\n{curve}")
        else:
            path = args.out / f"summary_{chash[:12]}.jsonl"
            row = table.aggregates() | {
                "mean_error": list(table.mean_error),
                "mean_best_error": list(table.mean_best_error),
            }
            path.write_text(json.dumps(row) + "\n")
            print(path)
    return EXIT_OK


def _cmd_landscape(args) -> int:
    cfg = load_config(args.config)
    problem = build_problem(cfg)
    i, j = args.axes
    if not (0 <= i < problem.n_params and 0 <= j < problem.n_params) or i == j:
        raise ValueError(f"axes ({i}, {j}) must be distinct indices in 0..{problem.n_params - 1}")
    seed = cfg.base_seed if args.seed is None else args.seed
    backend = SamplingConfig(cfg.shots_per_group, seed) if cfg.backend == "sampling" else None
    shots_hi = args.reference_shots if backend is not None else None
    center = find_reference_parameters(problem, shots_hi, rng_seed=seed)
    grid = landscape_slice(problem, center, i, j, args.delta, args.res, backend)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"landscape_{i}_{j}.csv"
    side = grid.to_csv(path)
    print(f"{path}\n{side}")
    return EXIT_OK


def _cmd_noisefloor(args) -> int:
    records = load_records(args.records)
    if not records:
        raise AggregationError("no records found")
    rows = []
    per_shots = defaultdict(list)
    for r in records:
        if r.trace is None or r.config.get("backend") != "sampling":
            continue
        shots = int(r.config["shots_per_group"])
        report = noise_floor_from_trace(r.trace, shots)
        row = {"config_hash": r.config_hash[:12], "replica": r.replica,
               "shots_per_group": shots, "err_nf": report.err_nf,
               "n_evaluations": report.n_evaluations}
        if r.e0 is not None and r.trace.algorithm in ("cma_es", "pso"):
            cmp = compare_estimators(r.trace, r.e0)
            row |= {"mean_error": cmp.mean_error, "best_error": cmp.best_error,
                    "best_iteration_error": cmp.best_iteration_error}
            per_shots[shots].append(cmp)
        rows.append(row)
    if not rows:
        raise AggregationError("no sampled records with evaluations")
    if len(per_shots) >= 3:
        shots = sorted(per_shots)
        for name in ("mean_error", "best_error"):
            errs = [math.fsum(getattr(c, name) for c in per_shots[s]) / len(per_shots[s]) for s in shots]
            prefactor, exponent = fit_scaling(errs, shots)
            rows.append({"config_hash": f"fit_{name}", "prefactor": prefactor, "exponent": exponent})
    args.out.mkdir(parents=True, exist_ok=True)
    print(_write_table(rows, args.out / "noisefloor", args.format))
    return EXIT_OK


def _load_ham(path: Path, p: float):
    return build_qubit_hamiltonian(load_integrals(path), p)


def _cmd_exact(args) -> int:
    ham, _ = _load_ham(args.hamiltonian, args.p)
    print(f"{Problem.build(ham).e0:.12g}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    ham, report = _load_ham(args.hamiltonian, args.p)
    problem = Problem.build(ham, args.depth)
    info = {
        "n_qubits": ham.n_qubits,
        "n_electrons": ham.n_electrons,
        "pauli_terms": {f: len(ham.fragment_indices(f)) for f in FRAGMENTS},
        "measurement_groups": {g.fragment: len(g) for g in problem.groups},
        "gamma_kept": len(report.kept),
        "gamma_dropped": len(report.dropped),
        "gamma_weight_kept": report.p_achieved,
        "circuit": problem.circuit.summary(),
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "summarize": _cmd_summarize,
    "landscape": _cmd_landscape,
    "noisefloor": _cmd_noisefloor,
    "exact": _cmd_exact,
    "inspect": _cmd_inspect,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except DATA_ERRORS as exc:
        print(f"tvha-bench: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"tvha-bench: runtime failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
