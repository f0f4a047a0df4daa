"""Run records and their JSON-Lines form.

One file holds one record: a ``header`` line (config snapshot and seeds),
one ``evaluation`` line per cost call, one ``iteration`` line per optimizer
iteration, and a closing ``final`` line. Floats are written with Python's
shortest round-trip repr, so reading a file back reproduces every value
exactly; NaN and infinities use the ``NaN``/``Infinity`` tokens.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from tvha_bench.optimizers import Evaluation, IterationSummary, OptimizerTrace

__all__ = ["FULL_PARAMS_LIMIT", "RecordFormatError", "RunRecord", "load_records", "thin_params"]

FULL_PARAMS_LIMIT = 32
THIN_STRIDE = 10
VERDICTS = ("converged", "stalled", "budget-exhausted", "failed")


class RecordFormatError(ValueError):
    """A records file is malformed."""


def thin_params(evaluations: list[Evaluation], n_params: int) -> list[Evaluation]:
    """Drop stored parameters above 32 entries, keeping every 10th and the last."""
    if n_params <= FULL_PARAMS_LIMIT:
        return list(evaluations)
    last = len(evaluations) - 1
    return [
        ev if (k % THIN_STRIDE == 0 or k == last) else Evaluation(
            ev.fe_index, None, ev.cost, ev.iteration, ev.variance
        )
        for k, ev in enumerate(evaluations)
    ]


@dataclass
class RunRecord:
    config: dict[str, Any]
    config_hash: str
    replica: int
    seed: int
    trace: OptimizerTrace | None
    e0: float | None
    errors: list[float]
    verdict: str
    wall_time: float
    fe_to_chemical_accuracy: int | None = None
    message: str = ""
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def n_evaluations(self) -> int:
        return len(self.errors)

    @property
    def final_error(self) -> float | None:
        if self.e0 is None or self.trace is None or not math.isfinite(self.trace.best_cost):
            return None
        return abs(self.trace.best_cost - self.e0)

    def to_lines(self, include_wall_time: bool = True) -> list[str]:
        dump = json.dumps
        header = {
            "type": "header",
            "config": self.config,
            "config_hash": self.config_hash,
            "replica": self.replica,
            "seed": self.seed,
            "e0": self.e0,
            "notes": self.notes,
        }
        lines = [dump(header, sort_keys=True)]
        tr = self.trace
        if tr is not None:
            for ev, err in zip(tr.evaluations, self.errors):
                lines.append(dump({
                    "type": "evaluation",
                    "fe": ev.fe_index,
                    "iteration": ev.iteration,
                    "cost": ev.cost,
                    "error": err,
                    "variance": ev.variance,
                    "params": None if ev.params is None else [float(x) for x in ev.params],
                }))
            for it in tr.iterations:
                lines.append(dump({
                    "type": "iteration",
                    "iteration": it.iteration,
                    "best_so_far": it.best_so_far,
                    "population_mean": it.population_mean,
                    "population_best": it.population_best,
                }))
        final = {
            "type": "final",
            "verdict": self.verdict,
            "fe_to_chemical_accuracy": self.fe_to_chemical_accuracy,
            "message": self.message,
            "wall_time": self.wall_time if include_wall_time else None,
        }
        if tr is not None:
            final.update(
                algorithm=tr.algorithm,
                best_params=[float(x) for x in tr.best_params],
                best_cost=tr.best_cost,
                termination=tr.termination,
                final_population_mean=tr.final_population_mean,
                settings=tr.settings,
            )
        lines.append(dump(final, sort_keys=True))
        return lines

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.to_lines()) + "\n")
        return path

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> RunRecord:
        header = final = None
        evals: list[Evaluation] = []
        errors: list[float] = []
        iters: list[IterationSummary] = []
        for lineno, raw in enumerate(lines, 1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                kind = obj["type"]
                if kind == "header":
                    header = obj
                elif kind == "evaluation":
                    params = None if obj["params"] is None else np.array(obj["params"], dtype=float)
                    evals.append(
                        Evaluation(obj["fe"], params, obj["cost"], obj["iteration"], obj["variance"])
                    )
                    errors.append(obj["error"])
                elif kind == "iteration":
                    iters.append(IterationSummary(
                        obj["iteration"], obj["best_so_far"],
                        obj["population_mean"], obj["population_best"],
                    ))
                elif kind == "final":
                    final = obj
                else:
                    raise RecordFormatError(f"line {lineno}: unknown line type {kind!r}")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RecordFormatError(f"line {lineno}: {exc}") from None
        if header is None or final is None:
            raise RecordFormatError("record needs a header and a final line")
        trace = None
        if "algorithm" in final:
            trace = OptimizerTrace(
                algorithm=final["algorithm"],
                evaluations=evals,
                iterations=iters,
                best_params=np.array(final["best_params"], dtype=float),
                best_cost=final["best_cost"],
                termination=final["termination"],
                final_population_mean=final["final_population_mean"],
                settings=final["settings"],
            )
        return cls(
            config=header["config"],
            config_hash=header["config_hash"],
            replica=header["replica"],
            seed=header["seed"],
            trace=trace,
            e0=header["e0"],
            errors=errors,
            verdict=final["verdict"],
            wall_time=final["wall_time"],
            fe_to_chemical_accuracy=final["fe_to_chemical_accuracy"],
            message=final["message"],
            notes=header["notes"],
        )

    @classmethod
    def read(cls, path: str | Path) -> RunRecord:
        with open(path) as fh:
            return cls.from_lines(fh)


def load_records(paths: Iterable[str | Path]) -> list[RunRecord]:
    """Read records from files and directories (every ``*.jsonl`` inside)."""
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.jsonl")))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(p)
    return [RunRecord.read(f) for f in files]
