"""Experiment configuration files.

A config is an INI file with an ``[experiment]`` section and an optional
``[optimizer]`` section; every key maps onto a field of
:class:`ExperimentConfig` or :class:`~tvha_bench.optimizers.OptimizerConfig`::

    [experiment]
    hamiltonian_path = h2.fcidump      ; relative to the config file
    truncation_p = 0.999
    depth = 1
    init = hf-adiabatic                ; or: random
    backend = statevector              ; or: sampling
    shots_per_group = 1024
    repeats = 10
    base_seed = 0
    max_function_evaluations = 10000
    chemical_accuracy = 1.6e-3

    [optimizer]
    algorithm = bfgs
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from tvha_bench.optimizers import ConfigError, OptimizerConfig

__all__ = ["ExperimentConfig", "load_config", "parse_config"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class ExperimentConfig:
    hamiltonian_path: str
    truncation_p: float = 0.999
    depth: int = 1
    init: Literal["hf-adiabatic", "random"] = "hf-adiabatic"
    tau: float = 1.0
    backend: Literal["statevector", "sampling"] = "statevector"
    shots_per_group: int = 1024
    repeats: int = 1
    base_seed: int = 0
    max_function_evaluations: int = 10_000
    chemical_accuracy: float = 1.6e-3
    noise_aware_stall: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0.0 <= self.truncation_p <= 1.0:
            raise ConfigError("truncation_p must lie in [0, 1]")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.init not in ("hf-adiabatic", "random"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.backend not in ("statevector", "sampling"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.shots_per_group < 1:
            raise ConfigError("shots_per_group must be >= 1")
        if self.max_function_evaluations < 1:
            raise ConfigError("max_function_evaluations must be >= 1")
        if not self.chemical_accuracy > 0:
            raise ConfigError("chemical_accuracy must be positive")
        if self.optimizer.max_function_evaluations != self.max_function_evaluations:
            opt = dataclasses.replace(
                self.optimizer, max_function_evaluations=self.max_function_evaluations
            )
            object.__setattr__(self, "optimizer", opt)

    def snapshot(self) -> dict[str, Any]:
        """Plain-data view used for hashing and persistence."""
        data = dataclasses.asdict(self)
        data["optimizer"] = self.optimizer.to_dict()
        return data

    def config_hash(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_snapshot(cls, data: dict[str, Any]) -> ExperimentConfig:
        data = dict(data)
        opt = OptimizerConfig(**data.pop("optimizer"))
        return cls(**data, optimizer=opt)


def _coerce(value: str, annotation: Any, key: str) -> Any:
    text = value.strip()
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if text.lower() in ("", "none"):
            return None
        (annotation,) = [a for a in args if a is not type(None)]
        origin, args = typing.get_origin(annotation), typing.get_args(annotation)
    if origin is Literal:
        if text not in args:
            raise ConfigError(f"{key}: expected one of {args}, got {text!r}")
        return text
    try:
        if annotation is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if annotation is int:
            return int(text)
        if annotation is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {annotation.__name__}") from None
    return text


def _fields(cls: type) -> dict[str, Any]:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


def parse_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    """Read a config from INI text; relative paths resolve against ``base_dir``.

    Raises:
        ConfigError: On unknown sections or keys, bad values or a missing
            ``hamiltonian_path``.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    unknown = set(parser.sections()) - {"experiment", "optimizer"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")

    exp_fields = _fields(ExperimentConfig)
    exp_fields.pop("optimizer")
    exp: dict[str, Any] = {}
    for key, value in parser.items("experiment"):
        if key not in exp_fields:
            raise ConfigError(f"unknown experiment key {key!r}")
        exp[key] = _coerce(value, exp_fields[key], key)
    if "hamiltonian_path" not in exp:
        raise ConfigError("experiment.hamiltonian_path is required")
    path = Path(exp["hamiltonian_path"])
    if not path.is_absolute():
        path = Path(base_dir) / path
    exp["hamiltonian_path"] = str(path)

    opt_fields = _fields(OptimizerConfig)
    opt: dict[str, Any] = {}
    if parser.has_section("optimizer"):
        for key, value in parser.items("optimizer"):
            if key not in opt_fields:
                raise ConfigError(f"unknown optimizer key {key!r}")
            opt[key] = _coerce(value, opt_fields[key], key)
    budget = exp.get("max_function_evaluations", ExperimentConfig.max_function_evaluations)
    opt["max_function_evaluations"] = budget
    return ExperimentConfig(**exp, optimizer=OptimizerConfig(**opt))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)
