"""The layered tVHA circuit, its energy, and initial parameters.

Each layer ``d`` is the operator ``A_d B_d C_d`` with

    A_d = prod_{G in alpha groups} exp(i alpha_d c P)    (one-body)
    B_d = prod_{G in beta groups}  exp(i beta_d  c P)    (Coulomb)
    C_d = prod_{G in gamma groups} exp(i gamma_d c P)    (other two-body)

acting on the Hartree-Fock state, so within a layer the gamma exponentials
reach the state first and the alpha ones last; layers are applied in order
``d = 1 .. D``. The flat parameter vector is ``[alpha_1, beta_1, gamma_1,
alpha_2, ...]`` with empty fragments skipped.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from tvha_bench import kernels
from tvha_bench.hamiltonian import FRAGMENTS, QubitHamiltonian
from tvha_bench.optimizers import CostOracle
from tvha_bench.pauli import CommutingGroups, DimensionError, PauliTerm, group_commuting, x_classes
from tvha_bench.simulator import (
    EnergyEstimate,
    SamplingConfig,
    Statevector,
    expectation_exact,
    exact_ground_energy,
    expectation_sampled,
    hf_state,
    measurement_groups,
)

__all__ = [
    "APPLICATION_ORDER",
    "InitConfig",
    "Problem",
    "TvhaCircuit",
    "ansatz_groups",
    "build_circuit",
    "evaluate",
    "init_adiabatic",
    "init_random",
    "prepare_state",
]

APPLICATION_ORDER = ("gamma", "beta", "alpha")


@dataclass(frozen=True)
class InitConfig:
    strategy: Literal["adiabatic", "random"] = "adiabatic"
    tau: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in ("adiabatic", "random"):
            raise ValueError(f"unknown init strategy {self.strategy!r}")
        if self.strategy == "adiabatic" and not self.tau > 0:
            raise ValueError("tau must be positive for adiabatic initialisation")


@dataclass(frozen=True)
class TvhaCircuit:
    depth: int
    n_qubits: int
    n_electrons: int
    fragment_groups: tuple[tuple[str, tuple[tuple[PauliTerm, ...], ...]], ...]
    param_index: Mapping[tuple[int, str], int]
    reference_state: str = "hartree-fock"
    _plan: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_params(self) -> int:
        return len(self.param_index)

    @property
    def fragments(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fragment_groups)

    def layer_plan(self, d: int) -> list[tuple[str, tuple[tuple[PauliTerm, ...], ...]]]:
        """Fragments of layer ``d`` (0-based) in application order."""
        if not 0 <= d < self.depth:
            raise IndexError(d)
        groups = dict(self.fragment_groups)
        return [(name, groups[name]) for name in APPLICATION_ORDER if name in groups]

    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if not self._plan:
            xs, zs, cs, ps = [], [], [], []
            for d in range(self.depth):
                for name, groups in self.layer_plan(d):
                    for group in groups:
                        for term in group:
                            xs.append(term.string.x)
                            zs.append(term.string.z)
                            cs.append(term.coefficient)
                            ps.append(self.param_index[(d, name)])
            self._plan["arrays"] = (
                np.array(xs, dtype=np.uint64),
                np.array(zs, dtype=np.uint64),
                np.array(cs, dtype=np.float64),
                np.array(ps, dtype=np.intp),
            )
        return self._plan["arrays"]

    def summary(self) -> dict:
        groups = dict(self.fragment_groups)
        return {
            "depth": self.depth,
            "n_qubits": self.n_qubits,
            "n_params": self.n_params,
            "application_order": [n for n in APPLICATION_ORDER if n in groups],
            "groups": {name: len(groups[name]) for name in FRAGMENTS if name in groups},
            "terms": {name: sum(map(len, groups[name])) for name in FRAGMENTS if name in groups},
        }


def ansatz_groups(ham: QubitHamiltonian) -> dict[str, CommutingGroups]:
    """Commuting groups used to order the circuit's exponentials.

    Terms with equal X bitmask always share a group (they commute for a real
    Hamiltonian, and their sum commutes with the particle-number operator),
    so every group Hamiltonian conserves particle number. Grouping is
    greedy under general commutation.
    """
    out = {}
    for name in FRAGMENTS:
        idx = ham.fragment_indices(name)
        if not idx:
            continue
        local = [ham.terms[i] for i in idx]
        cg = group_commuting(local, "general", units=x_classes(local), fragment=name)
        out[name] = CommutingGroups(tuple(tuple(idx[i] for i in g) for g in cg), "general", name)
    return out


def build_circuit(
    ham: QubitHamiltonian,
    groups_by_fragment: Mapping[str, CommutingGroups] | None = None,
    depth: int = 1,
) -> TvhaCircuit:
    """Lay out ``depth`` Trotter layers over the grouped fragments.

    Args:
        ham: Qubit Hamiltonian whose terms the circuit exponentiates.
        groups_by_fragment: Groups (indices into ``ham.terms``) for each
            fragment; defaults to :func:`ansatz_groups`.
        depth: Number of layers ``D``.

    Raises:
        ValueError: If ``depth < 1``, the Hamiltonian has no terms, or the
            groups do not cover the non-identity terms.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not ham.terms:
        raise ValueError("cannot build an ansatz from a Hamiltonian without terms")
    if groups_by_fragment is None:
        groups_by_fragment = ansatz_groups(ham)
    covered = sorted(i for cg in groups_by_fragment.values() for g in cg for i in g)
    if covered != list(range(len(ham.terms))):
        raise ValueError("groups must cover every Hamiltonian term exactly once")

    fragment_groups = []
    for name in FRAGMENTS:
        cg = groups_by_fragment.get(name)
        if cg is None or len(cg) == 0:
            continue
        fragment_groups.append(
            (name, tuple(tuple(ham.terms[i] for i in g) for g in cg.groups))
        )
    names = [n for n, _ in fragment_groups]
    param_index = {}
    for d in range(depth):
        for name in names:
            param_index[(d, name)] = len(param_index)
    return TvhaCircuit(depth, ham.n_qubits, ham.n_electrons, tuple(fragment_groups), param_index)


def prepare_state(circuit: TvhaCircuit, params: Sequence[float]) -> Statevector:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.n_params,):
        raise DimensionError(f"expected {circuit.n_params} parameters, got {params.shape}")
    xm, zm, cs, pidx = circuit._arrays()
    psi = hf_state(circuit.n_qubits, circuit.n_electrons).amplitudes
    kernels.apply_rotations(psi, xm, zm, params[pidx] * cs)
    return Statevector(circuit.n_qubits, psi)


def evaluate(
    circuit: TvhaCircuit,
    params: Sequence[float],
    ham: QubitHamiltonian,
    backend: SamplingConfig | None = None,
    eval_index: int = 0,
    groups: Sequence[CommutingGroups] | None = None,
) -> EnergyEstimate:
    """Energy of the prepared state on the statevector (``backend=None``) or sampler.

    ``eval_index`` selects the sampler's RNG substream; ``groups`` defaults to
    the qubit-wise measurement groups of ``ham``.
    """
    state = prepare_state(circuit, params)
    if backend is None:
        return expectation_exact(state, ham)
    if groups is None:
        if "measurement_groups" not in ham._cache:
            ham._cache["measurement_groups"] = measurement_groups(ham)
        groups = ham._cache["measurement_groups"]
    return expectation_sampled(state, ham, groups, backend, eval_index)


def _fragment_hf_energy(ham: QubitHamiltonian, names: Sequence[str], n_electrons: int) -> float:
    idx = [i for i, f in enumerate(ham.fragment_of) if f in names]
    if not idx:
        return 0.0
    sub = QubitHamiltonian(
        ham.n_qubits, tuple(ham.terms[i] for i in idx), tuple(ham.fragment_of[i] for i in idx)
    )
    return expectation_exact(hf_state(ham.n_qubits, n_electrons), sub).value


def init_adiabatic(
    circuit: TvhaCircuit, ham: QubitHamiltonian, cfg: InitConfig = InitConfig()
) -> np.ndarray:
    """Trotterised adiabatic ramp from the mean-field to the full Hamiltonian.

    ``alpha_d = (tau/D) <H_alpha>_HF`` and ``beta_d = gamma_d = (tau/D)
    (d/D) <V>_HF`` with ``V = H_beta + H_gamma``; HF expectations use the
    fragment Pauli terms only (no constant).
    """
    if cfg.strategy != "adiabatic":
        raise ValueError("init_adiabatic needs strategy='adiabatic'")
    D = circuit.depth
    h0 = _fragment_hf_energy(ham, ("alpha",), circuit.n_electrons)
    v = _fragment_hf_energy(ham, ("beta", "gamma"), circuit.n_electrons)
    out = np.zeros(circuit.n_params)
    for (d, name), pos in circuit.param_index.items():
        if name == "alpha":
            out[pos] = cfg.tau / D * h0
        else:
            out[pos] = cfg.tau / D * v * (d + 1) / D
    return out


def init_random(circuit: TvhaCircuit, cfg: InitConfig) -> np.ndarray:
    """Independent U[0, 1) draws from the seeded stream."""
    if cfg.strategy != "random":
        raise ValueError("init_random needs strategy='random'")
    return np.random.default_rng(cfg.rng_seed).random(circuit.n_params)


@dataclass(frozen=True)
class Problem:
    """A Hamiltonian, its circuit and measurement groups, ready to optimize."""

    ham: QubitHamiltonian
    circuit: TvhaCircuit
    groups: tuple[CommutingGroups, ...]

    @classmethod
    def build(cls, ham: QubitHamiltonian, depth: int = 1) -> Problem:
        return cls(ham, build_circuit(ham, depth=depth), tuple(measurement_groups(ham)))

    @property
    def e0(self) -> float:
        return exact_ground_energy(self.ham)

    @property
    def n_params(self) -> int:
        return self.circuit.n_params

    def energy(
        self, params: Sequence[float], backend: SamplingConfig | None = None, eval_index: int = 0
    ) -> EnergyEstimate:
        return evaluate(self.circuit, params, self.ham, backend, eval_index, self.groups)

    def oracle(self, backend: SamplingConfig | None = None, hook=None) -> CostOracle:
        """Cost oracle whose evaluation counter keys the sampler substreams."""

        def cost(params: np.ndarray, index: int) -> EnergyEstimate:
            return self.energy(params, backend, index)

        return CostOracle(cost, pass_index=True, stochastic=backend is not None, hook=hook)

    def initial_parameters(self, cfg: InitConfig) -> np.ndarray:
        if cfg.strategy == "adiabatic":
            return init_adiabatic(self.circuit, self.ham, cfg)
        return init_random(self.circuit, cfg)
