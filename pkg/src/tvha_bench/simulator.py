"""Statevector simulation and exact / shot-sampled energy estimation.

Pauli exponentials act by basis permutation plus phase (see
:mod:`tvha_bench.kernels`); no gate decomposition is involved. Sampled
estimates measure each qubit-wise commuting group in its own rotated basis
with ``shots_per_group`` shots, drawing from a Philox stream keyed by
``(rng_seed, eval_index, group_index)`` so that any evaluation can be
reproduced independently of execution order.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from tvha_bench import kernels
from tvha_bench.hamiltonian import QubitHamiltonian
from tvha_bench.pauli import (
    CommutingGroups,
    DimensionError,
    InvalidGroupError,
    PauliString,
    PauliTerm,
    group_commuting,
    measurement_rotation,
    pauli_product,
)

__all__ = [
    "DENSE_QUBIT_LIMIT",
    "CapacityError",
    "EnergyEstimate",
    "SamplingConfig",
    "Statevector",
    "apply_pauli_exp",
    "dense_matrix",
    "exact_ground_energy",
    "expectation_exact",
    "expectation_sampled",
    "grouped_variance",
    "hamiltonian_variance",
    "hf_state",
    "measurement_groups",
    "number_expectation",
    "rng_for",
]

DENSE_QUBIT_LIMIT = 14
NORM_TOL = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_HSDG = _H @ np.diag([1, -1j])  # S^dagger then H: maps Y to Z
_ROTATIONS = {"X": _H, "Y": _HSDG}


class CapacityError(ValueError):
    """Problem too large for dense linear algebra."""


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionError(
                f"{self.amplitudes.shape[0]} amplitudes do not describe {self.n_qubits} qubits"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> Statevector:
        return Statevector(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class SamplingConfig:
    shots_per_group: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.shots_per_group < 1:
            raise ValueError(f"shots_per_group must be >= 1, got {self.shots_per_group}")


@dataclass(frozen=True)
class EnergyEstimate:
    """One cost evaluation.

    ``variance_theoretical`` is ``<H^2> - <H>^2`` of the sampled state divided
    by ``shots_per_group``. The estimator's own variance differs because
    groups are sampled independently; see :func:`grouped_variance`.
    """

    value: float
    backend: Literal["statevector", "sampling"] = "statevector"
    shots_per_group: int | None = None
    variance_theoretical: float | None = None
    seed_stamp: int | None = None

    def __post_init__(self) -> None:
        sampled = self.backend == "sampling"
        if sampled != (self.shots_per_group is not None) or sampled != (
            self.variance_theoretical is not None
        ):
            raise ValueError("shots and variance are present exactly for sampling estimates")


def _check(state: Statevector, ham: QubitHamiltonian) -> None:
    if state.n_qubits != ham.n_qubits:
        raise DimensionError(f"state has {state.n_qubits} qubits, Hamiltonian {ham.n_qubits}")


def hf_state(n_qubits: int, n_electrons: int) -> Statevector:
    """Basis state with qubits ``0 .. n_electrons - 1`` occupied."""
    if not 0 <= n_electrons <= n_qubits:
        raise ValueError(f"cannot place {n_electrons} electrons on {n_qubits} qubits")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[(1 << n_electrons) - 1] = 1.0
    return Statevector(n_qubits, amps)


def apply_pauli_exp(state: Statevector, term: PauliTerm, angle: float) -> Statevector:
    """Return ``exp(i * angle * c * P) |state>`` for ``term = c * P``."""
    if term.n_qubits != state.n_qubits:
        raise DimensionError(f"term has {term.n_qubits} qubits, state {state.n_qubits}")
    out = state.amplitudes.copy()
    kernels.apply_rotations(
        out,
        np.array([term.string.x], dtype=np.uint64),
        np.array([term.string.z], dtype=np.uint64),
        np.array([angle * term.coefficient]),
    )
    return Statevector(state.n_qubits, out)


def _energy(amps: np.ndarray, ham: QubitHamiltonian) -> float:
    xm, zm, coeffs = ham.masks
    if not len(coeffs):
        return ham.constant
    return float(ham.constant + coeffs @ kernels.pauli_expectations(amps, xm, zm))


def expectation_exact(state: Statevector, ham: QubitHamiltonian) -> EnergyEstimate:
    """``<psi|H|psi>`` summed term by term, without a dense matrix."""
    _check(state, ham)
    return EnergyEstimate(_energy(state.amplitudes, ham))


def _squared(ham: QubitHamiltonian) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pauli expansion of ``(H - constant)^2`` as mask/coefficient arrays, cached."""
    if "squared" in ham._cache:
        return ham._cache["squared"]
    acc: dict[tuple[int, int], complex] = {}
    terms = ham.terms
    for a in terms:
        for b in terms:
            phase, s = pauli_product(a.string, b.string)
            key = (s.x, s.z)
            acc[key] = acc.get(key, 0) + phase * a.coefficient * b.coefficient
    keys = [k for k, v in acc.items() if abs(v) > 0]
    # anti-commuting pairs cancel, so only real parts survive
    out = (
        np.array([k[0] for k in keys], dtype=np.uint64),
        np.array([k[1] for k in keys], dtype=np.uint64),
        np.array([acc[k].real for k in keys]),
    )
    ham._cache["squared"] = out
    return out


def hamiltonian_variance(state: Statevector, ham: QubitHamiltonian) -> float:
    """``<H^2> - <H>^2`` via the Pauli expansion of ``H^2``."""
    _check(state, ham)
    if not ham.terms:
        return 0.0
    xm, zm, coeffs = _squared(ham)
    h2 = float(coeffs @ kernels.pauli_expectations(state.amplitudes, xm, zm))
    h1 = _energy(state.amplitudes, ham) - ham.constant
    return h2 - h1 * h1


def measurement_groups(ham: QubitHamiltonian) -> list[CommutingGroups]:
    """Qubit-wise commuting groups per fragment, indices into ``ham.terms``."""
    out = []
    for name in dict.fromkeys(ham.fragment_of):
        idx = ham.fragment_indices(name)
        local = group_commuting([ham.terms[i] for i in idx], "qubit-wise", fragment=name)
        out.append(
            CommutingGroups(tuple(tuple(idx[i] for i in g) for g in local), local.mode, name)
        )
    return out


@dataclass(frozen=True)
class _GroupPlan:
    rotations: tuple[tuple[int, np.ndarray], ...]
    outcomes: np.ndarray  # sum_k c_k * eigenvalue_k(b) for every rotated basis state b


def _plans(ham: QubitHamiltonian, groups: Sequence[CommutingGroups]) -> list[_GroupPlan]:
    key = ("plans", tuple(g.groups for g in groups))
    if key in ham._cache:
        return ham._cache[key]
    seen = sorted(i for cg in groups for g in cg for i in g)
    if seen != list(range(len(ham.terms))):
        raise InvalidGroupError("groups must partition the Hamiltonian's terms")
    idx = np.arange(1 << ham.n_qubits, dtype=np.uint64)
    plans = []
    for cg in groups:
        for g in cg:
            strings = [ham.terms[i].string for i in g]
            basis = measurement_rotation(strings)
            supports = np.array([s.support for s in strings], dtype=np.uint64)
            signs = 1.0 - 2.0 * (np.bitwise_count(idx[None, :] & supports[:, None]) & 1)
            coeffs = np.array([ham.terms[i].coefficient for i in g])
            plans.append(
                _GroupPlan(
                    tuple((q, _ROTATIONS[ax]) for q, ax in enumerate(basis) if ax in _ROTATIONS),
                    coeffs @ signs,
                )
            )
    ham._cache[key] = plans
    return plans


def _rotate(amps: np.ndarray, n: int, rotations) -> np.ndarray:
    if not rotations:
        return amps
    psi = amps.reshape((2,) * n)
    for q, u in rotations:
        axis = n - 1 - q  # C-order reshape puts qubit n-1 first
        psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def rng_for(seed: int, eval_index: int, group_index: int) -> np.random.Generator:
    """Independent counter-based stream for one (evaluation, group) pair."""
    ss = np.random.SeedSequence(seed & (2**64 - 1), spawn_key=(eval_index, group_index))
    return np.random.Generator(np.random.Philox(ss))


def _rotated_probabilities(state: Statevector, ham: QubitHamiltonian, groups):
    for plan in _plans(ham, groups):
        yield plan, np.abs(_rotate(state.amplitudes, state.n_qubits, plan.rotations)) ** 2


def grouped_variance(
    state: Statevector, ham: QubitHamiltonian, groups: Sequence[CommutingGroups]
) -> float:
    """Single-shot variance of the grouped estimator: ``sum_G Var[H_G]``.

    Groups are measured independently, so cross-group covariances do not
    enter; this reduces to :func:`hamiltonian_variance` for a single group.
    """
    _check(state, ham)
    total = 0.0
    for plan, probs in _rotated_probabilities(state, ham, groups):
        mean = probs @ plan.outcomes
        total += float(probs @ plan.outcomes**2 - mean * mean)
    return max(total, 0.0)


def expectation_sampled(
    state: Statevector,
    ham: QubitHamiltonian,
    groups: Sequence[CommutingGroups],
    cfg: SamplingConfig,
    eval_index: int = 0,
) -> EnergyEstimate:
    """Shot-sampled energy: each group gets ``cfg.shots_per_group`` shots.

    Outcomes are drawn by inverse CDF over the rotated-basis probabilities
    and every rotated (diagonal) term is averaged over its +-1 eigenvalues.

    Raises:
        InvalidGroupError: If a group is not qubit-wise commuting or the
            groups do not partition the terms.
    """
    _check(state, ham)
    shots = cfg.shots_per_group
    value = ham.constant
    for g, (plan, probs) in enumerate(_rotated_probabilities(state, ham, groups)):
        rng = rng_for(cfg.rng_seed, eval_index, g)
        cdf = np.cumsum(probs)
        counts = kernels.inverse_cdf_counts(cdf, rng.random(shots) * cdf[-1])
        value += float(counts @ plan.outcomes) / shots
    var = max(hamiltonian_variance(state, ham), 0.0)
    return EnergyEstimate(float(value), "sampling", shots, var / shots, seed_stamp=cfg.rng_seed)


def number_expectation(state: Statevector) -> float:
    """``<N>`` with ``N = sum_q n_q``."""
    idx = np.arange(1 << state.n_qubits, dtype=np.uint64)
    return float(state.probabilities() @ np.bitwise_count(idx))


def dense_matrix(ham: QubitHamiltonian, include_constant: bool = True) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix (qubit ``q`` is bit ``q`` of the row index)."""
    n = ham.n_qubits
    if n > DENSE_QUBIT_LIMIT:
        raise CapacityError(f"{n} qubits exceed the dense limit of {DENSE_QUBIT_LIMIT}")
    dim = 1 << n
    idx = np.arange(dim, dtype=np.uint64)
    mat = np.zeros((dim, dim), dtype=complex)
    for t in ham.terms:
        s: PauliString = t.string
        ph = (1, 1j, -1, -1j)[(s.x & s.z).bit_count() % 4]
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(s.z)) & 1)
        mat[idx ^ np.uint64(s.x), idx] += t.coefficient * ph * signs
    if include_constant:
        mat += ham.constant * np.eye(dim)
    return mat


def exact_ground_energy(ham: QubitHamiltonian) -> float:
    """Lowest eigenvalue of the dense Hamiltonian, constant included.

    Raises:
        CapacityError: Above ``DENSE_QUBIT_LIMIT`` qubits.
    """
    if "e0" not in ham._cache:
        ham._cache["e0"] = float(np.linalg.eigvalsh(dense_matrix(ham, False))[0]) + ham.constant
    return ham._cache["e0"]
