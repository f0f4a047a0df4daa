"""Pauli-string algebra, commutation tests and commuting-group partitioning.

Strings are stored as a pair of bitmasks ``(x, z)`` with the Hermitian phase
convention ``P = i**popcount(x & z) * X**x Z**z``, so ``Y`` on qubit ``q``
sets bit ``q`` in both masks. Bit ``q`` always refers to qubit ``q``.

Text labels are written most-significant qubit first: ``"ZIII"`` is ``Z`` on
qubit 3. Use :meth:`PauliString.from_sparse` to address qubits by index.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Literal

__all__ = [
    "CommutationMode",
    "CommutingGroups",
    "DimensionError",
    "EmptyInputError",
    "InvalidGroupError",
    "PauliString",
    "PauliTerm",
    "commutes",
    "format_terms",
    "group_commuting",
    "measurement_rotation",
    "parse_terms",
    "pauli_product",
    "x_classes",
]

CommutationMode = Literal["qubit-wise", "general"]
_MODES = ("qubit-wise", "general")
_AXES = "IXZY"  # index = xbit + 2*zbit


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class EmptyInputError(ValueError):
    """An operation that needs at least one term received none."""


class InvalidGroupError(ValueError):
    """A group does not satisfy the commutation structure required of it."""


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, without a phase."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("bitmask exceeds the declared number of qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse ``"XIZY"`` (most-significant qubit first)."""
        label = label.strip().upper()
        if not label or any(ch not in "IXYZ" for ch in label):
            raise ValueError(f"invalid Pauli label {label!r}")
        n = len(label)
        x = z = 0
        for pos, ch in enumerate(label):
            q = n - 1 - pos
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(n, x, z)

    @classmethod
    def from_sparse(cls, ops: dict[int, str], n_qubits: int) -> PauliString:
        """Build from ``{qubit: axis}``, e.g. ``{0: "X", 2: "Z"}``."""
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} outside 0..{n_qubits - 1}")
            ch = ch.upper()
            if ch not in "IXYZ":
                raise ValueError(f"invalid axis {ch!r}")
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(n_qubits, x, z)

    def axis(self, qubit: int) -> str:
        return _AXES[((self.x >> qubit) & 1) | (((self.z >> qubit) & 1) << 1)]

    @property
    def label(self) -> str:
        return "".join(self.axis(q) for q in reversed(range(self.n_qubits)))

    @property
    def support(self) -> int:
        """Bitmask of qubits acted on non-trivially."""
        return self.x | self.z

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x == 0

    def __str__(self) -> str:
        return self.label

    def __mul__(self, other: PauliString) -> tuple[complex, PauliString]:
        return pauli_product(self, other)


@dataclass(frozen=True)
class PauliTerm:
    """A real coefficient (Hartree) times a Pauli string."""

    coefficient: float
    string: PauliString

    def __post_init__(self) -> None:
        if not math.isfinite(self.coefficient):
            raise ValueError(f"coefficient must be finite, got {self.coefficient}")

    @property
    def n_qubits(self) -> int:
        return self.string.n_qubits

    @classmethod
    def from_label(cls, coefficient: float, label: str) -> PauliTerm:
        return cls(float(coefficient), PauliString.from_label(label))


@dataclass(frozen=True)
class CommutingGroups:
    """Partition of term indices into mutually commuting groups."""

    groups: tuple[tuple[int, ...], ...]
    mode: CommutationMode = "qubit-wise"
    fragment: str | None = None

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    @property
    def indices(self) -> list[int]:
        return [i for g in self.groups for i in g]


def _check_dims(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"Pauli strings act on {a.n_qubits} and {b.n_qubits} qubits")


def pauli_product(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, c)`` with ``a * b == phase * c``."""
    _check_dims(a, b)
    x, z = a.x ^ b.x, a.z ^ b.z
    # X^x1 Z^z1 X^x2 Z^z2 = (-1)^|z1&x2| X^x Z^z, then re-absorb the Y phases
    k = (a.x & a.z).bit_count() + (b.x & b.z).bit_count() - (x & z).bit_count()
    k += 2 * (a.z & b.x).bit_count()
    return (1, 1j, -1, -1j)[k % 4], PauliString(a.n_qubits, x, z)


def commutes(a: PauliString, b: PauliString, mode: CommutationMode = "general") -> bool:
    """Whether ``a`` and ``b`` commute, globally or qubit by qubit.

    Raises:
        DimensionError: If the strings have different lengths.
    """
    _check_dims(a, b)
    clash = (a.x & b.z) ^ (a.z & b.x)  # positions where both are non-I and differ
    if mode == "general":
        return clash.bit_count() % 2 == 0
    if mode == "qubit-wise":
        return clash == 0
    raise ValueError(f"unknown commutation mode {mode!r}")


def _order_key(term: PauliTerm) -> tuple[float, str]:
    return (-abs(term.coefficient), term.string.label)


def group_commuting(
    terms: Sequence[PauliTerm],
    mode: CommutationMode = "qubit-wise",
    units: Sequence[Sequence[int]] | None = None,
    fragment: str | None = None,
) -> CommutingGroups:
    """Greedy colouring of the anti-commutation graph.

    Terms are visited by descending ``|coefficient|`` (ties: lexicographic
    label) and each goes into the first group it commutes with pairwise,
    otherwise it opens a new group.

    Args:
        terms: Terms to partition; indices in the result refer to this list.
        mode: ``"qubit-wise"`` or ``"general"`` commutation.
        units: Optional blocks of indices that must stay in one group. Each
            block must already commute internally; blocks are ordered by their
            heaviest member and placed atomically.
        fragment: Label stored on the result.

    Raises:
        EmptyInputError: If ``terms`` is empty.
        InvalidGroupError: If a unit is not internally commuting.
    """
    if mode not in _MODES:
        raise ValueError(f"unknown commutation mode {mode!r}")
    if not terms:
        raise EmptyInputError("cannot group an empty term list")
    n = terms[0].n_qubits
    if any(t.n_qubits != n for t in terms):
        raise DimensionError("terms act on different numbers of qubits")

    if units is None:
        blocks = [[i] for i in range(len(terms))]
    else:
        blocks = [sorted(u, key=lambda i: _order_key(terms[i])) for u in units if u]
        seen = sorted(i for b in blocks for i in b)
        if seen != list(range(len(terms))):
            raise InvalidGroupError("units must partition the term indices")
        for b in blocks:
            for p, i in enumerate(b):
                for j in b[p + 1 :]:
                    if not commutes(terms[i].string, terms[j].string, mode):
                        raise InvalidGroupError(f"unit {b} is not {mode} commuting")
    blocks.sort(key=lambda b: _order_key(terms[b[0]]))

    groups: list[list[int]] = []
    for block in blocks:
        for g in groups:
            if all(
                commutes(terms[i].string, terms[j].string, mode) for i in block for j in g
            ):
                g.extend(block)
                break
        else:
            groups.append(list(block))
    return CommutingGroups(tuple(tuple(g) for g in groups), mode, fragment)


def x_classes(terms: Sequence[PauliTerm]) -> list[list[int]]:
    """Group term indices by their X bitmask, in first-appearance order.

    For a number-conserving real Hamiltonian each class sums to an operator
    that commutes with the particle-number operator.
    """
    classes: dict[int, list[int]] = {}
    for i, t in enumerate(terms):
        classes.setdefault(t.string.x, []).append(i)
    return list(classes.values())


def measurement_rotation(group: Sequence[PauliString]) -> list[str]:
    """Per-qubit basis change that diagonalises a qubit-wise commuting group.

    Returns one entry per qubit: ``"I"`` (no change, for I/Z), ``"X"``
    (Hadamard, maps X to Z) or ``"Y"`` (S-dagger then Hadamard, maps Y to Z).

    Raises:
        InvalidGroupError: If two strings disagree on a qubit's axis.
    """
    if not group:
        raise EmptyInputError("empty measurement group")
    n = group[0].n_qubits
    basis = ["I"] * n
    for s in group:
        if s.n_qubits != n:
            raise DimensionError("group members act on different numbers of qubits")
        for q in range(n):
            ax = s.axis(q)
            if ax in "XY":
                if basis[q] not in ("I", ax):
                    raise InvalidGroupError(f"qubit {q} needs both {basis[q]} and {ax}")
                basis[q] = ax
            elif ax == "Z" and basis[q] != "I":
                raise InvalidGroupError(f"qubit {q} needs both {basis[q]} and Z")
    # a Z after an X/Y on the same qubit is caught by the pairwise check
    for i, a in enumerate(group):
        for b in group[i + 1 :]:
            if not commutes(a, b, "qubit-wise"):
                raise InvalidGroupError(f"{a} and {b} are not qubit-wise commuting")
    return basis


def parse_terms(lines: Iterable[str]) -> list[PauliTerm]:
    """Read ``coefficient LABEL`` lines; ``#`` starts a comment."""
    out: list[PauliTerm] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'coefficient LABEL', got {raw!r}")
        try:
            out.append(PauliTerm.from_label(float(parts[0]), parts[1]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out


def format_terms(terms: Iterable[PauliTerm]) -> str:
    return "".join(f"{t.coefficient:.12g} {t.string.label}\n" for t in terms)
