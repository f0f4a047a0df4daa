"""Molecular Hamiltonians: integral ingestion, fragmenting, truncation, qubit mapping.

Spin orbitals are interleaved: spatial orbital ``q`` becomes spin orbitals
``2q`` (alpha) and ``2q + 1`` (beta). Two-body coefficients are stored in the
operator convention

    H = sum_ij h[i,j] a_i^+ a_j + 1/2 sum_ijkl g[i,j,k,l] a_i^+ a_j^+ a_k a_l

so that for real spatial integrals ``g[i,j,k,l] = (i l | j k)`` in chemists'
notation, with spin conservation at each vertex.
"""

from __future__ import annotations

import io
import math
import re
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, TextIO

import numpy as np

from tvha_bench.pauli import PauliString, PauliTerm

__all__ = [
    "COEFF_FLOOR",
    "FermionTerm",
    "FermionicIntegrals",
    "FragmentedHamiltonian",
    "ParseError",
    "QubitHamiltonian",
    "TruncationReport",
    "ValidationError",
    "build_qubit_hamiltonian",
    "fragment",
    "jordan_wigner",
    "load_integrals",
    "parse_integrals",
    "truncate_gamma",
    "write_fcidump",
]

Fragment = Literal["alpha", "beta", "gamma"]
FRAGMENTS: tuple[Fragment, ...] = ("alpha", "beta", "gamma")
COEFF_FLOOR = 1e-12  # Hartree; smaller merged coefficients are dropped


class ParseError(ValueError):
    """Malformed integral file."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


class ValidationError(ValueError):
    """Integral data violates a structural invariant."""


@dataclass(frozen=True)
class FermionicIntegrals:
    n_spin_orbitals: int
    one_body: dict[tuple[int, int], float]
    two_body: dict[tuple[int, int, int, int], float]
    core_energy: float = 0.0
    n_electrons: int = 0

    def __post_init__(self) -> None:
        n = self.n_spin_orbitals
        if n < 1:
            raise ValidationError("n_spin_orbitals must be positive")
        if not 0 <= self.n_electrons <= n:
            raise ValidationError(f"n_electrons={self.n_electrons} outside 0..{n}")
        for key in list(self.one_body) + list(self.two_body):
            if any(not 0 <= i < n for i in key):
                raise ValidationError(f"index {key} outside 0..{n - 1}")
        for (i, j), v in self.one_body.items():
            if abs(v - self.one_body.get((j, i), 0.0)) > 1e-10:
                raise ValidationError(f"one-body integrals not symmetric at {(i, j)}")


@dataclass(frozen=True)
class FermionTerm:
    """``coefficient * a^+_{i1} ... a_{ik}`` with ``ops`` as (index, is_creation)."""

    coefficient: float
    ops: tuple[tuple[int, bool], ...]

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.ops)

    @classmethod
    def one_body(cls, i: int, j: int, h: float) -> FermionTerm:
        return cls(h, ((i, True), (j, False)))

    @classmethod
    def two_body(cls, i: int, j: int, k: int, l: int, coeff: float) -> FermionTerm:
        return cls(coeff, ((i, True), (j, True), (k, False), (l, False)))


@dataclass(frozen=True)
class FragmentedHamiltonian:
    n_spin_orbitals: int
    alpha: tuple[FermionTerm, ...]
    beta: tuple[FermionTerm, ...]
    gamma: tuple[FermionTerm, ...]
    core_energy: float = 0.0
    n_electrons: int = 0

    def terms(self, name: Fragment) -> tuple[FermionTerm, ...]:
        return getattr(self, name)


@dataclass(frozen=True)
class TruncationReport:
    p_requested: float
    p_achieved: float
    s_cut: int
    kept: tuple[FermionTerm, ...]
    dropped: tuple[FermionTerm, ...]


@dataclass(frozen=True)
class QubitHamiltonian:
    """Weighted Pauli sum, with every term tagged by its source fragment.

    Pauli strings are unique within a fragment but may repeat across
    fragments, since each fragment is mapped and merged on its own.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...]
    fragment_of: tuple[str, ...]
    constant: float = 0.0
    n_electrons: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.terms) != len(self.fragment_of):
            raise ValueError("fragment_of must tag every term")
        if any(t.n_qubits != self.n_qubits for t in self.terms):
            raise ValueError("term width differs from n_qubits")

    @classmethod
    def from_terms(
        cls,
        terms: Sequence[PauliTerm],
        constant: float = 0.0,
        fragment: str = "alpha",
        n_electrons: int = 0,
    ) -> QubitHamiltonian:
        """Wrap a flat term list; identity strings are folded into ``constant``."""
        if not terms:
            raise ValueError("need at least one term to fix the qubit count")
        kept = [t for t in terms if not t.string.is_identity]
        constant += sum(t.coefficient for t in terms if t.string.is_identity)
        return cls(terms[0].n_qubits, tuple(kept), (fragment,) * len(kept), constant, n_electrons)

    def fragment_indices(self, name: str) -> list[int]:
        return [i for i, f in enumerate(self.fragment_of) if f == name]

    def fragment_terms(self, name: str) -> list[PauliTerm]:
        return [self.terms[i] for i in self.fragment_indices(name)]

    @property
    def masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(xmasks, zmasks, coefficients)`` arrays, cached."""
        if "masks" not in self._cache:
            self._cache["masks"] = (
                np.array([t.string.x for t in self.terms], dtype=np.uint64),
                np.array([t.string.z for t in self.terms], dtype=np.uint64),
                np.array([t.coefficient for t in self.terms], dtype=np.float64),
            )
        return self._cache["masks"]

    def to_text(self) -> str:
        lines = [f"# n_qubits={self.n_qubits} constant={self.constant!r}\n"]
        lines.append(f"{self.constant:.12g} {'I' * self.n_qubits}\n")
        for t, frag in zip(self.terms, self.fragment_of):
            lines.append(f"{t.coefficient:.12g} {t.string.label}  # {frag}\n")
        return "".join(lines)


# ---------------------------------------------------------------------------
# FCIDUMP


def _header_int(text: str, key: str, lineno: int) -> int:
    m = re.search(rf"\b{key}\s*=\s*([^,\s]+)", text, flags=re.IGNORECASE)
    if m is None:
        raise ParseError(f"header lacks {key}", lineno)
    try:
        return int(m.group(1))
    except ValueError:
        raise ParseError(f"{key}={m.group(1)!r} is not an integer", lineno) from None


def parse_integrals(source: TextIO | str | bytes, format: str = "fcidump") -> FermionicIntegrals:
    """Read an FCIDUMP file into spin-orbital integrals.

    Records are ``value i j k l`` with 1-based spatial indices and chemists'
    ordering; ``i j 0 0`` is a one-body term and ``0 0 0 0`` the core energy.
    Records with a single non-zero index (orbital energies) are ignored. The
    8-fold permutational symmetry of real two-electron integrals is expanded.

    Raises:
        ParseError: Malformed header or record, with the line number.
        ValidationError: Index outside the declared orbital range.
    """
    if format != "fcidump":
        raise ValueError(f"unsupported integral format {format!r}")
    if isinstance(source, bytes):
        source = source.decode()
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = source.read().splitlines()

    header: list[str] = []
    start = None
    for n, line in enumerate(lines, 1):
        header.append(line)
        if re.search(r"(&END|^\s*/)\s*$", line, flags=re.IGNORECASE):
            start = n
            break
    if not lines or not lines[0].lstrip().upper().startswith("&FCI") or start is None:
        raise ParseError("missing '&FCI ... &END' header", 1)
    text = " ".join(header)
    norb, nelec = _header_int(text, "NORB", start), _header_int(text, "NELEC", start)
    if norb < 1:
        raise ParseError(f"NORB must be positive, got {norb}", start)

    eri = np.zeros((norb,) * 4)
    h1 = np.zeros((norb, norb))
    core = 0.0
    for n, line in enumerate(lines[start:], start + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise ParseError(f"expected 'value i j k l', got {line.strip()!r}", n)
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise ParseError(f"unreadable record {line.strip()!r}", n) from None
        if any(not 0 <= p <= norb for p in (i, j, k, l)):
            raise ValidationError(f"line {n}: index outside 1..{norb}")
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0 and j != 0:
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = value
        elif j == k == l == 0:
            continue
        elif 0 in (i, j, k, l):
            raise ValidationError(f"line {n}: unsupported index pattern {(i, j, k, l)}")
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                eri[a, b, c, d] = eri[c, d, a, b] = value

    return _spin_orbital_integrals(h1, eri, core, nelec)


def _spin_orbital_integrals(
    h1: np.ndarray, eri: np.ndarray, core: float, n_electrons: int
) -> FermionicIntegrals:
    norb = h1.shape[0]
    n = 2 * norb
    spatial = np.arange(n) // 2
    spin = np.arange(n) % 2

    one_body = {}
    for i in range(n):
        for j in range(n):
            if spin[i] == spin[j] and h1[spatial[i], spatial[j]] != 0.0:
                one_body[(i, j)] = float(h1[spatial[i], spatial[j]])

    # g[i,j,k,l] = (i l | j k) with spin(i)=spin(l), spin(j)=spin(k)
    g = eri[np.ix_(spatial, spatial, spatial, spatial)].transpose(0, 2, 3, 1)
    same = spin[:, None] == spin[None, :]
    g = g * same.transpose(1, 0)[None, :, :, None] * same[:, None, None, :]
    two_body = {}
    for idx in zip(*np.nonzero(g)):
        i, j, k, l = (int(v) for v in idx)
        if i != j and k != l:  # a_i^+ a_i^+ and a_k a_k vanish
            two_body[(i, j, k, l)] = float(g[idx])
    return FermionicIntegrals(n, one_body, two_body, float(core), int(n_electrons))


def load_integrals(path: str | Path) -> FermionicIntegrals:
    with open(path) as fh:
        return parse_integrals(fh)


def write_fcidump(
    fh: TextIO,
    h1: np.ndarray,
    eri: np.ndarray,
    core: float,
    n_electrons: int,
    tol: float = 1e-15,
) -> None:
    """Write spatial integrals (8-fold unique records) in FCIDUMP form."""
    norb = h1.shape[0]
    fh.write(f" &FCI NORB={norb:4d},NELEC={n_electrons:2d},MS2=0,\n")
    fh.write(f"  ORBSYM={'1,' * norb}\n  ISYM=1,\n &END\n")
    for i in range(norb):
        for j in range(i + 1):
            for k in range(i + 1):
                for l in range(k + 1):
                    if (i * (i + 1) // 2 + j) >= (k * (k + 1) // 2 + l) and abs(eri[i, j, k, l]) > tol:
                        fh.write(f" {float(eri[i, j, k, l])!r} {i + 1} {j + 1} {k + 1} {l + 1}\n")
    for i in range(norb):
        for j in range(i + 1):
            if abs(h1[i, j]) > tol:
                fh.write(f" {float(h1[i, j])!r} {i + 1} {j + 1} 0 0\n")
    fh.write(f" {float(core)!r} 0 0 0 0\n")


# ---------------------------------------------------------------------------
# Fragmenting and truncation


def fragment(ints: FermionicIntegrals) -> FragmentedHamiltonian:
    """Split into one-body (alpha), Coulomb (beta) and remaining two-body (gamma).

    The 1/2 prefactor of the two-body sum is folded into the stored
    coefficients. Exchange-ordered records ``(i, j, i, j)`` describe the same
    operator as ``(i, j, j, i)`` up to sign, ``a_i^+ a_j^+ a_i a_j =
    -a_i^+ a_j^+ a_j a_i``, so they are rewritten into the Coulomb pattern
    and land in beta. Everything else goes to gamma.
    """
    alpha = tuple(FermionTerm.one_body(i, j, h) for (i, j), h in sorted(ints.one_body.items()))
    beta: list[FermionTerm] = []
    gamma: list[FermionTerm] = []
    for (i, j, k, l), g in sorted(ints.two_body.items()):
        if (k, l) == (j, i):
            beta.append(FermionTerm.two_body(i, j, j, i, 0.5 * g))
        elif (k, l) == (i, j):
            beta.append(FermionTerm.two_body(i, j, j, i, -0.5 * g))
        else:
            gamma.append(FermionTerm.two_body(i, j, k, l, 0.5 * g))
    return FragmentedHamiltonian(
        ints.n_spin_orbitals, alpha, tuple(beta), tuple(gamma), ints.core_energy, ints.n_electrons
    )


def truncate_gamma(
    frag: FragmentedHamiltonian, p: float
) -> tuple[FragmentedHamiltonian, TruncationReport]:
    """Keep the heaviest gamma terms carrying at least a fraction ``p`` of sum |g|.

    Terms are sorted by descending magnitude, ties by index tuple. The kept
    prefix is the shortest one reaching ``p``, extended over any following
    terms of exactly equal magnitude so that symmetry partners (including
    Hermitian conjugates) are never split.

    Raises:
        ValueError: If ``p`` is outside [0, 1].
    """
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"truncation threshold must lie in [0, 1], got {p}")
    order = sorted(frag.gamma, key=lambda t: (-abs(t.coefficient), t.indices))
    mags = np.array([abs(t.coefficient) for t in order])
    total = float(mags.sum())
    if total == 0.0 or p == 0.0:
        cut = 0
    else:
        frac = np.cumsum(mags) / total
        # relative slack absorbs round-off in the running sum
        cut = int(np.searchsorted(frac, p - 1e-12 * len(mags), side="left")) + 1
        cut = min(cut, len(order))
        while cut < len(order) and mags[cut] == mags[cut - 1]:
            cut += 1
    achieved = float(mags[:cut].sum() / total) if total > 0 else 1.0
    kept, dropped = tuple(order[:cut]), tuple(order[cut:])
    report = TruncationReport(float(p), min(achieved, 1.0), cut, kept, dropped)
    truncated = FragmentedHamiltonian(
        frag.n_spin_orbitals, frag.alpha, frag.beta, kept, frag.core_energy, frag.n_electrons
    )
    return truncated, report


# ---------------------------------------------------------------------------
# Jordan-Wigner

_IPOW = (1, 1j, -1, -1j)
PauliSum = dict[tuple[int, int], complex]


def _mul(a: PauliSum, b: PauliSum) -> PauliSum:
    out: PauliSum = defaultdict(complex)
    for (x1, z1), c1 in a.items():
        y1 = (x1 & z1).bit_count()
        for (x2, z2), c2 in b.items():
            x, z = x1 ^ x2, z1 ^ z2
            k = y1 + (x2 & z2).bit_count() - (x & z).bit_count() + 2 * (z1 & x2).bit_count()
            out[(x, z)] += _IPOW[k % 4] * c1 * c2
    return out


def _ladder(j: int, creation: bool) -> PauliSum:
    xj, tail = 1 << j, (1 << j) - 1
    sign = -0.5j if creation else 0.5j
    return {(xj, tail): 0.5, (xj, tail | xj): sign}


def _map_fragment(terms: Iterable[FermionTerm]) -> PauliSum:
    total: PauliSum = defaultdict(complex)
    cache: dict[tuple[int, bool], PauliSum] = {}
    for term in terms:
        prod: PauliSum = {(0, 0): complex(term.coefficient)}
        for op in term.ops:
            if op not in cache:
                cache[op] = _ladder(*op)
            prod = _mul(prod, cache[op])
        for key, c in prod.items():
            total[key] += c
    return total


def jordan_wigner(frag: FragmentedHamiltonian) -> QubitHamiltonian:
    """Map every fragment to Pauli terms; identity parts join the constant.

    Like strings are merged within a fragment only. Merged coefficients must
    be real to within ``COEFF_FLOOR``; magnitudes below it are dropped.
    """
    n = frag.n_spin_orbitals
    terms: list[PauliTerm] = []
    tags: list[str] = []
    constant = frag.core_energy
    for name in FRAGMENTS:
        mapped = _map_fragment(frag.terms(name))
        for (x, z), c in sorted(mapped.items(), key=lambda kv: PauliString(n, *kv[0]).label):
            if abs(c.imag) > COEFF_FLOOR:
                raise ValidationError(
                    f"{name} fragment is not Hermitian: imaginary coefficient {c.imag:g}"
                )
            if abs(c.real) < COEFF_FLOOR:
                continue
            if x == 0 and z == 0:
                constant += c.real
                continue
            terms.append(PauliTerm(c.real, PauliString(n, x, z)))
            tags.append(name)
    return QubitHamiltonian(n, tuple(terms), tuple(tags), float(constant), frag.n_electrons)


def build_qubit_hamiltonian(
    ints: FermionicIntegrals, p: float = 0.999
) -> tuple[QubitHamiltonian, TruncationReport]:
    """Fragment, truncate gamma at ``p`` and map to qubits."""
    truncated, report = truncate_gamma(fragment(ints), p)
    return jordan_wigner(truncated), report
