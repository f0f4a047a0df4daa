import json
import sys
from functools import reduce
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tvha_bench.hamiltonian import build_qubit_hamiltonian, load_integrals

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
FIXTURE_NAMES = ("h2", "h4", "lih_as")

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def label_matrix(label: str) -> np.ndarray:
    """Kronecker product in label order; the leftmost letter is the top qubit."""
    return reduce(np.kron, (_PAULI[c] for c in label))


def pauli_sum_matrix(ham, include_constant=True) -> np.ndarray:
    dim = 1 << ham.n_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    for t in ham.terms:
        mat += t.coefficient * label_matrix(t.string.label)
    if include_constant:
        mat += ham.constant * np.eye(dim)
    return mat


def fock_annihilators(n_modes: int) -> list[np.ndarray]:
    """a_j on occupation-number states, bit j of the index = occupation of mode j."""
    dim = 1 << n_modes
    ops = []
    for j in range(n_modes):
        a = np.zeros((dim, dim))
        for state in range(dim):
            if state >> j & 1:
                sign = (-1) ** bin(state & ((1 << j) - 1)).count("1")
                a[state ^ (1 << j), state] = sign
        ops.append(a)
    return ops


def fock_hamiltonian(ints) -> np.ndarray:
    """Second-quantized Hamiltonian built directly from ladder matrices."""
    n = ints.n_spin_orbitals
    a = fock_annihilators(n)
    ad = [m.T for m in a]
    dim = 1 << n
    H = ints.core_energy * np.eye(dim)
    for (i, j), h in ints.one_body.items():
        H += h * ad[i] @ a[j]
    for (i, j, k, l), g in ints.two_body.items():
        H += 0.5 * g * ad[i] @ ad[j] @ a[k] @ a[l]
    return H


@pytest.fixture(scope="session")
def references():
    return json.loads((FIXTURES / "references.json").read_text())


@pytest.fixture(scope="session")
def fixture_path():
    return lambda name: FIXTURES / f"{name}.fcidump"


_HAM_CACHE = {}


def load_ham(name: str, p: float = 0.999):
    key = (name, p)
    if key not in _HAM_CACHE:
        _HAM_CACHE[key] = build_qubit_hamiltonian(load_integrals(FIXTURES / f"{name}.fcidump"), p)
    return _HAM_CACHE[key]


@pytest.fixture(scope="session")
def h2():
    return load_ham("h2")[0]


@pytest.fixture(scope="session")
def h4():
    return load_ham("h4")[0]


@pytest.fixture(scope="session")
def lih():
    return load_ham("lih_as")[0]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.pytest_terminal_lines():
        terminalreporter.write_line(line)
