import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import label_matrix
from tvha_bench import _pykernels, kernels
from tvha_bench.pauli import PauliString

try:
    from tvha_bench import _ckernels
except ImportError:  # extension not built
    _ckernels = None

IMPLS = [pytest.param(_pykernels, id="python")]
if _ckernels is not None:
    IMPLS.append(pytest.param(_ckernels, id="cython"))


def _random_problem(seed, n, t):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    labels = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(t)]
    strings = [PauliString.from_label(lab) for lab in labels]
    xm = np.array([s.x for s in strings], dtype=np.uint64)
    zm = np.array([s.z for s in strings], dtype=np.uint64)
    return psi, labels, xm, zm, rng.normal(size=t)


@pytest.mark.parametrize("impl", IMPLS)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 6))
def test_expectations_match_dense(impl, seed, n, t):
    psi, labels, xm, zm, _ = _random_problem(seed, n, t)
    want = [(psi.conj() @ label_matrix(lab) @ psi).real for lab in labels]
    np.testing.assert_allclose(impl.pauli_expectations(psi, xm, zm), want, atol=1e-12)


@pytest.mark.parametrize("impl", IMPLS)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 6))
def test_rotations_match_dense(impl, seed, n, t):
    psi, labels, xm, zm, phis = _random_problem(seed, n, t)
    want = psi.copy()
    for lab, phi in zip(labels, phis):
        P = label_matrix(lab)
        want = (np.cos(phi) * np.eye(len(psi)) + 1j * np.sin(phi) * P) @ want
    got = psi.copy()
    impl.apply_rotations(got, xm, zm, phis)
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
@given(st.integers(0, 10**6), st.integers(1, 64))
def test_inverse_cdf_counts_parity(seed, draws):
    rng = np.random.default_rng(seed)
    p = rng.random(16) * (rng.random(16) > 0.3)
    p[0] += 1e-3
    cdf = np.cumsum(p)
    u = rng.random(draws) * cdf[-1]
    a = _pykernels.inverse_cdf_counts(cdf, u)
    b = _ckernels.inverse_cdf_counts(cdf, u)
    np.testing.assert_array_equal(a, b)
    assert a.sum() == draws
    assert not a[p == 0].any()


def test_inverse_cdf_counts_edges():
    cdf = np.array([0.0, 0.5, 0.5, 1.0])
    for impl in [_pykernels] + ([_ckernels] if _ckernels else []):
        counts = impl.inverse_cdf_counts(cdf, np.array([0.0, 0.49, 0.5, 0.99, 1.0]))
        assert counts.tolist() == [0, 2, 0, 3]


def test_fallback_selected_by_environment():
    env = dict(os.environ, TVHA_BENCH_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from tvha_bench import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
    if _ckernels is not None and not os.environ.get("TVHA_BENCH_PURE_PYTHON"):
        assert kernels.BACKEND == "cython"
