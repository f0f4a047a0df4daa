"""Compiled versus numpy kernels on random states and Pauli masks.

    python benchmarks/bench_kernels.py [--qubits 8 12 16] [--terms 200] [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from tvha_bench import _pykernels

try:
    from tvha_bench import _ckernels
except ImportError:
    _ckernels = None


def _inputs(n: int, terms: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    hi = 1 << n
    xm = rng.integers(0, hi, terms, dtype=np.uint64)
    zm = rng.integers(0, hi, terms, dtype=np.uint64)
    phis = rng.uniform(-1, 1, terms)
    cdf = np.cumsum(np.abs(psi) ** 2)
    u = rng.random(4096) * cdf[-1]
    return psi, xm, zm, phis, cdf, u


def _time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--terms", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = {"numpy": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"{'kernel':<20}{'qubits':>7}" + "".join(f"{k:>12}" for k in impls) + f"{'speedup':>10}")
    for n in args.qubits:
        psi, xm, zm, phis, cdf, u = _inputs(n, args.terms)
        cases = {
            "apply_rotations": lambda m: m.apply_rotations(psi.copy(), xm, zm, phis),
            "pauli_expectations": lambda m: m.pauli_expectations(psi, xm, zm),
            "inverse_cdf_counts": lambda m: m.inverse_cdf_counts(cdf, u),
        }
        for name, call in cases.items():
            times = {k: _time(lambda m=m: call(m), args.repeat) for k, m in impls.items()}
            row = f"{name:<20}{n:>7}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times.values())
            if "cython" in times:
                row += f"{times['numpy'] / times['cython']:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
