"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
``TVHA_BENCH_PURE_PYTHON`` environment variable is set, the numpy fallback
is used. Both expose ``apply_rotations``, ``pauli_expectations`` and
``inverse_cdf_counts`` with identical semantics.
"""

from __future__ import annotations

import os

from tvha_bench import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("TVHA_BENCH_PURE_PYTHON"):
    try:
        from tvha_bench import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

apply_rotations = _impl.apply_rotations
pauli_expectations = _impl.pauli_expectations
inverse_cdf_counts = _impl.inverse_cdf_counts

__all__ = ["BACKEND", "apply_rotations", "inverse_cdf_counts", "pauli_expectations"]
