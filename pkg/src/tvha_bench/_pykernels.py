"""Pure-numpy Pauli-action kernels.

Pauli strings are passed as (x, z) bitmask pairs with the Hermitian phase
convention ``P = i**popcount(x & z) * X**x Z**z``; bit ``q`` of a basis
index is the occupation of qubit ``q``.
"""

from __future__ import annotations

import numpy as np

_IPOW = (1.0, 1.0j, -1.0, -1.0j)


def _parity_signs(mask: int, idx: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(mask)) & 1)


def apply_rotations(psi, xmasks, zmasks, phis) -> None:
    """Apply exp(i*phi_t*P_t) for t = 0, 1, ... in place."""
    idx = np.arange(psi.shape[0], dtype=np.uint64)
    for x, z, phi in zip(xmasks, zmasks, phis):
        x = int(x)
        c, s = np.cos(phi), np.sin(phi)
        if x == 0:
            psi *= c + 1j * s * _parity_signs(int(z), idx)
            continue
        partner = idx ^ np.uint64(x)
        ph = _IPOW[(x & int(z)).bit_count() & 3]
        src = psi[partner] * _parity_signs(int(z), partner)
        psi *= c
        psi += (1j * s * ph) * src


def pauli_expectations(psi, xmasks, zmasks) -> np.ndarray:
    """Real parts of <psi|P_t|psi> for every term."""
    idx = np.arange(psi.shape[0], dtype=np.uint64)
    out = np.empty(len(xmasks), dtype=np.float64)
    for t, (x, z) in enumerate(zip(xmasks, zmasks)):
        x = int(x)
        ph = _IPOW[(x & int(z)).bit_count() & 3]
        acc = np.vdot(psi[idx ^ np.uint64(x)], psi * _parity_signs(int(z), idx))
        out[t] = (ph * acc).real
    return out


def inverse_cdf_counts(cdf, u) -> np.ndarray:
    """Histogram of first indices k with cdf[k] > u_s, clamped to the last index."""
    dim = cdf.shape[0]
    draws = np.searchsorted(cdf, u, side="right")
    return np.bincount(np.minimum(draws, dim - 1), minlength=dim)
