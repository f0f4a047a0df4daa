# cython: language_level=3
"""Compiled Pauli-action kernels. Mirrors ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin
from libc.stdint cimport uint64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

ctypedef double complex cplx


cdef inline cplx _ipow(int k) nogil:
    k = k & 3
    if k == 0:
        return 1.0
    elif k == 1:
        return 1.0j
    elif k == 2:
        return -1.0
    return -1.0j


def apply_rotations(cplx[::1] psi, const uint64_t[::1] xmasks,
                    const uint64_t[::1] zmasks, const double[::1] phis):
    """Apply exp(i*phi_t*P_t) for t = 0, 1, ... in place."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t nterms = xmasks.shape[0]
    cdef Py_ssize_t t, j, k
    cdef uint64_t x, z
    cdef double c, s
    cdef cplx ph, a, b, isp
    cdef int sj, sk
    with nogil:
        for t in range(nterms):
            x = xmasks[t]
            z = zmasks[t]
            c = cos(phis[t])
            s = sin(phis[t])
            if x == 0:
                for j in range(dim):
                    if __builtin_popcountll(z & <uint64_t>j) & 1:
                        psi[j] = psi[j] * (c - 1.0j * s)
                    else:
                        psi[j] = psi[j] * (c + 1.0j * s)
                continue
            ph = _ipow(__builtin_popcountll(x & z))
            isp = 1.0j * s * ph
            for j in range(dim):
                k = <Py_ssize_t>(<uint64_t>j ^ x)
                if k < j:
                    continue
                sj = 1 - 2 * (__builtin_popcountll(z & <uint64_t>j) & 1)
                sk = 1 - 2 * (__builtin_popcountll(z & <uint64_t>k) & 1)
                a = psi[j]
                b = psi[k]
                psi[j] = c * a + isp * sk * b
                psi[k] = c * b + isp * sj * a


def pauli_expectations(const cplx[::1] psi, const uint64_t[::1] xmasks,
                       const uint64_t[::1] zmasks):
    """Real parts of <psi|P_t|psi> for every term."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t nterms = xmasks.shape[0]
    out = np.empty(nterms, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t t, j, k
    cdef uint64_t x, z
    cdef cplx acc, ph
    for t in range(nterms):
        x = xmasks[t]
        z = zmasks[t]
        acc = 0.0
        with nogil:
            for j in range(dim):
                k = <Py_ssize_t>(<uint64_t>j ^ x)
                if __builtin_popcountll(z & <uint64_t>j) & 1:
                    acc = acc - psi[k].conjugate() * psi[j]
                else:
                    acc = acc + psi[k].conjugate() * psi[j]
        ph = _ipow(__builtin_popcountll(x & z))
        res[t] = (ph * acc).real
    return out


def inverse_cdf_counts(const double[::1] cdf, const double[::1] u):
    """Histogram of first indices k with cdf[k] > u_s, clamped to the last index."""
    cdef Py_ssize_t dim = cdf.shape[0], n = u.shape[0], s, lo, hi, mid
    counts = np.zeros(dim, dtype=np.int64)
    cdef long long[::1] c = counts
    cdef double v
    with nogil:
        for s in range(n):
            v = u[s]
            lo = 0
            hi = dim - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if cdf[mid] > v:
                    hi = mid
                else:
                    lo = mid + 1
            c[lo] += 1
    return counts
