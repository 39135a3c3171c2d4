# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled heat-bath and pairing-switch sweeps.

Every kernel consumes pre-drawn uniforms so that the pure-Python fallback
reproduces it exactly.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


cdef inline long _code(const signed char[::1] spins, Py_ssize_t n) noexcept nogil:
    cdef long c = 0
    cdef Py_ssize_t i
    for i in range(n):
        if spins[i] < 0:
            c |= (<long>1) << i
    return c


def heat_bath_dense(const double[:, ::1] J, double[::1] field, signed char[::1] spins,
                    const double[::1] uniforms, bint record_codes=False):
    cdef Py_ssize_t N = spins.shape[0]
    cdef Py_ssize_t n_sweeps = uniforms.shape[0] // N
    cdef cnp.ndarray[cnp.int64_t, ndim=1] S_out = np.empty(n_sweeps, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] codes = np.zeros(n_sweeps if record_codes else 0, dtype=np.int64)
    cdef long long S = 0
    cdef Py_ssize_t i, j, t, k = 0
    cdef signed char new
    cdef double delta, pplus
    for i in range(N):
        S += spins[i]
    with nogil:
        for t in range(n_sweeps):
            for i in range(N):
                pplus = 1.0 / (1.0 + exp(-2.0 * field[i]))
                new = 1 if uniforms[k] < pplus else -1
                k += 1
                if new != spins[i]:
                    delta = <double>(new - spins[i])
                    spins[i] = new
                    S += 2 * new
                    for j in range(N):
                        field[j] += delta * J[i, j]
            S_out[t] = S
            if record_codes:
                codes[t] = _code(spins, N)
    return S_out, codes


def heat_bath_rank1(const double[::1] w, double c, double B, signed char[::1] spins,
                    double msum, const double[::1] uniforms, bint record_codes=False):
    cdef Py_ssize_t N = spins.shape[0]
    cdef Py_ssize_t n_sweeps = uniforms.shape[0] // N
    cdef cnp.ndarray[cnp.int64_t, ndim=1] S_out = np.empty(n_sweeps, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] codes = np.zeros(n_sweeps if record_codes else 0, dtype=np.int64)
    cdef long long S = 0
    cdef Py_ssize_t i, t, k = 0
    cdef signed char new
    cdef double h, pplus
    for i in range(N):
        S += spins[i]
    with nogil:
        for t in range(n_sweeps):
            for i in range(N):
                h = B + c * w[i] * (msum - w[i] * spins[i])
                pplus = 1.0 / (1.0 + exp(-2.0 * h))
                new = 1 if uniforms[k] < pplus else -1
                k += 1
                if new != spins[i]:
                    msum += (new - spins[i]) * w[i]
                    spins[i] = new
                    S += 2 * new
            S_out[t] = S
            if record_codes:
                codes[t] = _code(spins, N)
    return S_out, codes, msum


def heat_bath_sparse(const long long[::1] indptr, const long long[::1] indices, double beta, double B,
                     signed char[::1] spins, const double[::1] uniforms, bint record_codes=False):
    cdef Py_ssize_t N = spins.shape[0]
    cdef Py_ssize_t n_sweeps = uniforms.shape[0] // N
    cdef cnp.ndarray[cnp.int64_t, ndim=1] S_out = np.empty(n_sweeps, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] codes = np.zeros(n_sweeps if record_codes else 0, dtype=np.int64)
    cdef long long S = 0
    cdef long long isum
    cdef Py_ssize_t i, e, t, k = 0
    cdef signed char new
    cdef double h, pplus
    for i in range(N):
        S += spins[i]
    with nogil:
        for t in range(n_sweeps):
            for i in range(N):
                isum = 0
                for e in range(indptr[i], indptr[i + 1]):
                    isum += spins[indices[e]]
                h = B + beta * isum
                pplus = 1.0 / (1.0 + exp(-2.0 * h))
                new = 1 if uniforms[k] < pplus else -1
                k += 1
                if new != spins[i]:
                    spins[i] = new
                    S += 2 * new
            S_out[t] = S
            if record_codes:
                codes[t] = _code(spins, N)
    return S_out, codes


def joint_cm_sweeps(const long long[::1] vptr, const long long[::1] owner, long long[::1] partner,
                    signed char[::1] spins, double beta, double B, Py_ssize_t n_switch,
                    const double[::1] u_spin, const double[::1] u_switch, bint record_codes=False):
    """Alternate a heat-bath sweep over spins with ``n_switch`` double-edge switches."""
    cdef Py_ssize_t N = spins.shape[0]
    cdef Py_ssize_t ell = partner.shape[0]
    cdef Py_ssize_t n_sweeps = u_spin.shape[0] // N
    cdef cnp.ndarray[cnp.int64_t, ndim=1] S_out = np.empty(n_sweeps, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] codes = np.zeros(n_sweeps if record_codes else 0, dtype=np.int64)
    cdef long long S = 0
    cdef long long isum, accepted = 0
    cdef Py_ssize_t i, hs, t, k = 0, ks = 0, s
    cdef long long h1, p1, h2, p2, e1, e2, other
    cdef int old, new_e
    cdef signed char new
    cdef double h, pplus
    for i in range(N):
        S += spins[i]
    with nogil:
        for t in range(n_sweeps):
            for i in range(N):
                isum = 0
                for hs in range(vptr[i], vptr[i + 1]):
                    other = owner[partner[hs]]
                    if other != i:
                        isum += spins[other]
                h = B + beta * isum
                pplus = 1.0 / (1.0 + exp(-2.0 * h))
                new = 1 if u_spin[k] < pplus else -1
                k += 1
                if new != spins[i]:
                    spins[i] = new
                    S += 2 * new
            for s in range(n_switch):
                h1 = <long long>(u_switch[ks] * ell)
                p1 = partner[h1]
                h2 = <long long>(u_switch[ks + 1] * (ell - 2))
                e1 = h1 if h1 < p1 else p1
                e2 = p1 if h1 < p1 else h1
                if h2 >= e1:
                    h2 += 1
                if h2 >= e2:
                    h2 += 1
                p2 = partner[h2]
                old = (spins[owner[h1]] * spins[owner[p1]] + spins[owner[h2]] * spins[owner[p2]])
                if u_switch[ks + 2] < 0.5:
                    new_e = spins[owner[h1]] * spins[owner[h2]] + spins[owner[p1]] * spins[owner[p2]]
                else:
                    new_e = spins[owner[h1]] * spins[owner[p2]] + spins[owner[h2]] * spins[owner[p1]]
                if u_switch[ks + 3] < exp(beta * (new_e - old)):
                    accepted += 1
                    if u_switch[ks + 2] < 0.5:
                        partner[h1] = h2
                        partner[h2] = h1
                        partner[p1] = p2
                        partner[p2] = p1
                    else:
                        partner[h1] = p2
                        partner[p2] = h1
                        partner[h2] = p1
                        partner[p1] = h2
                ks += 4
            S_out[t] = S
            if record_codes:
                codes[t] = _code(spins, N)
    return S_out, codes, accepted
