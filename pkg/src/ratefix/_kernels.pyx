# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled iteration kernels; see ratefix._pykernels for the reference versions.

Aggregation runs over cells in row-major order so results are reproducible
run to run.
"""

import numpy as np

from libc.math cimport fabs

from ratefix.errors import ZeroExposure

cdef enum:
    INITIAL_CAPACITY = 256


cdef void _adjusted(const double[::1] e, const Py_ssize_t[::1] dims,
                    const Py_ssize_t[::1] offsets, const double[::1] f,
                    double[::1] out, Py_ssize_t[::1] idx) noexcept nogil:
    cdef Py_ssize_t ndim = dims.shape[0]
    cdef Py_ssize_t ncell = e.shape[0]
    cdef Py_ssize_t c, t, u, k
    cdef double val, prod
    for k in range(out.shape[0]):
        out[k] = 0.0
    for k in range(ndim):
        idx[k] = 0
    for c in range(ncell):
        val = e[c]
        if val != 0.0:
            for t in range(ndim):
                prod = val
                for u in range(ndim):
                    if u != t:
                        prod = prod * f[offsets[u] + idx[u]]
                out[offsets[t] + idx[t]] += prod
        k = ndim - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < dims[k]:
                break
            idx[k] = 0
            k -= 1


cdef int _phi(const Py_ssize_t[::1] dims, const Py_ssize_t[::1] offsets,
              const double[::1] losses, const double[::1] adj,
              double[::1] out) noexcept nogil:
    cdef Py_ssize_t t, s, a
    cdef double l1, e1
    for t in range(dims.shape[0]):
        a = offsets[t]
        for s in range(dims[t]):
            if adj[a + s] == 0.0:
                return 1
        l1 = losses[a]
        e1 = adj[a]
        out[a] = 1.0
        for s in range(1, dims[t]):
            out[a + s] = (losses[a + s] / l1) * (e1 / adj[a + s])
    return 0


cdef double _residual(const double[::1] new, const double[::1] old, bint norm_inf) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0, d
    for k in range(new.shape[0]):
        d = fabs(new[k] - old[k])
        if norm_inf:
            if d > acc:
                acc = d
        else:
            acc += d
    return acc


def adjusted_exposures(const double[::1] e, const Py_ssize_t[::1] dims,
                       const Py_ssize_t[::1] offsets, const double[::1] f):
    out = np.empty(offsets[offsets.shape[0] - 1] + dims[dims.shape[0] - 1])
    idx = np.empty(dims.shape[0], dtype=np.intp)
    _adjusted(e, dims, offsets, f, out, idx)
    return out


def phi(const double[::1] e, const Py_ssize_t[::1] dims,
        const Py_ssize_t[::1] offsets, const double[::1] losses,
        const double[::1] f):
    adj = adjusted_exposures(e, dims, offsets, f)
    out = np.empty_like(adj)
    if _phi(dims, offsets, losses, adj, out):
        raise ZeroExposure("adjusted exposure is zero for at least one slice")
    return out


def rating_iterate(const double[::1] e, const Py_ssize_t[::1] dims,
                   const Py_ssize_t[::1] offsets, const double[::1] losses,
                   f0, double tol, Py_ssize_t max_iters, bint norm_inf):
    cdef Py_ssize_t d = f0.shape[0]
    cdef Py_ssize_t capacity = min(max_iters, INITIAL_CAPACITY) + 1
    cdef Py_ssize_t t = 0
    cdef int status = 0
    cdef double res
    cdef bint converged = False
    cdef double[:, ::1] it
    cdef double[::1] rs
    cdef double[::1] adj = np.empty(d)
    cdef Py_ssize_t[::1] idx = np.empty(dims.shape[0], dtype=np.intp)

    iterates = np.empty((capacity, d))
    residuals = np.empty(capacity - 1)
    iterates[0] = f0
    it = iterates
    rs = residuals
    while t < max_iters:
        if t + 1 >= capacity:
            capacity = min(2 * capacity, max_iters + 1)
            iterates = np.resize(iterates, (capacity, d))
            residuals = np.resize(residuals, capacity - 1)
            it = iterates
            rs = residuals
        with nogil:
            _adjusted(e, dims, offsets, it[t], adj, idx)
            status = _phi(dims, offsets, losses, adj, it[t + 1])
            if status == 0:
                res = _residual(it[t + 1], it[t], norm_inf)
                rs[t] = res
        if status:
            raise ZeroExposure("adjusted exposure is zero for at least one slice")
        t += 1
        if res <= tol:
            converged = True
            break
    return iterates[:t + 1].copy(), residuals[:t].copy(), converged


cdef void _bh(const double[::1] b, const double[:, ::1] C,
              const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, d = b.shape[0]
    cdef double den
    for i in range(d):
        den = 0.0
        for j in range(d):
            den += C[i, j] * x[j]
        out[i] = b[i] * x[i] / (1.0 + den)


def bh_map(const double[::1] b, const double[:, ::1] C, const double[::1] x):
    out = np.empty(b.shape[0])
    _bh(b, C, x, out)
    return out


def lg_iterate(const double[::1] b, const double[:, ::1] C, x0, double tol,
               Py_ssize_t max_iters, bint norm_inf):
    cdef Py_ssize_t d = x0.shape[0]
    cdef Py_ssize_t capacity = min(max_iters, INITIAL_CAPACITY) + 1
    cdef Py_ssize_t t = 0
    cdef double res
    cdef bint converged = False
    cdef double[:, ::1] it
    cdef double[::1] rs

    iterates = np.empty((capacity, d))
    residuals = np.empty(capacity - 1)
    iterates[0] = x0
    it = iterates
    rs = residuals
    while t < max_iters:
        if t + 1 >= capacity:
            capacity = min(2 * capacity, max_iters + 1)
            iterates = np.resize(iterates, (capacity, d))
            residuals = np.resize(residuals, capacity - 1)
            it = iterates
            rs = residuals
        with nogil:
            _bh(b, C, it[t], it[t + 1])
            res = _residual(it[t + 1], it[t], norm_inf)
            rs[t] = res
        t += 1
        if res <= tol:
            converged = True
            break
    return iterates[:t + 1].copy(), residuals[:t].copy(), converged
