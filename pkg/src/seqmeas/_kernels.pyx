# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_fallback.py``.

The loops release the GIL so a thread pool can run several rows of a sweep
concurrently.
"""
import numpy as np

from libc.math cimport exp, log, floor


def row_functionals(a, orders):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(orders, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], n = av.shape[1], nq = qv.shape[0]
    out = np.zeros((m, nq), dtype=np.float64)
    cdef double[:, ::1] ov = out
    # positive entries of the current row and their logs, compacted
    cdef double[::1] vals = np.empty(n, dtype=np.float64)
    cdef double[::1] logs = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j, k, cnt
    cdef double q, s
    with nogil:
        for i in range(m):
            cnt = 0
            for j in range(n):
                if av[i, j] > 0.0:
                    vals[cnt] = av[i, j]
                    logs[cnt] = log(av[i, j])
                    cnt += 1
            for k in range(nq):
                q = qv[k]
                s = 0.0
                if q == 1.0:
                    for j in range(cnt):
                        s -= vals[j] * logs[j]
                elif q == 2.0:
                    for j in range(cnt):
                        s += vals[j] * vals[j]
                else:
                    for j in range(cnt):
                        s += exp(q * logs[j])
                ov[i, k] = s
    return out


def convolve_rows(a, taps):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(taps, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], n = av.shape[1], nt = tv.shape[0]
    cdef Py_ssize_t c = nt // 2
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t, shift, j_lo, j_hi
    cdef double w
    with nogil:
        for i in range(m):
            # one contiguous axpy per tap: out[j] += taps[t] * a[j + c - t]
            for t in range(nt):
                w = tv[t]
                shift = c - t
                j_lo = -shift if shift < 0 else 0
                j_hi = n - shift if shift > 0 else n
                for j in range(j_lo, j_hi):
                    ov[i, j] += w * av[i, j + shift]
    return out


def bin_rows(a, positions):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(positions, dtype=np.float64)
    cdef Py_ssize_t m = av.shape[0], n = av.shape[1], nb = pv.shape[0]
    out = np.zeros((m, nb - 1), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, b, j, idx
    cdef double cum, prev, here, frac
    with nogil:
        for i in range(m):
            cum = 0.0
            j = 0
            prev = 0.0
            for b in range(nb):
                idx = <Py_ssize_t>floor(pv[b])
                if idx > n - 1:
                    idx = n - 1
                while j < idx:
                    cum += av[i, j]
                    j += 1
                frac = pv[b] - idx
                here = cum + frac * av[i, idx]
                if b > 0:
                    ov[i, b - 1] = here - prev
                prev = here
    return out


def toeplitz_scale(rho, c):
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    cdef Py_ssize_t n = rho.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    # interleaved (re, im) views; plain real arithmetic avoids the C99 complex
    # multiply and its NaN/inf recovery path
    cdef const double[:, ::1] rv = rho.view(np.float64)
    cdef const double[::1] cv = c.view(np.float64)
    cdef double[:, ::1] ov = out.view(np.float64)
    cdef Py_ssize_t j, k, ci
    cdef double ar, ai, br, bi
    with nogil:
        for j in range(n):
            for k in range(n):
                ci = 2 * (j - k + n - 1)
                ar = rv[j, 2 * k]
                ai = rv[j, 2 * k + 1]
                br = cv[ci]
                bi = cv[ci + 1]
                ov[j, 2 * k] = ar * br - ai * bi
                ov[j, 2 * k + 1] = ar * bi + ai * br
    return out
