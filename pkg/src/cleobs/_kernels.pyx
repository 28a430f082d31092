# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, tan, fmin

cnp.import_array()

cdef double TWO_PI = 6.283185307179586
cdef double PI = 3.141592653589793

RUNNING, EXIT_LOWER, EXIT_UPPER = 0, 1, 2


def series_eval(poles, coefs, s):
    cdef cnp.ndarray[double, ndim=1] p = np.ascontiguousarray(poles, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    s_arr = np.ascontiguousarray(s, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] x = s_arr.ravel()
    cdef Py_ssize_t n = x.shape[0], K = p.shape[0], i, k
    cdef cnp.ndarray[double, ndim=1] dens = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] ccdf = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] tc = c / (-p)
    cdef double e, acc_d, acc_c, si
    with nogil:
        for i in range(n):
            si = x[i]
            acc_d = 0.0
            acc_c = 0.0
            for k in range(K):
                e = exp(si * p[k])
                acc_d += e * c[k]
                acc_c += e * tc[k]
            dens[i] = acc_d
            ccdf[i] = acc_c
    return dens.reshape(s_arr.shape), ccdf.reshape(s_arr.shape)


def cascade_counts(increments, counts, levels):
    cdef cnp.ndarray[double, ndim=1] inc = np.ascontiguousarray(increments, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] lev = np.ascontiguousarray(levels, dtype=np.float64)
    cdef Py_ssize_t n = cnt.shape[0], L = lev.shape[0], i, j, k, pos = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ell = np.zeros((n, L), dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] total = np.zeros(n)
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(cnt[i]):
                acc += inc[pos]
                pos += 1
                for j in range(L):
                    if acc <= lev[j]:
                        ell[i, j] += 1
            total[i] = acc
    return ell, total


def passage_block(double[::1] psi, double[::1] tau, signed char[::1] status,
                  double[:, ::1] normals, double kappa, double dt, double length_scale,
                  double delta, int max_halvings):
    cdef Py_ssize_t n = normals.shape[0], block = normals.shape[1], i, j
    cdef double half_drift = 0.5 * (kappa - 4.0)
    cdef double log_coef = (kappa - 4.0) / (2.0 * kappa)
    cdef double ds = kappa * dt / (length_scale * length_scale)
    cdef double sds = sqrt(ds)
    cdef double upper = TWO_PI - delta
    cdef double p, dist, h, drift, z, new, sgn
    cdef int m
    with nogil:
        for i in range(n):
            if status[i] != 0:
                continue
            p = psi[i]
            for j in range(block):
                z = normals[i, j]
                if p < PI:
                    dist = p
                    sgn = 1.0
                else:
                    dist = TWO_PI - p
                    sgn = -1.0
                if dist < length_scale:
                    h = ds * dist * dist / kappa
                    drift = log_coef * dist / tan(0.5 * dist) - 0.5
                    dist = exp(log(dist) + drift * ds + sgn * sds * z)
                    new = dist if sgn > 0 else TWO_PI - dist
                else:
                    h = dt
                    drift = half_drift / tan(0.5 * p)
                    new = p + drift * h + sqrt(kappa * h) * z
                    m = 0
                    while m < max_halvings and (new < -delta or new > TWO_PI + delta):
                        h = 0.5 * h
                        new = p + drift * h + sqrt(kappa * h) * z
                        m += 1
                p = new
                tau[i] += h
                if new <= delta:
                    status[i] = 1
                    break
                if new >= upper:
                    status[i] = 2
                    break
            psi[i] = p
