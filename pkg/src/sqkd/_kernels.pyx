# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled round kernel; mirrors ``_kernels_py`` operation for operation."""
import numpy as np
cimport cython
cimport numpy as cnp
from libc.math cimport sqrt

cdef double PROB_FLOOR = 1e-14


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _sample(double* probs, int k, double u) nogil:
    cdef double total = 0.0, acc = 0.0, target
    cdef int j, last = -1
    for j in range(k):
        if probs[j] >= PROB_FLOOR:
            total += probs[j]
    if total <= 0.0:
        return -1
    target = u * total
    for j in range(k):
        if probs[j] < PROB_FLOOR:
            continue
        acc += probs[j]
        last = j
        if target < acc:
            return j
    return last


def sample_index(probs, double u):
    cdef double buf[64]
    cdef int k = len(probs), j
    if k > 64:
        raise ValueError("at most 64 outcomes")
    for j in range(k):
        buf[j] = probs[j]
    return _sample(buf, k, u)


cdef int _measure(double complex[:] psi, const double complex[:, :] basis, int d,
                  double u, double complex[:] rest, double* prob) nogil:
    """Sample a photon-slot measurement; write the probe component to ``rest``."""
    cdef double probs[4]
    cdef int k, r, j
    cdef double complex c
    for k in range(4):
        probs[k] = 0.0
        for j in range(d):
            c = 0
            for r in range(4):
                c = c + basis[r, k].conjugate() * psi[r * d + j]
            probs[k] += _abs2(c)
    k = _sample(probs, 4, u)
    if k < 0:
        return -1
    for j in range(d):
        c = 0
        for r in range(4):
            c = c + basis[r, k].conjugate() * psi[r * d + j]
        rest[j] = c
    prob[0] = probs[k]
    return k


cdef void _matvec(const double complex[:, :] u, double complex[:] x,
                  double complex[:] out, int n) nogil:
    cdef int i, j
    cdef double complex s
    for i in range(n):
        s = 0
        for j in range(n):
            s = s + u[i, j] * x[j]
        out[i] = s
    for i in range(n):
        x[i] = out[i]


def run_rounds(const double complex[:, :, :] bases, const cnp.int64_t[:] basis_idx,
               const cnp.int64_t[:] labels, const unsigned char[:] sift,
               const double[:, :] uniforms, const double complex[:, :] fwd,
               const double complex[:, :] bwd, const double complex[:] probe0,
               int intercept):
    cdef Py_ssize_t n = basis_idx.shape[0], i
    cdef int d = probe0.shape[0], D = 4 * d
    cdef int r, j, k, m, a, b
    cdef double p
    cdef double complex ov
    bob_arr = np.full(n, -1, dtype=np.int64)
    alice_arr = np.empty(n, dtype=np.int64)
    fid_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[:] bob = bob_arr
    cdef cnp.int64_t[:] alice = alice_arr
    cdef double[:] fid = fid_arr
    cdef double complex[:] psi = np.empty(D, dtype=np.complex128)
    cdef double complex[:] tmp = np.empty(D, dtype=np.complex128)
    cdef double complex[:] rest = np.empty(d, dtype=np.complex128)
    cdef bint degenerate = False
    with nogil:
        for i in range(n):
            b = <int>basis_idx[i]
            for r in range(4):
                for j in range(d):
                    psi[r * d + j] = bases[b, r, labels[i]] * probe0[j]
            if intercept >= 0:
                k = _measure(psi, bases[intercept], d, uniforms[i, 0], rest, &p)
                if k < 0:
                    degenerate = True
                    break
                for r in range(4):
                    for j in range(d):
                        psi[r * d + j] = bases[intercept, r, k] if j == k else 0
            else:
                _matvec(fwd, psi, tmp, D)
            if sift[i]:
                m = _measure(psi, bases[0], d, uniforms[i, 1], rest, &p)
                if m < 0:
                    degenerate = True
                    break
                bob[i] = m
                for r in range(4):
                    for j in range(d):
                        psi[r * d + j] = bases[0, r, m] * rest[j] / sqrt(p)
                b = 0
            _matvec(bwd, psi, tmp, D)
            a = _measure(psi, bases[b], d, uniforms[i, 2], rest, &p)
            if a < 0:
                degenerate = True
                break
            alice[i] = a
            ov = 0
            for j in range(d):
                ov = ov + probe0[j].conjugate() * rest[j]
            fid[i] = _abs2(ov) / p
    if degenerate:
        raise ArithmeticError("degenerate state in round kernel")
    return bob_arr, alice_arr, fid_arr
