"""Pure-Python round kernel, used when the compiled extension is unavailable.

Semantics must match ``_kernels.pyx`` exactly: same floor on negligible
probabilities, same inverse-CDF sampling, same uniform consumption.
"""
from __future__ import annotations

import math

import numpy as np

PROB_FLOOR = 1e-14


def sample_index(probs, u):
    """Inverse-CDF draw from ``probs`` using uniform ``u`` in [0, 1).

    Probabilities below ``PROB_FLOOR`` are treated as zero. Returns -1 if
    nothing is left.
    """
    total = 0.0
    for p in probs:
        if p >= PROB_FLOOR:
            total += p
    if total <= 0.0:
        return -1
    target = u * total
    acc = 0.0
    last = -1
    for k, p in enumerate(probs):
        if p < PROB_FLOOR:
            continue
        acc += p
        last = k
        if target < acc:
            return k
    return last


def _measure(mat, basis, u):
    comps = basis.conj().T @ mat
    probs = (comps.real ** 2 + comps.imag ** 2).sum(axis=1)
    k = sample_index(probs.tolist(), u)
    if k < 0:
        raise ArithmeticError("degenerate state in round kernel")
    return k, probs[k], comps[k]


def run_rounds(bases, basis_idx, labels, sift, uniforms, fwd, bwd, probe0, intercept):
    n = len(basis_idx)
    d = probe0.shape[0]
    bob = np.full(n, -1, dtype=np.int64)
    alice = np.empty(n, dtype=np.int64)
    fid = np.empty(n, dtype=np.float64)
    zz = bases[0]
    for i in range(n):
        basis = bases[basis_idx[i]]
        psi = np.kron(basis[:, labels[i]], probe0)
        if intercept >= 0:
            k, _, _ = _measure(psi.reshape(4, d), bases[intercept], uniforms[i, 0])
            record = np.zeros(d, dtype=complex)
            record[k] = 1.0
            psi = np.kron(bases[intercept][:, k], record)
        else:
            psi = fwd @ psi
        if sift[i]:
            m, p, rest = _measure(psi.reshape(4, d), zz, uniforms[i, 1])
            bob[i] = m
            psi = np.kron(zz[:, m], rest / math.sqrt(p))
            basis = zz
        psi = bwd @ psi
        a, p, rest = _measure(psi.reshape(4, d), basis, uniforms[i, 2])
        alice[i] = a
        ov = np.vdot(probe0, rest)
        fid[i] = (ov.real ** 2 + ov.imag ** 2) / p
    return bob, alice, fid
