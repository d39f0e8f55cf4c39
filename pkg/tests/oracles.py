"""Brute-force reference computations that share no code with ``sqkd``.

Everything here is density-matrix based with explicitly built projectors and
hand-written single-DOF vectors, so it checks the state-vector paths from the
outside.
"""
import itertools
import math

import numpy as np

r2 = 1 / math.sqrt(2)
POL = {"Z": [np.array([1, 0]), np.array([0, 1])],           # H, V
       "X": [np.array([r2, r2]), np.array([r2, -r2])]}      # R, A
SPAT = {"Z": [np.array([1, 0]), np.array([0, 1])],          # b1, b2
        "X": [np.array([r2, r2]), np.array([r2, -r2])]}     # s, a
BASES = [("Z", "Z"), ("Z", "X"), ("X", "Z"), ("X", "X")]


def vec(basis, label):
    pol, spat = basis
    p, s = POL[pol][label // 2], SPAT[spat][label % 2]
    out = np.zeros(4, dtype=complex)
    for i, j in itertools.product(range(2), range(2)):
        out[2 * i + j] = p[i] * s[j]
    return out


def probs_direct(psi4, basis):
    """|<v_i|psi>|^2 for a bare photon state."""
    return [abs(sum(np.conj(vec(basis, k)[i]) * psi4[i] for i in range(4))) ** 2 for k in range(4)]


def projector(v, d):
    return np.kron(np.outer(v, np.conj(v)), np.eye(d))


def partial_trace_photon(rho, d):
    out = np.zeros((d, d), dtype=complex)
    for i in range(4):
        out += rho[i * d:(i + 1) * d, i * d:(i + 1) * d]
    return out


def _check_error(basis, label, bob, alice):
    if bob != alice:
        return True
    if basis[0] == "Z" and (bob >> 1) != (label >> 1):
        return True
    if basis[1] == "Z" and (bob & 1) != (label & 1):
        return True
    return False


def evolve_forward(rho, fwd, d, intercept=None):
    """Forward leg as a channel. ``intercept`` is a basis tuple for explicit
    measure-and-resend with a classical record in a 4-dim probe."""
    if intercept is None:
        return fwd @ rho @ fwd.conj().T
    out = np.zeros_like(rho)
    for k in range(4):
        p = np.trace(projector(vec(intercept, k), d) @ rho).real
        if p <= 0:
            continue
        record = np.zeros(d)
        record[k] = 1
        resent = np.kron(vec(intercept, k), record)
        out += p * np.outer(resent, resent.conj())
    return out


def detection_cell(fwd, bwd, probe0, basis, label, action, intercept=None):
    d = len(probe0)
    psi = np.kron(vec(basis, label), probe0)
    rho = evolve_forward(np.outer(psi, psi.conj()), fwd, d, intercept)
    if action == "CTRL":
        rho = bwd @ rho @ bwd.conj().T
        return 1.0 - np.trace(projector(vec(basis, label), d) @ rho).real
    err = 0.0
    zz = ("Z", "Z")
    for m in range(4):
        pm_op = projector(vec(zz, m), d)
        pm = np.trace(pm_op @ rho).real
        if pm < 1e-15:
            continue
        rho_m = pm_op @ rho @ pm_op / pm
        rho_m = bwd @ rho_m @ bwd.conj().T
        for a in range(4):
            qa = np.trace(projector(vec(zz, a), d) @ rho_m).real
            if _check_error(basis, label, m, a):
                err += pm * qa
    return err


def probe_state(fwd, bwd, probe0, label, action):
    d = len(probe0)
    psi = np.kron(vec(("Z", "Z"), label), probe0)
    rho = fwd @ np.outer(psi, psi.conj()) @ fwd.conj().T
    if action == "SIFT":
        rho = sum(projector(vec(("Z", "Z"), m), d) @ rho @ projector(vec(("Z", "Z"), m), d)
                  for m in range(4))
    return partial_trace_photon(bwd @ rho @ bwd.conj().T, d)


def dcnot_matrix():
    """Per-DOF CNOT from the truth table, photon bits (p, s) control probe bits."""
    u = np.zeros((16, 16))
    for pp, ps, ep, es in itertools.product(range(2), repeat=4):
        src = ((pp * 2 + ps) * 4) + ep * 2 + es
        dst = ((pp * 2 + ps) * 4) + (ep ^ pp) * 2 + (es ^ ps)
        u[dst, src] = 1
    return u
