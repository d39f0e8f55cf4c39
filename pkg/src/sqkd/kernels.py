"""Backend selection for the per-round simulation kernel.

The compiled extension ``sqkd._kernels`` is used when it was built; otherwise
the numpy implementation in ``sqkd._kernels_py`` is loaded. Set
``SQKD_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("SQKD_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def available_backends():
    return ("cython", "python") if _compiled is not None else ("python",)


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def sample_index(probs, u):
    return _impl.sample_index(probs, u)


def run_rounds(bases, basis_idx, labels, sift, uniforms, fwd, bwd, probe0,
               intercept=-1, backend=None):
    """Evolve a batch of independent rounds.

    Each round prepares ``bases[basis_idx[i]][:, labels[i]]`` tensored with
    ``probe0``, applies the forward attack (or an intercept-resend
    measurement when ``intercept >= 0``), lets Bob SIFT in the Z_p x Z_s basis
    when ``sift[i]``, applies the backward attack and measures Alice's
    return. ``uniforms[i]`` holds the (eve, bob, alice) draws.

    Returns ``(bob_labels, alice_labels, probe_fidelity)``; Bob's label is -1
    for CTRL rounds.
    """
    impl = get_backend(backend)
    return impl.run_rounds(
        np.ascontiguousarray(bases, dtype=np.complex128),
        np.ascontiguousarray(basis_idx, dtype=np.int64),
        np.ascontiguousarray(labels, dtype=np.int64),
        np.ascontiguousarray(sift, dtype=np.uint8),
        np.ascontiguousarray(uniforms, dtype=np.float64),
        np.ascontiguousarray(fwd, dtype=np.complex128),
        np.ascontiguousarray(bwd, dtype=np.complex128),
        np.ascontiguousarray(probe0, dtype=np.complex128),
        int(intercept),
    )
