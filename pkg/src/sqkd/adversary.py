"""Eavesdropper models acting on both legs of the two-way channel.

Every attack owns a private probe of dimension ``probe_dim`` and acts on the
joint space ``photon (x) probe`` (photon first, so joint dim = 4 * probe_dim).
Each model also exposes a unitary dilation (``forward_matrix`` and
``backward_matrix``) which the exact analysis uses. For intercept-resend the
dilation coherently copies the measured index into the probe. Tracing out the
photon then gives the same statistics as measuring and resending.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import AttackFileError, DimensionMismatch
from .quantum import (
    NORM_TOL,
    ProductBasis,
    StateVector,
    apply_unitary,
    basis_state,
    is_unitary,
    measure,
    project,
    reduce_to_density,
    tensor,
)

MAX_PROBE_DIM = 16
FILE_UNITARITY_TOL = 1e-8

CTRL = "CTRL"
SIFT = "SIFT"


def dcnot_unitary() -> np.ndarray:
    """CNOT on each degree of freedom, photon as control, 4-dim probe as target.

    Photon index ``i`` and probe index ``j`` both encode (pol bit, spatial bit),
    so the action is ``|i>|j> -> |i>|j XOR i>``.
    """
    u = np.zeros((16, 16), dtype=complex)
    for i in range(4):
        for j in range(4):
            u[4 * i + (j ^ i), 4 * i + j] = 1.0
    return u


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def controlled_rotation_unitary(theta_p: float, theta_s: float) -> np.ndarray:
    """Photon polarization rotates probe qubit 1; photon spatial mode rotates qubit 2."""
    u = np.zeros((16, 16), dtype=complex)
    eye = np.eye(2, dtype=complex)
    for pp in range(2):
        for ps in range(2):
            block = np.kron(_rotation(theta_p) if pp else eye, _rotation(theta_s) if ps else eye)
            i = 2 * pp + ps
            u[4 * i:4 * i + 4, 4 * i:4 * i + 4] = block
    return u


def copy_unitary(basis: ProductBasis) -> np.ndarray:
    """Coherent copy of the ``basis`` outcome index into a 4-dim probe."""
    b = np.kron(basis.matrix(), np.eye(4))
    return b @ dcnot_unitary() @ b.conj().T


class AttackModel:
    """An attack given by forward/backward unitaries on ``photon (x) probe``."""

    name = "unitary"
    intercept_basis: ProductBasis | None = None

    def __init__(self, forward: np.ndarray, backward: np.ndarray,
                 initial_probe: StateVector | None = None, *, name: str | None = None,
                 tol: float = NORM_TOL):
        forward = np.array(forward, dtype=complex)
        backward = np.array(backward, dtype=complex)
        if forward.shape != backward.shape or forward.ndim != 2 or forward.shape[0] != forward.shape[1]:
            raise DimensionMismatch(f"forward {forward.shape} and backward {backward.shape} must be equal squares")
        if forward.shape[0] % 4:
            raise DimensionMismatch(f"joint dim {forward.shape[0]} is not a multiple of 4")
        probe_dim = forward.shape[0] // 4
        if probe_dim > MAX_PROBE_DIM:
            raise DimensionMismatch(f"probe dim {probe_dim} exceeds cap {MAX_PROBE_DIM}")
        for label, u in (("forward", forward), ("backward", backward)):
            if not is_unitary(u, tol):
                raise ValueError(f"{label} map is not unitary")
        if initial_probe is None:
            e0 = np.zeros(probe_dim, dtype=complex)
            e0[0] = 1.0
            initial_probe = StateVector(e0, (probe_dim,))
        if initial_probe.dim != probe_dim:
            raise DimensionMismatch(f"initial probe dim {initial_probe.dim} != {probe_dim}")
        forward.setflags(write=False)
        backward.setflags(write=False)
        self.forward_matrix = forward
        self.backward_matrix = backward
        self.initial_probe = StateVector(initial_probe.amps, (probe_dim,))
        self.probe_dim = probe_dim
        if name is not None:
            self.name = name

    @property
    def joint_dim(self) -> int:
        return 4 * self.probe_dim

    def _check(self, joint: StateVector) -> None:
        if joint.dim != self.joint_dim:
            raise DimensionMismatch(f"joint dim {joint.dim} != {self.joint_dim}")

    def forward(self, joint: StateVector, rng: np.random.Generator | None = None) -> StateVector:
        self._check(joint)
        return apply_unitary(self.forward_matrix, joint)

    def backward(self, joint: StateVector, rng: np.random.Generator | None = None) -> StateVector:
        self._check(joint)
        return apply_unitary(self.backward_matrix, joint)

    def describe(self) -> dict:
        return {"name": self.name, "probe_dim": self.probe_dim}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class NoAttack(AttackModel):
    name = "none"

    def __init__(self):
        eye = np.eye(4, dtype=complex)
        super().__init__(eye, eye)


class DoubleCnotAttack(AttackModel):
    """Per-DOF CNOT on both legs with an ancilla prepared in ``|H>|b1>``."""

    name = "double-cnot"

    def __init__(self):
        u = dcnot_unitary()
        super().__init__(u, u, basis_state(ProductBasis.ZZ, 0))


class EntangleMeasureAttack(AttackModel):
    """Two-angle controlled-rotation probe coupling on the forward leg.

    At ``theta = pi/2`` the coupling on that degree of freedom is a CNOT, so
    the probe qubit ends up holding a copy of the photon's Z value.
    """

    name = "rotation"

    def __init__(self, theta_p: float = 0.0, theta_s: float = 0.0,
                 backward: np.ndarray | None = None):
        self.theta_p = float(theta_p)
        self.theta_s = float(theta_s)
        fwd = controlled_rotation_unitary(self.theta_p, self.theta_s)
        bwd = np.eye(16, dtype=complex) if backward is None else backward
        super().__init__(fwd, bwd)

    def describe(self) -> dict:
        return {**super().describe(), "theta_p": self.theta_p, "theta_s": self.theta_s}


class InterceptResendAttack(AttackModel):
    """Measure each forward photon in ``basis``, record the outcome, resend it."""

    name = "intercept-resend"

    def __init__(self, basis: ProductBasis = ProductBasis.ZZ):
        self.intercept_basis = basis
        super().__init__(copy_unitary(basis), np.eye(16, dtype=complex))

    def forward(self, joint: StateVector, rng: np.random.Generator | None = None) -> StateVector:
        self._check(joint)
        if rng is None:
            raise ValueError("intercept-resend needs a random stream")
        outcome = measure(joint, self.intercept_basis, rng).outcome
        record = np.zeros(4, dtype=complex)
        record[outcome] = 1.0
        return tensor(basis_state(self.intercept_basis, outcome), StateVector(record, (4,)))

    def describe(self) -> dict:
        return {**super().describe(), "basis": self.intercept_basis.short}


def attack_forward(attack: AttackModel, joint: StateVector,
                   rng: np.random.Generator | None = None) -> StateVector:
    return attack.forward(joint, rng)


def attack_backward(attack: AttackModel, joint: StateVector,
                    rng: np.random.Generator | None = None) -> StateVector:
    return attack.backward(joint, rng)


def initial_joint(attack: AttackModel, basis: ProductBasis, label: int) -> StateVector:
    return tensor(basis_state(basis, label), attack.initial_probe)


def final_probe_state(attack: AttackModel, basis: ProductBasis, label: int, action: str) -> np.ndarray:
    """Eve's reduced probe state at the end of one round, averaged over Bob's outcomes."""
    joint = apply_unitary(attack.forward_matrix, initial_joint(attack, basis, label))
    if action == CTRL:
        return reduce_to_density(apply_unitary(attack.backward_matrix, joint), [1])
    rho = np.zeros((attack.probe_dim, attack.probe_dim), dtype=complex)
    for m in range(4):
        prob, post = project(joint, ProductBasis.ZZ, m)
        if post is not None:
            rho += prob * reduce_to_density(apply_unitary(attack.backward_matrix, post), [1])
    return rho


def conditional_probe_states(attack: AttackModel, action: str = SIFT) -> dict[int, np.ndarray]:
    """Probe density matrix per Z_p x Z_s prepared label for one Bob action.

    With ``action=SIFT`` these are the probe states attached to key rounds.
    """
    return {label: final_probe_state(attack, ProductBasis.ZZ, label, action) for label in range(4)}


def _parse_matrix(raw, dim: int, what: str) -> np.ndarray:
    try:
        rows = [[complex(*e) if isinstance(e, (list, tuple)) else complex(e) for e in row] for row in raw]
        mat = np.array(rows, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise AttackFileError(f"{what}: cannot parse complex entries ({exc})") from None
    if mat.shape != (dim, dim):
        raise AttackFileError(f"{what}: expected {dim}x{dim} matrix, got {mat.shape}")
    return mat


def _check_file_unitary(mat: np.ndarray, what: str) -> None:
    dev = np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[i, j] > FILE_UNITARITY_TOL:
        raise AttackFileError(
            f"{what} is not unitary: |U^dag U - I| = {dev[i, j]:.3e} at entry ({i}, {j})"
        )


def load_attack_file(path: str | Path) -> AttackModel:
    """Load a user-supplied attack.

    Format: ``{"probe_dim": d, "forward": M, "backward": M, "initial_probe": v}``
    with row-major ``4d x 4d`` matrices whose entries are numbers or
    ``[re, im]`` pairs. ``backward`` defaults to identity and
    ``initial_probe`` to the first probe basis vector.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise AttackFileError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "forward" not in doc:
        raise AttackFileError(f"{path}: expected an object with a 'forward' matrix")
    probe_dim = doc.get("probe_dim")
    if not isinstance(probe_dim, int) or not 1 <= probe_dim <= MAX_PROBE_DIM:
        raise AttackFileError(f"{path}: probe_dim must be an integer in 1..{MAX_PROBE_DIM}")
    dim = 4 * probe_dim
    fwd = _parse_matrix(doc["forward"], dim, "forward")
    bwd = _parse_matrix(doc["backward"], dim, "backward") if "backward" in doc else np.eye(dim, dtype=complex)
    _check_file_unitary(fwd, "forward")
    _check_file_unitary(bwd, "backward")
    probe = None
    if "initial_probe" in doc:
        vec = [complex(*e) if isinstance(e, (list, tuple)) else complex(e) for e in doc["initial_probe"]]
        try:
            probe = StateVector(np.array(vec), (probe_dim,))
        except ValueError as exc:
            raise AttackFileError(f"initial_probe: {exc}") from None
    # Re-orthonormalize within file tolerance so downstream 1e-10 checks hold.
    fwd, bwd = _polar(fwd), _polar(bwd)
    return AttackModel(fwd, bwd, probe, name=f"file:{path.name}")


def _polar(mat: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(mat)
    return u @ vh


def save_attack_file(attack: AttackModel, path: str | Path) -> None:
    def enc(m):
        return [[[z.real, z.imag] for z in row] for row in np.asarray(m)]

    doc = {
        "probe_dim": attack.probe_dim,
        "forward": enc(attack.forward_matrix),
        "backward": enc(attack.backward_matrix),
        "initial_probe": [[z.real, z.imag] for z in attack.initial_probe.amps],
    }
    Path(path).write_text(json.dumps(doc))


ATTACK_NAMES = ("none", "double-cnot", "rotation", "intercept-resend")


def make_attack(spec: str, theta_p: float = 0.0, theta_s: float = 0.0,
                basis: ProductBasis = ProductBasis.ZZ) -> AttackModel:
    """Build an attack from a CLI-style name or ``file:PATH``."""
    if spec.startswith("file:"):
        return load_attack_file(spec[5:])
    if spec == "none":
        return NoAttack()
    if spec == "double-cnot":
        return DoubleCnotAttack()
    if spec == "rotation":
        return EntangleMeasureAttack(theta_p, theta_s)
    if spec == "intercept-resend":
        return InterceptResendAttack(basis)
    raise ValueError(f"unknown attack {spec!r}; choose from {', '.join(ATTACK_NAMES)} or file:PATH")
