"""Exact state-vector mechanics for a photon carrying polarization and spatial mode.

The photon lives in a 4-dimensional space with amplitude ordering
``[Hb1, Hb2, Vb1, Vb2]`` (polarization-major). Joint systems put the photon
first and any probe subsystems after it; ``StateVector.dims`` records the
subsystem split so that measurements and partial traces can address a slot.

Density matrices and unitaries are plain ``numpy`` arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateState, DimensionMismatch, InvalidDistribution
from .kernels import sample_index

NORM_TOL = 1e-10
METRIC_TOL = 1e-9
ENTROPY_CLAMP = 1e-12
DEGENERATE_TOL = 1e-12

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_Z = np.eye(2, dtype=complex)
_X = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) * _SQRT_HALF

_POL_NAMES = {"Z": ("H", "V"), "X": ("R", "A")}
_SPAT_NAMES = {"Z": ("b1", "b2"), "X": ("s", "a")}


class ProductBasis(enum.Enum):
    """One of the four product measuring bases, ``pol (x) spat``."""

    ZZ = ("Z", "Z")
    ZX = ("Z", "X")
    XZ = ("X", "Z")
    XX = ("X", "X")

    @property
    def pol(self) -> str:
        return self.value[0]

    @property
    def spat(self) -> str:
        return self.value[1]

    @property
    def index(self) -> int:
        return _BASIS_ORDER.index(self)

    @property
    def short(self) -> str:
        return f"{self.pol}p{self.spat}s"

    @classmethod
    def parse(cls, text: str) -> "ProductBasis":
        key = text.replace("p", "").replace("s", "").replace("_", "").replace("*", "")
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown basis {text!r}") from None

    def label_name(self, label: int) -> str:
        """Human-readable name of basis state ``label``, e.g. ``'Ra'``."""
        return _POL_NAMES[self.pol][label // 2] + _SPAT_NAMES[self.spat][label % 2]

    def matrix(self) -> np.ndarray:
        """4x4 matrix whose columns are the basis vectors."""
        return _BASIS_MATRICES[self.index]


_BASIS_ORDER = (ProductBasis.ZZ, ProductBasis.ZX, ProductBasis.XZ, ProductBasis.XX)


def _build_basis(basis: ProductBasis) -> np.ndarray:
    pol = _Z if basis.pol == "Z" else _X
    spat = _Z if basis.spat == "Z" else _X
    return np.kron(pol, spat)


_BASIS_MATRICES = np.stack([_build_basis(b) for b in _BASIS_ORDER])
_BASIS_MATRICES.setflags(write=False)


def all_bases() -> tuple[ProductBasis, ...]:
    return _BASIS_ORDER


def basis_stack() -> np.ndarray:
    """All four basis matrices stacked in ``ProductBasis.index`` order."""
    return _BASIS_MATRICES


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state, optionally split into subsystems.

    ``dims`` lists subsystem dimensions in order (photon first). A bare
    photon has ``dims == (4,)``.
    """

    amps: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionMismatch(f"invalid subsystem dims {dims}")
        if math.prod(dims) != amps.size:
            raise DimensionMismatch(f"dims {dims} do not factor length {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, amps: Iterable[complex], dims: Sequence[int] | None = None,
           normalize: bool = False) -> "StateVector":
        arr = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps,
                         dtype=complex).reshape(-1)
        if normalize:
            arr = arr / np.linalg.norm(arr)
        return cls(arr, tuple(dims) if dims is not None else (arr.size,))

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def allclose(self, other: "StateVector", atol: float = NORM_TOL) -> bool:
        return self.dims == other.dims and np.allclose(self.amps, other.amps, atol=atol)

    def __repr__(self) -> str:
        return f"StateVector(dims={self.dims}, amps={np.round(self.amps, 6).tolist()})"


@dataclass(frozen=True)
class MeasurementResult:
    outcome: int
    probability: float
    post_state: StateVector


def basis_vectors(basis: ProductBasis) -> list[StateVector]:
    """The four orthonormal product vectors of ``basis`` in label order."""
    mat = basis.matrix()
    return [StateVector(mat[:, k], (4,)) for k in range(4)]


def basis_state(basis: ProductBasis, label: int) -> StateVector:
    return StateVector(basis.matrix()[:, label], (4,))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(np.kron(a.amps, b.amps), a.dims + b.dims)


def apply_unitary(unitary: np.ndarray, psi: StateVector) -> StateVector:
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (psi.dim, psi.dim):
        raise DimensionMismatch(f"unitary {u.shape} vs state dim {psi.dim}")
    return StateVector(u @ psi.amps, psi.dims)


def _slot_matrix(psi: StateVector, slot: int) -> np.ndarray:
    """Reshape ``psi`` to (dims[slot], rest) with the slot axis first."""
    if not 0 <= slot < len(psi.dims):
        raise DimensionMismatch(f"no subsystem {slot} in dims {psi.dims}")
    if psi.dims[slot] != 4:
        raise DimensionMismatch(f"subsystem {slot} has dim {psi.dims[slot]}, expected 4")
    tensor_form = psi.amps.reshape(psi.dims)
    return np.moveaxis(tensor_form, slot, 0).reshape(4, -1)


def _restore_slot(mat: np.ndarray, dims: tuple[int, ...], slot: int) -> np.ndarray:
    moved = (dims[slot],) + dims[:slot] + dims[slot + 1:]
    return np.moveaxis(mat.reshape(moved), 0, slot).reshape(-1)


def outcome_probabilities(psi: StateVector, basis: ProductBasis,
                          photon_slot: int = 0) -> np.ndarray:
    """Born-rule probabilities of the four ``basis`` outcomes on the photon slot."""
    comps = basis.matrix().conj().T @ _slot_matrix(psi, photon_slot)
    return np.sum(np.abs(comps) ** 2, axis=1)


def project(psi: StateVector, basis: ProductBasis, outcome: int,
            photon_slot: int = 0) -> tuple[float, StateVector | None]:
    """Probability of ``outcome`` and the renormalized post-measurement state.

    The post state is ``None`` when the outcome has probability below 1e-12.
    """
    mat = _slot_matrix(psi, photon_slot)
    vec = basis.matrix()[:, outcome]
    rest = vec.conj() @ mat
    prob = float(np.vdot(rest, rest).real)
    if prob < DEGENERATE_TOL:
        return prob, None
    collapsed = np.outer(vec, rest / math.sqrt(prob))
    return prob, StateVector(_restore_slot(collapsed, psi.dims, photon_slot), psi.dims)


def measure(psi: StateVector, basis: ProductBasis, rng: np.random.Generator,
            photon_slot: int = 0) -> MeasurementResult:
    """Sample a ``basis`` measurement of the photon slot and collapse ``psi``."""
    probs = outcome_probabilities(psi, basis, photon_slot)
    outcome = sample_index(probs, rng.random())
    if outcome < 0:
        raise DegenerateState("all outcome probabilities vanish")
    prob, post = project(psi, basis, outcome, photon_slot)
    if post is None:
        raise DegenerateState(f"outcome {outcome} sampled with weight {prob:.3e}")
    return MeasurementResult(outcome, prob, post)


def reduce_to_density(psi: StateVector, keep: Iterable[int]) -> np.ndarray:
    """Partial trace of ``|psi><psi|`` over every subsystem not in ``keep``."""
    keep = sorted(set(keep))
    n = len(psi.dims)
    if not keep or any(not 0 <= k < n for k in keep):
        raise DimensionMismatch(f"cannot keep {keep} of dims {psi.dims}")
    traced = [k for k in range(n) if k not in keep]
    t = np.transpose(psi.amps.reshape(psi.dims), keep + traced)
    dk = math.prod(psi.dims[k] for k in keep)
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def density(psi: StateVector) -> np.ndarray:
    return np.outer(psi.amps, psi.amps.conj())


def check_density(rho: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    """Validate and return ``rho`` as a complex density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``0.5 * sum |eig(rho - sigma)|``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    eig = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(min(1.0, 0.5 * np.abs(eig).sum()))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits; eigenvalues below 1e-12 count as zero."""
    eig = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    eig = eig[eig > ENTROPY_CLAMP]
    return float(-(eig * np.log2(eig)).sum()) + 0.0


def holevo(ensemble: Sequence[tuple[float, np.ndarray]]) -> float:
    """Holevo quantity ``S(sum p_i rho_i) - sum p_i S(rho_i)`` in bits."""
    if not ensemble:
        raise InvalidDistribution("empty ensemble")
    probs = np.array([p for p, _ in ensemble], dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > NORM_TOL:
        raise InvalidDistribution(f"probabilities {probs.tolist()} do not sum to 1")
    shapes = {np.shape(r) for _, r in ensemble}
    if len(shapes) != 1:
        raise DimensionMismatch(f"mixed state shapes {shapes}")
    avg = sum(p * np.asarray(r, dtype=complex) for p, r in ensemble)
    chi = von_neumann_entropy(avg) - sum(p * von_neumann_entropy(r) for p, r in ensemble)
    return max(0.0, chi)


def fidelity_with_pure(rho: np.ndarray, psi: StateVector) -> float:
    return float(np.vdot(psi.amps, np.asarray(rho) @ psi.amps).real)


def is_unitary(u: np.ndarray, tol: float = NORM_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return (u.ndim == 2 and u.shape[0] == u.shape[1]
            and np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, phases fixed."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng: np.random.Generator, dims: Sequence[int] | None = None) -> StateVector:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(z / np.linalg.norm(z), tuple(dims) if dims else (dim,))
