"""Exact detection probabilities, robustness verification and efficiency accounting."""
from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .adversary import (
    CTRL,
    SIFT,
    AttackModel,
    EntangleMeasureAttack,
    conditional_probe_states,
    initial_joint,
)
from .protocol import CHECKED_GROUPS, PREP_COEFFICIENTS, CheckGroup
from .quantum import (
    ProductBasis,
    all_bases,
    apply_unitary,
    holevo,
    outcome_probabilities,
    project,
    random_unitary,
    trace_distance,
)

ACTIONS = (CTRL, SIFT)
DEFAULT_TOL_DETECT = 1e-9
DEFAULT_TOL_INFO = 1e-6

Cell = tuple[ProductBasis, int, str]


def cell_detection(attack: AttackModel, basis: ProductBasis, label: int, action: str) -> float:
    """Probability that the check for this round flags an error."""
    joint = apply_unitary(attack.forward_matrix, initial_joint(attack, basis, label))
    if action == CTRL:
        probs = outcome_probabilities(apply_unitary(attack.backward_matrix, joint), basis)
        return float(sum(p for k, p in enumerate(probs) if k != label))
    total = 0.0
    for m in range(4):
        prob, post = project(joint, ProductBasis.ZZ, m)
        if post is None:
            continue
        if (basis.pol == "Z" and m // 2 != label // 2) or (basis.spat == "Z" and m % 2 != label % 2):
            total += prob
            continue
        probs = outcome_probabilities(apply_unitary(attack.backward_matrix, post), ProductBasis.ZZ)
        total += prob * float(sum(p for a, p in enumerate(probs) if a != m))
    return total


def _cell_group(basis: ProductBasis, action: str) -> CheckGroup:
    if action == CTRL:
        return CheckGroup.CTRL_CHECK
    return CheckGroup.ZZ_SIFT_CHECK if basis is ProductBasis.ZZ else CheckGroup.NONZZ_SIFT_CHECK


def _cell_weight(basis: ProductBasis, action: str) -> float:
    """Share of a cell within its check group's population of rounds."""
    if action == CTRL:
        total = sum(PREP_COEFFICIENTS.values())
        return float(PREP_COEFFICIENTS[basis] / total) / 4
    if basis is ProductBasis.ZZ:
        return 0.25
    return 1 / 12


@dataclass(frozen=True)
class DetectionProfile:
    cells: dict[Cell, float]

    @property
    def max_detection(self) -> float:
        return max(self.cells.values())

    @property
    def aggregate(self) -> dict[CheckGroup, float]:
        """Expected error rate per check group under the preparation mix."""
        out = {g: 0.0 for g in CHECKED_GROUPS}
        for (basis, _, action), p in self.cells.items():
            out[_cell_group(basis, action)] += _cell_weight(basis, action) * p
        return out

    def cell(self, basis: ProductBasis, label: int, action: str) -> float:
        return self.cells[(basis, label, action)]


def exact_detection(attack: AttackModel) -> DetectionProfile:
    """Error probability for all 16 prepared states x {CTRL, SIFT}, no sampling."""
    return DetectionProfile({
        (b, k, a): cell_detection(attack, b, k, a)
        for b in all_bases() for k in range(4) for a in ACTIONS
    })


@dataclass(frozen=True)
class ProbeInformation:
    holevo_bits: float
    max_trace_distance: float


def probe_information(attack: AttackModel) -> ProbeInformation:
    """Holevo quantity of the key-round probe ensemble and the largest pairwise
    trace distance among probe states over both Bob actions and all key labels."""
    sift = conditional_probe_states(attack, SIFT)
    ctrl = conditional_probe_states(attack, CTRL)
    states = list(sift.values()) + list(ctrl.values())
    td = max(trace_distance(a, b) for i, a in enumerate(states) for b in states[i + 1:])
    chi = holevo([(0.25, sift[k]) for k in range(4)])
    return ProbeInformation(chi, td)


CONSISTENT = "ConsistentWithTheorem1"
DETECTABLE = "Detectable"
VIOLATION = "VIOLATION"


@dataclass(frozen=True)
class RobustnessReport:
    max_detection: float
    max_pairwise_probe_trace_distance: float
    holevo_bits: float
    verdict: str
    tol_detect: float = DEFAULT_TOL_DETECT
    tol_info: float = DEFAULT_TOL_INFO

    def to_dict(self) -> dict:
        return {
            "max_detection": self.max_detection,
            "max_pairwise_probe_trace_distance": self.max_pairwise_probe_trace_distance,
            "holevo_bits": self.holevo_bits,
            "verdict": self.verdict,
            "tol_detect": self.tol_detect,
            "tol_info": self.tol_info,
        }


def theorem1_verify(attack: AttackModel, tol_detect: float = DEFAULT_TOL_DETECT,
                    tol_info: float = DEFAULT_TOL_INFO) -> RobustnessReport:
    """Check that an undetectable attack leaves the probe uninformative."""
    if tol_detect <= 0 or tol_info <= 0:
        raise ValueError("tolerances must be positive")
    detection = exact_detection(attack).max_detection
    info = probe_information(attack)
    if detection > tol_detect:
        verdict = DETECTABLE
    elif max(info.max_trace_distance, info.holevo_bits) <= tol_info:
        verdict = CONSISTENT
    else:
        verdict = VIOLATION
    return RobustnessReport(detection, info.max_trace_distance, info.holevo_bits, verdict,
                            tol_detect, tol_info)


# ------------------------------------------------------------ random attacks

RANDOM_KINDS = ("haar-identity", "haar-adjoint", "haar-pair", "controlled-undo", "probe-local")


def _controlled(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_k |k><k| (x) blocks[k]`` with ``k`` over the Z_p x Z_s labels."""
    d = blocks[0].shape[0]
    u = np.zeros((4 * d, 4 * d), dtype=complex)
    for k, w in enumerate(blocks):
        u[k * d:(k + 1) * d, k * d:(k + 1) * d] = w
    return u


def random_attack(kind: str, rng: np.random.Generator, probe_dim: int = 4) -> AttackModel:
    """Sample an attack pair of the given kind.

    ``haar-*`` kinds draw a Haar forward unitary and pair it with identity, its
    adjoint or an independent Haar backward. ``controlled-undo`` and
    ``probe-local`` are undetectable by construction.
    """
    dim = 4 * probe_dim
    if kind == "haar-identity":
        return AttackModel(random_unitary(dim, rng), np.eye(dim), name=kind)
    if kind == "haar-adjoint":
        u = random_unitary(dim, rng)
        return AttackModel(u, u.conj().T, name=kind)
    if kind == "haar-pair":
        return AttackModel(random_unitary(dim, rng), random_unitary(dim, rng), name=kind)
    if kind == "controlled-undo":
        ws = [random_unitary(probe_dim, rng) for _ in range(4)]
        v = random_unitary(probe_dim, rng)
        return AttackModel(_controlled(ws), _controlled([v @ w.conj().T for w in ws]), name=kind)
    if kind == "probe-local":
        eye = np.eye(4)
        return AttackModel(np.kron(eye, random_unitary(probe_dim, rng)),
                           np.kron(eye, random_unitary(probe_dim, rng)), name=kind)
    raise ValueError(f"unknown random attack kind {kind!r}")


def random_attack_suite(samples: int, seed: int, tol_detect: float = DEFAULT_TOL_DETECT,
                        tol_info: float = DEFAULT_TOL_INFO) -> list[tuple[str, RobustnessReport]]:
    """``theorem1_verify`` over ``samples`` seeded random attacks, cycling kinds."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(samples):
        kind = RANDOM_KINDS[i % len(RANDOM_KINDS)]
        out.append((kind, theorem1_verify(random_attack(kind, rng), tol_detect, tol_info)))
    return out


# ------------------------------------------------------------------- sweeps

def _rotation_pol(theta: float) -> AttackModel:
    return EntangleMeasureAttack(theta, 0.0)


def _rotation_spat(theta: float) -> AttackModel:
    return EntangleMeasureAttack(0.0, theta)


def _rotation_both(theta: float) -> AttackModel:
    return EntangleMeasureAttack(theta, theta)


@dataclass(frozen=True)
class AttackFamily:
    name: str
    build: Callable[[float], AttackModel]


FAMILIES = {
    "rotation-p": AttackFamily("rotation-p", _rotation_pol),
    "rotation-s": AttackFamily("rotation-s", _rotation_spat),
    "rotation-both": AttackFamily("rotation-both", _rotation_both),
}


@dataclass(frozen=True)
class SweepPoint:
    param: float
    detection: float
    holevo_bits: float
    trace_distance: float


def _sweep_point(family: AttackFamily, param: float) -> SweepPoint:
    attack = family.build(param)
    info = probe_information(attack)
    return SweepPoint(float(param), exact_detection(attack).max_detection, info.holevo_bits,
                      info.max_trace_distance)


def tradeoff_sweep(family: AttackFamily | str, grid: Sequence[float], jobs: int = 1) -> list[SweepPoint]:
    """Detection and probe information at each grid point, sorted by parameter."""
    if isinstance(family, str):
        family = FAMILIES[family]
    if not len(grid):
        raise ValueError("grid must be non-empty")
    params = sorted(float(g) for g in grid)
    worker = functools.partial(_sweep_point, family)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, params))
    return [worker(p) for p in params]


# --------------------------------------------------------------- efficiency

@dataclass(frozen=True)
class EfficiencyReport:
    """One row of the efficiency comparison.

    ``qubit_coefficient`` is the number of consumed qubits per ``n(1+delta)``;
    for two-DOF protocols each photon counts as two qubits.
    """

    protocol: str
    description: str
    b_k: str
    b_q: str
    b_q_terms: str
    qubit_terms: str
    qubit_coefficient: Fraction
    b_c: int
    c_q: int
    initial_state_kinds: str
    needs_quantum_memory: str
    double_cnot_vulnerable: str

    def eta(self, delta: float = 0.0) -> float:
        """Efficiency in percent, ``n / (qubits + b_c)``; ``delta -> 0`` by default."""
        return 100.0 / (float(self.qubit_coefficient) * (1.0 + delta))

    @property
    def eta_percent(self) -> float:
        return round(self.eta(), 2)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "description": self.description,
            "b_k": self.b_k,
            "b_q": self.b_q,
            "b_q_terms": self.b_q_terms,
            "qubits": self.qubit_terms,
            "qubit_coefficient": str(self.qubit_coefficient),
            "b_c": self.b_c,
            "eta_percent": self.eta_percent,
            "eta_exact": str(Fraction(1) / self.qubit_coefficient),
            "c_q": self.c_q,
            "initial_state_kinds": self.initial_state_kinds,
            "needs_quantum_memory_or_unitary": self.needs_quantum_memory,
            "double_cnot_vulnerable": self.double_cnot_vulnerable,
        }


def _fmt(x: Fraction) -> str:
    return str(int(x)) if x.denominator == 1 else str(float(x))


def efficiency_table() -> list[EfficiencyReport]:
    """Accounting rows for the single-DOF reference, the earlier two-DOF scheme
    and this protocol."""
    alice = {b: Fraction(str(c)) for b, c in PREP_COEFFICIENTS.items()}
    alice_total = sum(alice.values())
    bob_resend = alice_total / 2
    photons = alice_total + bob_resend
    zz = alice[ProductBasis.ZZ]
    others = [alice[b] for b in all_bases() if b is not ProductBasis.ZZ]
    assert len(set(others)) == 1
    terms = (f"{_fmt(zz)}n(1+δ) + {_fmt(others[0])}n(1+δ)×{len(others)} + "
             f"{_fmt(bob_resend)}n(1+δ)")
    return [
        EfficiencyReport(
            "Ref.[2]", "single-DOF SQKD with classical Bob (Boyer-Kenigsberg-Mor)",
            "n", "12n(1+δ)", "8n(1+δ) + 4n(1+δ)", "8n(1+δ) + 4n(1+δ)", Fraction(12),
            0, 1, "Four", "No", "No"),
        EfficiencyReport(
            "Ref.[18]", "two-DOF SQKD, all photons in |R>|s>",
            "n", "12n(1+δ)", "4n(1+δ) + 2n(1+δ)", "4n(1+δ)×2 + 2n(1+δ)×2", Fraction(12),
            0, 2, "One", "No", "No"),
        EfficiencyReport(
            "proposed", "two-DOF SQKD over four product bases",
            "n", f"{_fmt(photons)}n(1+δ)", terms, f"{_fmt(photons)}n(1+δ)×2", photons * 2,
            0, 2, "Sixteen", "No", "No"),
    ]


EFFICIENCY_COLUMNS = ("protocol", "b_k", "b_q", "b_c", "eta", "c_q", "initial states",
                      "memory/unitary", "double CNOT")


def format_efficiency_table(rows: Sequence[EfficiencyReport]) -> str:
    """Aligned plain-text table; values come from ``EfficiencyReport.to_dict``."""
    body = []
    for r in rows:
        d = r.to_dict()
        body.append((d["protocol"], d["b_k"], d["b_q"], str(d["b_c"]), f"{d['eta_percent']:.2f}%",
                     str(d["c_q"]), d["initial_state_kinds"], d["needs_quantum_memory_or_unitary"],
                     d["double_cnot_vulnerable"]))
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(EFFICIENCY_COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(EFFICIENCY_COLUMNS, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)).rstrip() for b in body]
    return "\n".join(lines)


def efficiency_document() -> dict:
    return {"schema_version": 1, "kind": "efficiency",
            "rows": [r.to_dict() for r in efficiency_table()]}

