"""Alice/Bob round loop, security checks and key derivation.

A session prepares ``3n(1+delta)`` photons over the four product bases,
sends them one at a time through the attack, lets Bob CTRL (reflect) or SIFT
(measure in Z_p x Z_s and resend), measures the returns, runs the three
error checks and, if they pass, maps the first ``n/2`` unchecked Z_p x Z_s
SIFT rounds to ``n`` key bits.

Two modes decide how Bob's coin flips are realized:

``exact``
    Bob SIFTs exactly half of each preparation group (round half up), so
    ``|Zp*Zs and SIFT| = round(0.75 n (1+delta))`` as in the idealized counts.
    Which positions SIFT is still random.
``montecarlo``
    An independent fair coin per photon. Short batches can then fall below
    the check + key requirement and raise ``InsufficientRounds``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from . import kernels
from .adversary import CTRL, SIFT, AttackModel, NoAttack, conditional_probe_states
from .errors import InsufficientRounds
from .quantum import (
    ProductBasis,
    StateVector,
    all_bases,
    basis_stack,
    basis_state,
    fidelity_with_pure,
    holevo,
    measure,
    reduce_to_density,
    tensor,
    trace_distance,
)

SCHEMA_VERSION = 1

# Preparation multiplicity per basis, in units of n(1+delta).
PREP_COEFFICIENTS = {
    ProductBasis.ZZ: Decimal("1.5"),
    ProductBasis.ZX: Decimal("0.5"),
    ProductBasis.XZ: Decimal("0.5"),
    ProductBasis.XX: Decimal("0.5"),
}
CHECK_COEFFICIENT = Decimal("0.25")


class Mode(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "montecarlo"


class CheckGroup(str, enum.Enum):
    CTRL_CHECK = "CtrlCheck"
    NONZZ_SIFT_CHECK = "NonZZSiftCheck"
    ZZ_SIFT_CHECK = "ZZSiftCheck"
    KEY_CANDIDATE = "KeyCandidate"


CHECKED_GROUPS = (CheckGroup.CTRL_CHECK, CheckGroup.NONZZ_SIFT_CHECK, CheckGroup.ZZ_SIFT_CHECK)


def round_half_up(x: Decimal) -> int:
    return int(x.quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    delta: float = 0.1
    thresholds: tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int = 0
    mode: Mode = Mode.EXACT

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n <= 0 or self.n % 2:
            raise ValueError(f"n must be a positive even integer, got {self.n!r}")
        if not math.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"delta must be finite and >= 0, got {self.delta!r}")
        if len(self.thresholds) != 3 or any(not 0.0 <= t <= 1.0 for t in self.thresholds):
            raise ValueError(f"need three thresholds in [0, 1], got {self.thresholds!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.check_size < 1:
            raise ValueError("round(0.25 n (1+delta)) must be at least 1")

    @property
    def _scale(self) -> Decimal:
        return Decimal(int(self.n)) * (1 + Decimal(repr(float(self.delta))))

    def count(self, basis: ProductBasis) -> int:
        """Photons Alice prepares in ``basis``."""
        return round_half_up(PREP_COEFFICIENTS[basis] * self._scale)

    @property
    def counts(self) -> dict[ProductBasis, int]:
        return {b: self.count(b) for b in all_bases()}

    @property
    def total_photons(self) -> int:
        return sum(self.counts.values())

    @property
    def check_size(self) -> int:
        return round_half_up(CHECK_COEFFICIENT * self._scale)

    def sift_target(self, basis: ProductBasis) -> int:
        """SIFT count for ``basis`` in exact mode."""
        return min(self.count(basis), round_half_up(PREP_COEFFICIENTS[basis] / 2 * self._scale))

    def threshold(self, group: CheckGroup) -> float:
        return self.thresholds[CHECKED_GROUPS.index(group)]

    def to_dict(self) -> dict:
        return {"n": int(self.n), "delta": float(self.delta), "thresholds": list(self.thresholds),
                "seed": int(self.seed), "mode": self.mode.value}


@dataclass(frozen=True)
class PreparedPhoton:
    index: int
    basis: ProductBasis
    label: int

    @property
    def state(self) -> StateVector:
        return basis_state(self.basis, self.label)


@dataclass(frozen=True)
class BobAction:
    kind: str
    measured: int | None = None

    def __post_init__(self):
        if self.kind not in (CTRL, SIFT):
            raise ValueError(f"unknown action {self.kind!r}")
        if (self.kind == SIFT) != (self.measured is not None):
            raise ValueError("SIFT needs a measured label, CTRL must not have one")


@dataclass(frozen=True)
class RoundRecord:
    photon: PreparedPhoton
    bob: BobAction
    alice_return: int
    group: CheckGroup
    probe_fidelity: float = 1.0

    @property
    def alice_basis(self) -> ProductBasis:
        return self.photon.basis if self.bob.kind == CTRL else ProductBasis.ZZ

    @property
    def error(self) -> bool:
        return comparison_error(self.photon, self.bob, self.alice_return)


def comparison_error(photon: PreparedPhoton, bob: BobAction, alice: int) -> bool:
    """Whether the check applicable to this round flags an error.

    CTRL rounds compare Alice's return with the prepared label. SIFT rounds
    compare Bob's announced label with Alice's return and with every degree
    of freedom that was prepared in a Z eigenstate.
    """
    if bob.kind == CTRL:
        return alice != photon.label
    m = bob.measured
    if m != alice:
        return True
    if photon.basis.pol == "Z" and m // 2 != photon.label // 2:
        return True
    if photon.basis.spat == "Z" and m % 2 != photon.label % 2:
        return True
    return False


def _initial_group(photon: PreparedPhoton, bob: BobAction) -> CheckGroup:
    if bob.kind == CTRL:
        return CheckGroup.CTRL_CHECK
    if photon.basis is ProductBasis.ZZ:
        return CheckGroup.KEY_CANDIDATE
    return CheckGroup.NONZZ_SIFT_CHECK


@dataclass(frozen=True)
class GroupStats:
    comparisons: int
    errors: int

    @property
    def rate(self) -> float:
        return self.errors / self.comparisons if self.comparisons else 0.0


@dataclass(frozen=True)
class ErrorReport:
    groups: dict[CheckGroup, GroupStats]
    thresholds: tuple[float, float, float]
    zz_check_indices: frozenset[int] = frozenset()

    @property
    def verdict(self) -> str:
        for group, threshold in zip(CHECKED_GROUPS, self.thresholds):
            if self.groups[group].rate > threshold:
                return "Abort"
        return "Accept"

    @property
    def accepted(self) -> bool:
        return self.verdict == "Accept"

    def rates(self) -> tuple[float, float, float]:
        return tuple(self.groups[g].rate for g in CHECKED_GROUPS)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "groups": {
                g.value: {"comparisons": s.comparisons, "errors": s.errors, "rate": s.rate,
                          "threshold": t}
                for (g, s), t in zip(((g, self.groups[g]) for g in CHECKED_GROUPS), self.thresholds)
            },
        }


@dataclass(frozen=True)
class KeyBits:
    alice: str
    bob: str

    def __post_init__(self):
        if len(self.alice) != len(self.bob):
            raise ValueError("key copies differ in length")

    def __len__(self) -> int:
        return len(self.alice)

    @property
    def mismatch_rate(self) -> float:
        if not self.alice:
            return 0.0
        return sum(a != b for a, b in zip(self.alice, self.bob)) / len(self.alice)


def label_bits(label: int) -> str:
    """``Hb1 -> 00, Hb2 -> 01, Vb1 -> 10, Vb2 -> 11``."""
    return format(label, "02b")


# --------------------------------------------------------------------- steps

def prepare_batch(params: ProtocolParams, rng: np.random.Generator) -> list[PreparedPhoton]:
    """Alice's shuffled batch; the photon index is its transmission position."""
    bases, labels = [], []
    for basis in all_bases():
        c = params.count(basis)
        bases.extend([basis] * c)
        labels.extend(rng.integers(0, 4, size=c).tolist())
    order = rng.permutation(len(bases))
    return [PreparedPhoton(i, bases[j], int(labels[j])) for i, j in enumerate(order)]


def choose_bob_actions(photons: Sequence[PreparedPhoton], params: ProtocolParams,
                       rng: np.random.Generator) -> np.ndarray:
    """Boolean SIFT mask over the batch, per the session mode."""
    if params.mode is Mode.MONTE_CARLO:
        return rng.random(len(photons)) < 0.5
    sift = np.zeros(len(photons), dtype=bool)
    for basis in all_bases():
        positions = np.array([p.index for p in photons if p.basis is basis], dtype=np.int64)
        chosen = rng.permutation(positions)[:params.sift_target(basis)]
        sift[chosen] = True
    return sift


def bob_step(incoming: StateVector, rng: np.random.Generator) -> tuple[BobAction, StateVector]:
    """Bob's coin flip and action on the in-flight joint state (photon in slot 0).

    SIFT collapses the photon in Z_p x Z_s and resends a fresh photon in the
    observed state. Any probe stays in the state the collapse left it in.
    """
    if rng.random() < 0.5:
        return BobAction(CTRL), incoming
    result = measure(incoming, ProductBasis.ZZ, rng)
    return BobAction(SIFT, result.outcome), result.post_state


def alice_return_measurement(joint: StateVector, photon: PreparedPhoton, bob: BobAction,
                             rng: np.random.Generator) -> int:
    basis = photon.basis if bob.kind == CTRL else ProductBasis.ZZ
    return measure(joint, basis, rng).outcome


def play_round(photon: PreparedPhoton, attack: AttackModel, rng: np.random.Generator) -> RoundRecord:
    """One round through the quantum-core functions, without the batch kernel."""
    joint = attack.forward(tensor(photon.state, attack.initial_probe), rng)
    bob, joint = bob_step(joint, rng)
    joint = attack.backward(joint, rng)
    basis = photon.basis if bob.kind == CTRL else ProductBasis.ZZ
    result = measure(joint, basis, rng)
    fid = fidelity_with_pure(reduce_to_density(result.post_state, [1]), attack.initial_probe)
    return RoundRecord(photon, bob, result.outcome, _initial_group(photon, bob), fid)


def simulate_rounds(photons: Sequence[PreparedPhoton], sift: np.ndarray, attack: AttackModel,
                    rng: np.random.Generator, backend: str | None = None) -> list[RoundRecord]:
    """Run the sequential round loop for a batch with fixed Bob choices."""
    n = len(photons)
    uniforms = rng.random((n, 3))
    basis_idx = np.fromiter((p.basis.index for p in photons), dtype=np.int64, count=n)
    labels = np.fromiter((p.label for p in photons), dtype=np.int64, count=n)
    intercept = attack.intercept_basis.index if attack.intercept_basis is not None else -1
    fwd = np.eye(attack.joint_dim, dtype=complex) if intercept >= 0 else attack.forward_matrix
    bob, alice, fid = kernels.run_rounds(basis_stack(), basis_idx, labels, sift, uniforms, fwd,
                                         attack.backward_matrix, attack.initial_probe.amps,
                                         intercept, backend=backend)
    records = []
    for i, photon in enumerate(photons):
        action = BobAction(SIFT, int(bob[i])) if sift[i] else BobAction(CTRL)
        records.append(RoundRecord(photon, action, int(alice[i]), _initial_group(photon, action),
                                   float(fid[i])))
    return records


def run_security_check(rounds: Sequence[RoundRecord], params: ProtocolParams,
                       rng: np.random.Generator) -> tuple[ErrorReport, list[RoundRecord]]:
    """Evaluate the three error checks.

    Returns the report and the unchecked Z_p x Z_s SIFT rounds in transmission
    order. The randomly chosen check subset is recorded in
    ``ErrorReport.zz_check_indices``.
    """
    zz_sift = [r for r in rounds if r.group in (CheckGroup.KEY_CANDIDATE, CheckGroup.ZZ_SIFT_CHECK)]
    required = params.check_size + params.n // 2
    if len(zz_sift) < required:
        raise InsufficientRounds(len(zz_sift), required, params.delta)
    picked = rng.permutation(len(zz_sift))[:params.check_size]
    check_idx = frozenset(zz_sift[i].photon.index for i in picked)

    tallies = {g: [0, 0] for g in CHECKED_GROUPS}
    candidates = []
    for r in rounds:
        group = r.group
        if group in (CheckGroup.KEY_CANDIDATE, CheckGroup.ZZ_SIFT_CHECK):
            if r.photon.index not in check_idx:
                candidates.append(r)
                continue
            group = CheckGroup.ZZ_SIFT_CHECK
        tallies[group][0] += 1
        tallies[group][1] += r.error
    report = ErrorReport({g: GroupStats(*tallies[g]) for g in CHECKED_GROUPS}, params.thresholds,
                         check_idx)
    return report, candidates


def classify(rounds: Sequence[RoundRecord], report: ErrorReport) -> list[RoundRecord]:
    """Rounds with their final check group assigned."""
    out = []
    for r in rounds:
        if r.photon.index in report.zz_check_indices:
            r = RoundRecord(r.photon, r.bob, r.alice_return, CheckGroup.ZZ_SIFT_CHECK, r.probe_fidelity)
        out.append(r)
    return out


def derive_key(key_candidates: Sequence[RoundRecord], n: int) -> KeyBits:
    """Both parties' key copies from the first ``n/2`` candidates.

    Bob keys off his SIFT record, Alice off her Z_p x Z_s return measurement.
    """
    if len(key_candidates) < n // 2:
        raise InsufficientRounds(len(key_candidates), n // 2)
    used = key_candidates[:n // 2]
    return KeyBits("".join(label_bits(r.alice_return) for r in used),
                   "".join(label_bits(r.bob.measured) for r in used))


# ------------------------------------------------------------------- session

@dataclass(frozen=True)
class SessionReport:
    params: ProtocolParams
    attack: dict
    errors: ErrorReport
    key: KeyBits | None
    transcript: list[RoundRecord] = field(repr=False)
    eve: dict

    @property
    def verdict(self) -> str:
        return self.errors.verdict

    @property
    def counts(self) -> dict[str, int]:
        out = {g.value: 0 for g in CheckGroup}
        for r in self.transcript:
            out[r.group.value] += 1
        out["photons"] = len(self.transcript)
        out["zz_sift"] = out[CheckGroup.ZZ_SIFT_CHECK.value] + out[CheckGroup.KEY_CANDIDATE.value]
        return out

    def summary_line(self) -> str:
        rates = "/".join(f"{r:.4g}" for r in self.errors.rates())
        if self.key is None:
            return f"{self.verdict} rates={rates} key=none"
        return (f"{self.verdict} rates={rates} key={len(self.key)} bits "
                f"mismatch={self.key.mismatch_rate:.4g}")

    def to_dict(self) -> dict:
        key = None
        if self.key is not None:
            key = {"length": len(self.key), "alice": self.key.alice, "bob": self.key.bob,
                   "mismatch_rate": self.key.mismatch_rate}
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "session",
            "params": self.params.to_dict(),
            "attack": self.attack,
            **self.errors.to_dict(),
            "counts": self.counts,
            "key": key,
            "eve": self.eve,
        }


TRANSCRIPT_FIELDS = ("index", "basis", "prepared_label", "bob_action", "bob_label",
                     "alice_label", "group", "error_flag")


def transcript_rows(rounds: Sequence[RoundRecord]):
    """CSV rows for a transcript. For key candidates ``error_flag`` marks an
    Alice/Bob record mismatch; for checked rounds it is the check outcome."""
    for r in rounds:
        if r.group is CheckGroup.KEY_CANDIDATE:
            flag = r.alice_return != r.bob.measured
        else:
            flag = r.error
        yield {
            "index": r.photon.index,
            "basis": r.photon.basis.short,
            "prepared_label": r.photon.basis.label_name(r.photon.label),
            "bob_action": r.bob.kind,
            "bob_label": "" if r.bob.measured is None else ProductBasis.ZZ.label_name(r.bob.measured),
            "alice_label": r.alice_basis.label_name(r.alice_return),
            "group": r.group.value,
            "error_flag": int(flag),
        }


def eve_metrics(attack: AttackModel, rounds: Sequence[RoundRecord]) -> dict:
    """Exact probe information on key rounds plus the observed probe restoration."""
    sift_states = conditional_probe_states(attack, SIFT)
    ctrl_states = conditional_probe_states(attack, CTRL)
    states = list(sift_states.values()) + list(ctrl_states.values())
    max_td = max(trace_distance(a, b) for i, a in enumerate(states) for b in states[i + 1:])
    chi = holevo([(0.25, sift_states[k]) for k in range(4)])
    fids = [r.probe_fidelity for r in rounds]
    return {
        "holevo_bits": chi,
        "max_probe_trace_distance": max_td,
        "min_probe_fidelity_to_initial": min(fids) if fids else 1.0,
    }


def run_session(params: ProtocolParams, attack: AttackModel | None = None,
                backend: str | None = None) -> SessionReport:
    """Prepare, transmit, check and (on Accept) derive the key.

    Deterministic given ``params.seed`` and the attack.
    """
    attack = attack if attack is not None else NoAttack()
    rng = np.random.default_rng(int(params.seed))
    photons = prepare_batch(params, rng)
    sift = choose_bob_actions(photons, params, rng)
    rounds = simulate_rounds(photons, sift, attack, rng, backend)
    report, candidates = run_security_check(rounds, params, rng)
    key = derive_key(candidates, params.n) if report.accepted else None
    return SessionReport(params, attack.describe(), report, key, classify(rounds, report),
                         eve_metrics(attack, rounds))


def estimate_detection(attack: AttackModel, basis: ProductBasis, label: int, action: str,
                       rounds: int, rng: np.random.Generator,
                       backend: str | None = None) -> float:
    """Monte-Carlo error frequency for one (prepared state, Bob action) cell."""
    photons = [PreparedPhoton(i, basis, label) for i in range(rounds)]
    sift = np.full(rounds, action == SIFT)
    records = simulate_rounds(photons, sift, attack, rng, backend)
    return sum(r.error for r in records) / rounds
